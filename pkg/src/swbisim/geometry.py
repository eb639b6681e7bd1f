"""Polytopes and bounded semi-linear sets in H-representation.

A :class:`Cell` is a convex set cut out by closed (``a.x <= b``) and strict
(``a.x < b``) half-spaces; a :class:`Region` is a list of pairwise disjoint
cells.  All predicates are decided with the LP core in :mod:`swbisim.lp`.

Cells whose interior is thinner than ``TOL.strict`` are treated as empty, so
lower-dimensional pieces (shared facets and the like) never survive as
partition elements.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .lp import INFEASIBLE, OPTIMAL, UNBOUNDED, lp_arrays


@dataclass
class Tolerances:
    feas: float = 1e-9
    strict: float = 1e-8
    coef: float = 1e-10


TOL = Tolerances()


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class LinearConstraint:
    """``a.x <= b`` (or ``a.x < b`` when ``strict``)."""

    a: tuple
    b: float
    strict: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        object.__setattr__(self, "b", float(self.b))

    def holds(self, x) -> bool:
        v = float(np.dot(self.a, x))
        return v < self.b if self.strict else v <= self.b

    def negated(self) -> "LinearConstraint":
        return LinearConstraint(tuple(-v for v in self.a), -self.b, not self.strict)


def _check_dim(n1: int, n2: int) -> None:
    if n1 != n2:
        raise GeometryError(f"dimension mismatch: {n1} vs {n2}")


class Polytope:
    """Closed polytope ``{x | H x <= h}``."""

    def __init__(self, H, h):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        h = np.asarray(h, dtype=float).reshape(-1)
        if H.shape[0] != h.shape[0]:
            raise GeometryError(f"H has {H.shape[0]} rows but h has {h.shape[0]}")
        self.H = H
        self.h = h

    @property
    def dim(self) -> int:
        return self.H.shape[1]

    def to_cell(self) -> "Cell":
        return Cell(self.H, self.h, np.zeros(len(self.h), dtype=bool))

    def contains(self, x, tol: float = 0.0) -> bool:
        return bool(np.all(self.H @ np.asarray(x, dtype=float) <= self.h + tol))

    def is_bounded(self) -> bool:
        return self.to_cell().bounding_box() is not None

    def __repr__(self):
        return f"Polytope(rows={len(self.h)}, dim={self.dim})"


def _normalize(A, b, strict):
    """Scale rows to unit infinity norm and merge parallel duplicates."""
    n = A.shape[1]
    if A.shape[0] == 0:
        return A, b, strict
    scale = np.abs(A).max(axis=1)
    zero = scale <= TOL.coef
    if np.any(zero):
        zb = b[zero]
        zs = strict[zero]
        violated = np.any((zb < 0) | ((zb <= 0) & zs))
        keep = ~zero
        A, b, strict, scale = A[keep], b[keep], strict[keep], scale[keep]
        if violated:
            A = np.vstack([A, np.zeros((1, n))])
            b = np.append(b, -1.0)
            strict = np.append(strict, False)
            scale = np.append(scale, 1.0)
    A = A / scale[:, None]
    b = b / scale
    k = A.shape[0]
    if k > 1:
        same = np.abs(A[:, None, :] - A[None, :, :]).max(axis=2) <= TOL.coef
        if same.sum() > k:
            out_rows = []
            done = np.zeros(k, dtype=bool)
            for i in range(k):
                if done[i]:
                    continue
                grp = np.flatnonzero(same[i] & ~done)
                done[grp] = True
                bmin = b[grp].min()
                tight = grp[b[grp] <= bmin + TOL.coef]
                out_rows.append((grp[0], bmin, bool(strict[tight].any())))
            idx = np.array([r[0] for r in out_rows])
            A = A[idx]
            b = np.array([r[1] for r in out_rows])
            strict = np.array([r[2] for r in out_rows], dtype=bool)
    return A, b, strict


class Cell:
    """Convex semi-linear set; rows of ``A x (<|<=) b`` selected by ``strict``.

    Instances are treated as immutable; derived quantities (emptiness,
    bounding box, interior point) are cached on first use.
    """

    __slots__ = ("A", "b", "strict", "_empty", "_bbox", "_interior")

    def __init__(self, A, b, strict=None, normalize=True, dim=None):
        A = np.asarray(A, dtype=float)
        if A.ndim == 1:
            A = A.reshape(0 if A.size == 0 else 1, -1) if dim is None else A.reshape(-1, dim)
        if A.shape[0] == 0 and dim is not None:
            A = A.reshape(0, dim)
        b = np.asarray(b, dtype=float).reshape(-1)
        strict = (
            np.zeros(len(b), dtype=bool)
            if strict is None
            else np.asarray(strict, dtype=bool).reshape(-1)
        )
        if not (A.shape[0] == len(b) == len(strict)):
            raise GeometryError("constraint arrays disagree in length")
        if normalize:
            A, b, strict = _normalize(A, b, strict)
        for arr in (A, b, strict):
            arr.setflags(write=False)
        self.A, self.b, self.strict = A, b, strict
        self._empty = None
        self._bbox = None
        self._interior = None

    @classmethod
    def from_constraints(cls, constraints, dim: int) -> "Cell":
        if not constraints:
            return cls.whole_space(dim)
        for g in constraints:
            _check_dim(len(g.a), dim)
        return cls(
            np.array([g.a for g in constraints]),
            np.array([g.b for g in constraints]),
            np.array([g.strict for g in constraints]),
        )

    @classmethod
    def whole_space(cls, dim: int) -> "Cell":
        return cls(np.zeros((0, dim)), np.zeros(0), np.zeros(0, dtype=bool))

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def constraints(self) -> list[LinearConstraint]:
        return [
            LinearConstraint(tuple(a), float(b), bool(s))
            for a, b, s in zip(self.A, self.b, self.strict)
        ]

    def __len__(self):
        return len(self.b)

    def __repr__(self):
        return f"Cell(rows={len(self.b)}, strict={int(self.strict.sum())}, dim={self.dim})"

    def contains(self, x) -> bool:
        return bool(self.contains_points(np.asarray(x, dtype=float)[None, :])[0])

    def contains_points(self, X) -> np.ndarray:
        """Vectorized exact membership for an ``(m, n)`` array of points."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if len(self.b) == 0:
            return np.ones(X.shape[0], dtype=bool)
        v = X @ self.A.T
        ok = np.where(self.strict, v < self.b, v <= self.b)
        return ok.all(axis=1)

    def _slack_lp(self):
        """Largest uniform slack ``t <= 1`` with ``A x + t <= b``."""
        n = self.dim
        k = len(self.b)
        A = np.zeros((k + 1, n + 1))
        A[:k, :n] = self.A
        A[:k, n] = 1.0
        A[k, n] = 1.0
        b = np.append(self.b, 1.0)
        c = np.zeros(n + 1)
        c[n] = 1.0
        status, value, x = lp_arrays(A, b, c, tol_feas=TOL.feas)
        if status != OPTIMAL:
            return -math.inf, None
        return value, x[:n]

    def is_empty(self) -> bool:
        if self._empty is None:
            if len(self.b) == 0:
                self._empty = False
                self._interior = np.zeros(self.dim)
            else:
                t, x = self._slack_lp()
                self._empty = not (t > TOL.strict)
                self._interior = None if self._empty else x
        return self._empty

    def interior_point(self):
        """A point with slack above ``TOL.strict`` on every row, or None."""
        if self.is_empty():
            return None
        return self._interior

    def maximize(self, c):
        """``(status, value, point)`` for max ``c.x`` over the closure."""
        c = np.asarray(c, dtype=float)
        _check_dim(len(c), self.dim)
        status, value, x = lp_arrays(self.A, self.b, c, tol_feas=TOL.feas)
        return status, value, x

    def bounding_box(self):
        """``(lo, hi)`` arrays, or None when unbounded.  Raises if empty."""
        if self._bbox is None:
            n = self.dim
            lo = np.empty(n)
            hi = np.empty(n)
            for i in range(n):
                e = np.zeros(n)
                e[i] = 1.0
                for sgn in (1.0, -1.0):
                    status, value, _ = lp_arrays(self.A, self.b, sgn * e, tol_feas=TOL.feas)
                    if status == UNBOUNDED:
                        self._bbox = False
                        return None
                    if status == INFEASIBLE:
                        raise GeometryError("bounding box of an empty cell")
                    if sgn > 0:
                        hi[i] = value
                    else:
                        lo[i] = -value
            lo.setflags(write=False)
            hi.setflags(write=False)
            self._bbox = (lo, hi)
        return self._bbox if self._bbox is not False else None

    def satisfies(self, g_a, g_b) -> bool:
        """True when every point of the closure satisfies ``g_a.x <= g_b``."""
        status, value, _ = lp_arrays(self.A, self.b, np.asarray(g_a, float), tol_feas=TOL.feas)
        if status == INFEASIBLE:
            return True
        if status == UNBOUNDED:
            return False
        return value <= g_b + TOL.feas

    def reduced(self) -> "Cell":
        """Same set (up to boundaries) with redundant rows removed."""
        k = len(self.b)
        if k <= self.dim + 1:
            return self
        keep = np.ones(k, dtype=bool)
        for i in range(k):
            keep[i] = False
            A = np.vstack([self.A[keep], self.A[i]])
            b = np.append(self.b[keep], self.b[i] + 1.0)
            status, value, _ = lp_arrays(A, b, self.A[i], tol_feas=TOL.feas)
            if status != OPTIMAL or value > self.b[i] + TOL.feas:
                keep[i] = True
        if keep.all():
            return self
        out = Cell(self.A[keep], self.b[keep], self.strict[keep], normalize=False)
        out._empty = self._empty
        out._interior = self._interior
        out._bbox = self._bbox
        return out


def intersect(a: Cell, b: Cell) -> Cell:
    _check_dim(a.dim, b.dim)
    return Cell(
        np.vstack([a.A, b.A]),
        np.concatenate([a.b, b.b]),
        np.concatenate([a.strict, b.strict]),
    )


def is_empty(c: Cell) -> bool:
    return c.is_empty()


def boxes_overlap(a: Cell, b: Cell) -> bool:
    if a.is_empty() or b.is_empty():
        return False
    ba, bb = a.bounding_box(), b.bounding_box()
    if ba is None or bb is None:
        return True
    tol = 10 * TOL.feas
    return bool(np.all(ba[0] <= bb[1] + tol) and np.all(bb[0] <= ba[1] + tol))


def difference(a: Cell, b: Cell) -> "Region":
    """``a \\ b`` as disjoint cells, flipping ``b``'s rows in listed order.

    Piece ``i`` is ``a`` with rows ``0..i-1`` of ``b`` imposed and row ``i``
    violated.  Rows whose violation leaves nothing of ``a`` are skipped
    (their piece would be empty and the row is implied on ``a``).
    """
    _check_dim(a.dim, b.dim)
    if a.is_empty():
        return Region([], a.dim)
    if len(b.b) == 0:
        return Region([], a.dim)
    if b.is_empty():
        return Region([a], a.dim)
    if not boxes_overlap(a, b) or intersect(a, b).is_empty():
        return Region([a], a.dim)
    pieces = []
    cur = a
    for i in range(len(b.b)):
        row, rhs, st = b.A[i], b.b[i], b.strict[i]
        flipped = Cell(
            np.vstack([cur.A, -row]),
            np.append(cur.b, -rhs),
            np.append(cur.strict, not st),
        )
        if flipped.is_empty():
            continue
        pieces.append(flipped)
        cur = Cell(
            np.vstack([cur.A, row]),
            np.append(cur.b, rhs),
            np.append(cur.strict, st),
        )
    return Region(pieces, a.dim)


def preimage(c: Cell, A) -> Cell:
    """``{x | A x in c}``."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise GeometryError(f"expected a square matrix, got shape {A.shape}")
    _check_dim(A.shape[0], c.dim)
    return Cell(c.A @ A, c.b, c.strict)


class Region:
    """Finite union of pairwise disjoint, nonempty cells."""

    __slots__ = ("cells", "dim")

    def __init__(self, cells, dim=None):
        cells = [c for c in cells if not c.is_empty()]
        if dim is None:
            if not cells:
                raise GeometryError("dimension of an empty region must be given")
            dim = cells[0].dim
        for c in cells:
            _check_dim(c.dim, dim)
        self.cells = cells
        self.dim = dim

    @classmethod
    def of(cls, cell: Cell) -> "Region":
        return cls([cell], cell.dim)

    def __iter__(self):
        return iter(self.cells)

    def __len__(self):
        return len(self.cells)

    def __bool__(self):
        return bool(self.cells)

    def __repr__(self):
        return f"Region(cells={len(self.cells)}, dim={self.dim})"

    def is_empty(self) -> bool:
        return not self.cells

    def contains_points(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(X.shape[0], dtype=bool)
        for c in self.cells:
            out |= c.contains_points(X)
        return out

    def contains(self, x) -> bool:
        return contains_point(self, x)

    def bounding_box(self):
        if not self.cells:
            return None
        boxes = [c.bounding_box() for c in self.cells]
        if any(bx is None for bx in boxes):
            return None
        return (
            np.min([bx[0] for bx in boxes], axis=0),
            np.max([bx[1] for bx in boxes], axis=0),
        )


def contains_point(r: Region, x) -> bool:
    x = np.asarray(x, dtype=float)
    _check_dim(len(x), r.dim)
    return any(c.contains(x) for c in r.cells)


def region_intersect(r: Region, c: Cell) -> Region:
    _check_dim(r.dim, c.dim)
    out = []
    for rc in r.cells:
        if not boxes_overlap(rc, c):
            continue
        out.append(intersect(rc, c))
    return Region(out, r.dim)


def region_difference(r: Region, s: Region) -> Region:
    _check_dim(r.dim, s.dim)
    cells = list(r.cells)
    for sc in s.cells:
        nxt = []
        for c in cells:
            nxt.extend(difference(c, sc).cells)
        cells = nxt
    return Region(cells, r.dim)


def region_union_disjoint(regions, dim) -> Region:
    cells = []
    for r in regions:
        cells.extend(r.cells)
    return Region(cells, dim)


def vertices_2d(p) -> np.ndarray:
    """Counterclockwise vertices of a bounded, full-dimensional 2D polytope."""
    if isinstance(p, Polytope):
        H, h = p.H, p.h
    else:
        H, h = p.A, p.b
    if H.shape[1] != 2:
        raise GeometryError(f"vertices_2d needs a planar set, got dimension {H.shape[1]}")
    cell = p.to_cell() if isinstance(p, Polytope) else p
    if cell.bounding_box() is None:
        raise GeometryError("polytope is unbounded")
    tol = max(TOL.feas, 1e-9) * 10
    pts = []
    for i, j in itertools.combinations(range(len(h)), 2):
        M = H[[i, j]]
        det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
        if abs(det) < 1e-12:
            continue
        v = np.linalg.solve(M, h[[i, j]])
        if np.all(H @ v <= h + tol):
            if not any(np.abs(v - q).max() <= 1e-7 for q in pts):
                pts.append(v)
    if len(pts) < 3:
        raise GeometryError("polytope is not full-dimensional")
    pts = np.array(pts)
    ctr = pts.mean(axis=0)
    order = np.argsort(np.arctan2(pts[:, 1] - ctr[1], pts[:, 0] - ctr[0]))
    pts = pts[order]
    x, y = pts[:, 0], pts[:, 1]
    area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    if area <= 1e-12:
        raise GeometryError("polytope is not full-dimensional")
    return pts


def sample_cell(c: Cell, k: int, rng, burn: int = 10) -> np.ndarray:
    """``k`` approximately uniform points of a bounded cell (hit-and-run)."""
    x = c.interior_point()
    if x is None:
        raise GeometryError("cannot sample an empty cell")
    x = np.array(x, dtype=float)
    n = c.dim
    out = np.empty((k, n))
    A, b = c.A, c.b
    for s in range(k * burn + burn * 5):
        d = rng.normal(size=n)
        d /= np.linalg.norm(d)
        ad = A @ d
        slack = b - A @ x
        with np.errstate(divide="ignore", invalid="ignore"):
            t = slack / ad
        tmax = np.min(t[ad > 1e-15], initial=np.inf)
        tmin = np.max(t[ad < -1e-15], initial=-np.inf)
        if not (np.isfinite(tmax) and np.isfinite(tmin)):
            raise GeometryError("cannot sample an unbounded cell")
        y = x + rng.uniform(tmin, tmax) * d
        if c.contains(y):
            x = y
        j = s - burn * 5
        if j >= 0 and j % burn == 0:
            out[j // burn] = x
    return out


def sample_region(r: Region, k: int, rng) -> np.ndarray:
    """Points drawn from the cells of ``r`` proportionally to box volume."""
    if not r.cells:
        raise GeometryError("cannot sample an empty region")
    w = []
    for c in r.cells:
        lo, hi = c.bounding_box()
        w.append(float(np.prod(np.maximum(hi - lo, 1e-12))))
    w = np.array(w) / sum(w)
    counts = rng.multinomial(k, w)
    parts = [sample_cell(c, m, rng) for c, m in zip(r.cells, counts) if m]
    return np.vstack(parts)
