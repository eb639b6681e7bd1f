"""Finite bisimulation quotients of switched linear systems.

The embedding transition system has the points of ``X`` as states; outside
the target set ``D`` the input ``sigma`` applies ``A_sigma``, inside ``D`` every
input is a self-loop.  :class:`QuotientBuilder` partitions ``X`` into the
slices between consecutive Lyapunov sublevel sets and refines slice by slice,
from the inside out, with respect to preimages of already finished states.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    TOL,
    Cell,
    GeometryError,
    Polytope,
    Region,
    intersect,
    preimage,
    region_difference,
)
from .lyapunov import (
    PolyhedralLF,
    SliceSet,
    build_slices,
    certify_contraction,
    gamma_sequence,
    sublevel_polytope,
)

log = logging.getLogger(__name__)

TARGET = "D"
EMPTY = "∅"


class SpecError(ValueError):
    """Invalid problem data."""


class CertificationError(SpecError):
    """The declared contraction rate is not certified for the modes."""


class AbstractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProblemSpec:
    modes: dict
    lf: PolyhedralLF
    gamma_X: float
    gamma_D: float
    regions: dict = field(default_factory=dict)
    formula: str | None = None

    def __post_init__(self):
        modes = {}
        for k, A in self.modes.items():
            A = np.array(A, dtype=float)
            A.setflags(write=False)
            modes[str(k)] = A
        object.__setattr__(self, "modes", modes)
        regions = {}
        for k, P in self.regions.items():
            regions[str(k)] = P if isinstance(P, Polytope) else Polytope(*P)
        object.__setattr__(self, "regions", regions)

    @property
    def n(self) -> int:
        return self.lf.n

    @property
    def sigma(self) -> tuple:
        return tuple(self.modes)

    @property
    def X(self) -> Polytope:
        return sublevel_polytope(self.lf.L, self.gamma_X)

    @property
    def D(self) -> Polytope:
        return sublevel_polytope(self.lf.L, self.gamma_D)

    @property
    def letters(self) -> tuple:
        """Observation alphabet: region labels, the empty observation, ``D``."""
        return tuple(self.regions) + (EMPTY, TARGET)

    def validate(self, tol: float = 1e-9) -> float:
        """Check the set assumptions and the contraction certificate.

        Returns the certified rate.  Raises :class:`SpecError` (or its
        subclass :class:`CertificationError`) on failure.
        """
        n = self.n
        if not self.modes:
            raise SpecError("no modes")
        for k, A in self.modes.items():
            if A.shape != (n, n):
                raise SpecError(f"modes.{k}: expected {n}x{n}, got {A.shape}")
        if not 0 < self.gamma_D < self.gamma_X:
            raise SpecError("need 0 < gamma_D < gamma_X")
        if TARGET in self.regions or EMPTY in self.regions:
            raise SpecError(f"region labels {TARGET!r} and {EMPTY!r} are reserved")
        X = self.X.to_cell()
        D = self.D.to_cell()
        cells = {}
        for k, P in self.regions.items():
            if P.dim != n:
                raise SpecError(f"regions.{k}: dimension {P.dim}, expected {n}")
            c = P.to_cell()
            if c.is_empty():
                raise SpecError(f"regions.{k}: empty")
            if not all(c.satisfies(a, b) for a, b in zip(X.A, X.b)):
                raise SpecError(f"regions.{k}: not contained in X")
            if not intersect(c, D).is_empty():
                raise SpecError(f"regions.{k}: intersects D")
            cells[k] = c
        labels = list(cells)
        for i in range(len(labels)):
            for j in range(i + 1, len(labels)):
                if not intersect(cells[labels[i]], cells[labels[j]]).is_empty():
                    raise SpecError(f"regions {labels[i]} and {labels[j]} overlap")
        rho_star = certify_contraction(self.lf.L, self.modes.values())
        if rho_star > self.lf.rho + tol:
            raise CertificationError(
                f"certified rate {rho_star:.10g} exceeds declared rho {self.lf.rho:.10g}"
            )
        return rho_star

    def with_rho(self, rho: float) -> "ProblemSpec":
        return ProblemSpec(
            self.modes, PolyhedralLF(self.lf.L, rho), self.gamma_X, self.gamma_D,
            self.regions, self.formula,
        )


def observation_of(x, spec: ProblemSpec) -> str:
    x = np.asarray(x, dtype=float)
    v = spec.lf(x)
    if v > spec.gamma_X:
        raise SpecError(f"point {x} lies outside X")
    if v <= spec.gamma_D:
        return TARGET
    for k, P in spec.regions.items():
        if P.contains(x):
            return k
    return EMPTY


def observations_of(X, spec: ProblemSpec) -> np.ndarray:
    """Vectorized :func:`observation_of` (object array of labels)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    v = spec.lf(X)
    if np.any(v > spec.gamma_X):
        raise SpecError("points outside X")
    out = np.full(X.shape[0], EMPTY, dtype=object)
    for k, P in spec.regions.items():
        inside = np.all(X @ P.H.T <= P.h, axis=1)
        out[inside] = k
    out[v <= spec.gamma_D] = TARGET
    return out


@dataclass(frozen=True)
class QuotientState:
    id: int
    region: Region
    slice: int
    obs: str


class QuotientTS:
    """Finite transition system over partition classes.

    ``transitions`` is a set of ``(source, sigma, target)`` triples.
    """

    def __init__(self, states, sigma, transitions, d_state):
        self.states = list(states)
        self.sigma = tuple(sigma)
        self.transitions = frozenset(transitions)
        self.d_state = d_state
        succ = {s.id: {a: [] for a in self.sigma} for s in self.states}
        for q, a, t in sorted(self.transitions, key=lambda e: (e[0], self.sigma.index(e[1]), e[2])):
            succ[q][a].append(t)
        self.succ = {q: {a: tuple(v) for a, v in m.items()} for q, m in succ.items()}
        self._boxes = None

    def __len__(self):
        return len(self.states)

    def successors(self, q: int, sigma=None) -> tuple:
        if sigma is None:
            return tuple(sorted({t for ts in self.succ[q].values() for t in ts}))
        return self.succ[q][sigma]

    def label(self, q: int) -> str:
        return self.states[q].obs

    def is_deterministic(self) -> bool:
        return all(len(v) <= 1 for m in self.succ.values() for v in m.values())

    def is_non_blocking(self) -> bool:
        return all(len(v) >= 1 for m in self.succ.values() for v in m.values())

    def slice_counts(self) -> dict:
        counts = {}
        for s in self.states:
            counts[s.slice] = counts.get(s.slice, 0) + 1
        return dict(sorted(counts.items()))

    def _state_boxes(self):
        if self._boxes is None:
            lo = np.array([s.region.bounding_box()[0] for s in self.states])
            hi = np.array([s.region.bounding_box()[1] for s in self.states])
            self._boxes = (lo, hi)
        return self._boxes

    def locate_points(self, X) -> np.ndarray:
        """State id containing each point, ``-1`` if none."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo, hi = self._state_boxes()
        out = np.full(X.shape[0], -1, dtype=np.int64)
        for s in self.states:
            inbox = np.all((X >= lo[s.id] - 1e-9) & (X <= hi[s.id] + 1e-9), axis=1)
            idx = np.flatnonzero(inbox & (out < 0))
            if idx.size:
                hit = s.region.contains_points(X[idx])
                out[idx[hit]] = s.id
        return out

    def locate(self, x) -> int:
        return int(self.locate_points(np.asarray(x, dtype=float)[None, :])[0])

    def monotone_violations(self) -> list:
        """Transitions leaving slice ``i >= 1`` without dropping to a lower slice."""
        bad = []
        for q, a, t in sorted(self.transitions, key=lambda e: (e[0], str(e[1]), e[2])):
            si = self.states[q].slice
            if si >= 1 and self.states[t].slice >= si:
                bad.append((q, a, t))
        return bad


def arbitrary_switching_view(T: QuotientTS, eps: str = "ε") -> QuotientTS:
    """Erase inputs: ``(q, eps, q')`` whenever some ``(q, sigma, q')`` exists."""
    trans = {(q, eps, t) for q, _, t in T.transitions}
    return QuotientTS(T.states, (eps,), trans, T.d_state)


def compute_pre(target: Region, A) -> Region:
    """Union of cell preimages under ``A``: ``{x | A x in target}``."""
    return Region([preimage(c, A) for c in target.cells], target.dim)


def _box_of(c: Cell):
    bb = c.bounding_box()
    if bb is None:
        n = c.dim
        return np.full(n, -np.inf), np.full(n, np.inf)
    return bb


class QuotientBuilder:
    """Mutable partition plus transition relation driven by the slice loop.

    States are identified by creation order; :meth:`finish` renumbers them
    by ``(slice, creation order)``.
    """

    def __init__(self, spec: ProblemSpec, slices: SliceSet | None = None,
                 max_states: int = 1_000_000, check: bool = True):
        self.spec = spec
        if check:
            self.rho_star = spec.validate()
        else:
            self.rho_star = None
        self.gammas = gamma_sequence(spec.gamma_D, spec.gamma_X, spec.lf.rho)
        self.slices = slices if slices is not None else build_slices(spec.lf.L, self.gammas)
        self.max_states = max_states
        self.sigma = spec.sigma
        self._cells: dict[int, list] = {}
        self._slice: dict[int, int] = {}
        self._obs: dict[int, str] = {}
        self._succ: dict[int, dict] = {}
        self._alive: set[int] = set()
        self._lo = np.zeros((64, spec.n))
        self._hi = np.zeros((64, spec.n))
        self._live = np.zeros(64, dtype=bool)
        self._slice_arr = np.zeros(64, dtype=np.int64)
        self._next = 0
        self.d_state = None
        self.splits = 0

    # state bookkeeping ---------------------------------------------------
    def _new_state(self, cells, slc, obs, succ=None) -> int:
        q = self._next
        self._next += 1
        if q >= len(self._live):
            grow = len(self._live)
            self._lo = np.vstack([self._lo, np.zeros_like(self._lo[:grow])])
            self._hi = np.vstack([self._hi, np.zeros_like(self._hi[:grow])])
            self._live = np.concatenate([self._live, np.zeros(grow, dtype=bool)])
            self._slice_arr = np.concatenate([self._slice_arr, np.zeros(grow, dtype=np.int64)])
        if len(self._alive) >= self.max_states:
            raise AbstractionError(f"state cap of {self.max_states} exceeded")
        self._cells[q] = cells
        self._slice[q] = slc
        self._obs[q] = obs
        self._succ[q] = dict(succ or {})
        self._alive.add(q)
        boxes = [_box_of(c) for c in cells]
        self._lo[q] = np.min([b[0] for b in boxes], axis=0)
        self._hi[q] = np.max([b[1] for b in boxes], axis=0)
        self._live[q] = True
        self._slice_arr[q] = slc
        return q

    def _kill(self, q: int) -> None:
        self._alive.discard(q)
        self._live[q] = False
        del self._cells[q]

    def region(self, q: int) -> Region:
        return Region(self._cells[q], self.spec.n)

    def states_in_slice(self, i: int) -> list[int]:
        return sorted(q for q in self._alive if self._slice[q] == i)

    # refinement steps --------------------------------------------------------
    def initial_partition(self) -> list[QuotientState]:
        """Intersect ``{R_i}, X \\ (D u R), D`` with the slices."""
        n = self.spec.n
        region_cells = {k: P.to_cell() for k, P in self.spec.regions.items()}
        d_cells = list(self.slices[0].cells)
        self.d_state = self._new_state(d_cells, 0, TARGET)
        self._succ[self.d_state] = {a: self.d_state for a in self.sigma}
        for j in range(1, len(self.slices)):
            sl = self.slices[j]
            for k, rc in region_cells.items():
                cells = [intersect(c, rc) for c in sl.cells]
                cells = [c.reduced() for c in cells if not c.is_empty()]
                if cells:
                    self._new_state(cells, j, k)
            rest = sl
            for rc in region_cells.values():
                rest = region_difference(rest, Region.of(rc))
            if rest:
                self._new_state([c.reduced() for c in rest.cells], j, EMPTY)
        return [
            QuotientState(q, self.region(q), self._slice[q], self._obs[q])
            for q in sorted(self._alive)
        ]

    def compute_pre(self, target: Region, sigma) -> Region:
        if sigma not in self.spec.modes:
            raise AbstractionError(f"unknown input {sigma!r}")
        return compute_pre(target, self.spec.modes[sigma])

    def _candidates(self, lo, hi, above: int) -> np.ndarray:
        m = self._next
        tol = 1e-9
        mask = (
            self._live[:m]
            & (self._slice_arr[:m] > above)
            & np.all(self._lo[:m] <= hi + tol, axis=1)
            & np.all(self._hi[:m] >= lo - tol, axis=1)
        )
        return np.flatnonzero(mask)

    def refine_update(self, pre: Region, sigma, q: int) -> None:
        """Split every state meeting ``pre`` and wire the inside part to ``q``.

        Only states outside ``D`` in slices above ``q``'s are examined:
        the dynamics are frozen inside ``D``, and with a certified contraction
        rate the preimage of slice ``i`` lies beyond ``P_{Γ_i}``.
        """
        if not pre:
            return
        boxes = [_box_of(p) for p in pre.cells]
        lo = np.min([b[0] for b in boxes], axis=0)
        hi = np.max([b[1] for b in boxes], axis=0)
        for qq in self._candidates(lo, hi, max(self._slice[q], 0)):
            qq = int(qq)
            inside = []
            touched = []
            for c in self._cells[qq]:
                cbox = _box_of(c)
                hits = []
                for p, pb in zip(pre.cells, boxes):
                    if np.all(cbox[0] <= pb[1] + 1e-9) and np.all(pb[0] <= cbox[1] + 1e-9):
                        inter = intersect(c, p)
                        if not inter.is_empty():
                            inside.append(inter)
                            hits.append(p)
                touched.append(hits)
            if not inside:
                continue
            outside = []
            for c, hits in zip(self._cells[qq], touched):
                if hits:
                    outside.extend(region_difference(Region.of(c), Region(hits, c.dim)).cells)
                else:
                    outside.append(c)
            if not outside:
                prev = self._succ[qq].get(sigma)
                if prev is not None and prev != q:
                    raise AbstractionError(
                        f"state {qq} already has a {sigma!r}-successor {prev}, not {q}"
                    )
                self._succ[qq][sigma] = q
                continue
            if sigma in self._succ[qq]:
                raise AbstractionError(
                    f"state {qq} with a {sigma!r}-successor meets another preimage"
                )
            slc, obs, succ = self._slice[qq], self._obs[qq], self._succ[qq]
            self._kill(qq)
            q1 = self._new_state([c.reduced() for c in inside], slc, obs, succ)
            self._succ[q1][sigma] = q
            self._new_state([c.reduced() for c in outside], slc, obs, succ)
            self.splits += 1

    def run(self, progress=None):
        if self.d_state is None:
            self.initial_partition()
        N = len(self.slices) - 1
        for i in range(N):
            for q in self.states_in_slice(i):
                for a in self.sigma:
                    pre = self.compute_pre(self.region(q), a)
                    self.refine_update(pre, a, q)
            if progress is not None:
                progress(i, len(self._alive))
            log.info("iteration %d: %d states", i, len(self._alive))
        return self.finish()

    def finish(self):
        order = sorted(self._alive, key=lambda q: (self._slice[q], q))
        new_id = {q: k for k, q in enumerate(order)}
        states = [
            QuotientState(new_id[q], self.region(q), self._slice[q], self._obs[q])
            for q in order
        ]
        trans = set()
        for q in order:
            for a, t in self._succ[q].items():
                if t not in new_id:
                    raise AbstractionError(f"transition into a removed state {t}")
                trans.add((new_id[q], a, new_id[t]))
        T = QuotientTS(states, self.sigma, trans, new_id[self.d_state])
        partition = [s.region for s in states]
        return T, partition


def initial_partition(spec: ProblemSpec, slices: SliceSet | None = None) -> list[QuotientState]:
    return QuotientBuilder(spec, slices, check=False).initial_partition()


def refine_update(builder: QuotientBuilder, pre: Region, sigma, q: int) -> QuotientBuilder:
    builder.refine_update(pre, sigma, q)
    return builder


def build_quotient(spec: ProblemSpec, max_states: int = 1_000_000, progress=None, check=True):
    """Run the slice-by-slice refinement; returns ``(QuotientTS, partition)``."""
    return QuotientBuilder(spec, max_states=max_states, check=check).run(progress)


def bisimulation_violations(T: QuotientTS, spec: ProblemSpec, samples: int, rng,
                            band: float | None = None) -> list:
    """Sampled points whose concrete successor leaves the quotient successor.

    Points within ``band`` of the boundary of their own cell or of the
    expected successor are not counted.
    """
    band = 10 * TOL.strict if band is None else band
    bad = []
    from .geometry import sample_region

    for s in T.states:
        X = sample_region(s.region, samples, rng)
        own = _boundary_dist(s.region, X)
        for a in T.sigma:
            succ = T.succ[s.id][a]
            if len(succ) != 1:
                bad.append((s.id, a, "successor count", len(succ)))
                continue
            if s.id == T.d_state or s.obs == TARGET:
                Y = X
            else:
                Y = X @ spec.modes[a].T
            found = T.locate_points(Y)
            wrong = found != succ[0]
            if not wrong.any():
                continue
            far = _boundary_dist(T.states[succ[0]].region, Y[wrong])
            for k, yk, dk, ok in zip(np.flatnonzero(wrong), Y[wrong], far, own[wrong]):
                if dk > band and ok > band:
                    bad.append((s.id, a, tuple(X[k]), int(found[k])))
    return bad


def _boundary_dist(r: Region, X) -> np.ndarray:
    """Distance-like margin of each point to the boundary of ``r``'s cells."""
    X = np.atleast_2d(X)
    out = np.full(X.shape[0], np.inf)
    for c in r.cells:
        if len(c.b) == 0:
            continue
        norms = np.linalg.norm(c.A, axis=1)
        d = np.abs(c.b - X @ c.A.T) / norms
        out = np.minimum(out, d.min(axis=1))
    return out
