"""Infinity-norm Lyapunov functions, their sublevel sets and slices."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import TOL, Cell, Polytope, Region, difference, sample_region
from .lp import OPTIMAL, LPError, lp_arrays


class LyapunovError(ValueError):
    pass


def _check_rank(L) -> None:
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] < L.shape[1]:
        raise LyapunovError(f"L must be l x n with l >= n, got shape {L.shape}")
    if np.linalg.matrix_rank(L, tol=1e-10) < L.shape[1]:
        raise LyapunovError("L does not have full column rank")


@dataclass(frozen=True)
class PolyhedralLF:
    """``V(x) = ||L x||_inf`` with a declared contraction rate ``rho``."""

    L: np.ndarray
    rho: float

    def __post_init__(self):
        L = np.array(self.L, dtype=float)
        _check_rank(L)
        if not 0.0 < self.rho < 1.0:
            raise LyapunovError(f"rho must lie in (0, 1), got {self.rho}")
        L.setflags(write=False)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def n(self) -> int:
        return self.L.shape[1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            return float(np.abs(self.L @ x).max())
        return np.abs(x @ self.L.T).max(axis=1)

    def certify(self, modes) -> float:
        return certify_contraction(self.L, modes)


def contraction_per_mode(L, modes) -> list[float]:
    """Tight ``max V(A x) / V(x)`` for each mode, by ``2 l`` LPs per mode."""
    L = np.asarray(L, dtype=float)
    _check_rank(L)
    l, n = L.shape
    H = np.vstack([L, -L])
    h = np.ones(2 * l)
    out = []
    for A in modes:
        A = np.asarray(A, dtype=float)
        if A.shape != (n, n):
            raise LyapunovError(f"mode of shape {A.shape} in dimension {n}")
        M = L @ A
        best = 0.0
        for j in range(l):
            for sgn in (1.0, -1.0):
                status, value, _ = lp_arrays(H, h, sgn * M[j], tol_feas=TOL.feas)
                if status != OPTIMAL:
                    raise LPError(f"contraction LP returned status {status}")
                best = max(best, value)
        out.append(best)
    return out


def sampled_contraction(L, modes, samples: int = 10_000, rng=None) -> float:
    """Lower estimate of the contraction rate from sampled directions.

    The ratio ``V(A x) / V(x)`` is scale invariant, so directions suffice.
    In the plane they form a uniform angular grid; otherwise they are drawn
    from the unit sphere.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[1]
    if n == 2:
        th = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
        U = np.column_stack([np.cos(th), np.sin(th)])
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        U = rng.normal(size=(samples, n))
    v = np.abs(U @ L.T).max(axis=1)
    best = 0.0
    for A in modes:
        w = np.abs(U @ np.asarray(A, dtype=float).T @ L.T).max(axis=1)
        best = max(best, float((w / v).max()))
    return best


def certify_contraction(L, modes) -> float:
    """Smallest ``rho*`` with ``V(A x) <= rho* V(x)`` for every mode and ``x``."""
    modes = list(modes)
    if not modes:
        raise LyapunovError("no modes given")
    return max(contraction_per_mode(L, modes))


@dataclass(frozen=True)
class GammaSequence:
    gammas: tuple

    @property
    def N(self) -> int:
        return len(self.gammas) - 1

    def __getitem__(self, i):
        return self.gammas[i]

    def __len__(self):
        return len(self.gammas)


def gamma_sequence(gamma_D: float, gamma_X: float, rho: float) -> GammaSequence:
    """Levels ``Γ_i = Γ_D / rho**i`` for ``i < N`` and ``Γ_N = Γ_X``.

    ``N`` is the smallest integer with ``Γ_D / rho**N >= Γ_X``; the closed
    form is corrected by direct multiplication so float noise at the
    threshold cannot shift it.
    """
    if not 0.0 < rho < 1.0:
        raise LyapunovError(f"rho must lie in (0, 1), got {rho}")
    if not 0.0 < gamma_D < gamma_X:
        raise LyapunovError(f"need 0 < gamma_D < gamma_X, got {gamma_D}, {gamma_X}")
    N = max(1, math.ceil(math.log(gamma_X / gamma_D) / math.log(1.0 / rho)))

    def level(k):
        g = gamma_D
        for _ in range(k):
            g = g / rho
        return g

    while N > 1 and level(N - 1) >= gamma_X:
        N -= 1
    while level(N) < gamma_X:
        N += 1
    gammas = [level(i) for i in range(N)] + [float(gamma_X)]
    return GammaSequence(tuple(float(g) for g in gammas))


def sublevel_polytope(L, gamma: float) -> Polytope:
    """``{x | ||L x||_inf <= gamma}`` as ``[L; -L] x <= gamma``."""
    if not gamma > 0:
        raise LyapunovError(f"gamma must be positive, got {gamma}")
    L = np.asarray(L, dtype=float)
    return Polytope(np.vstack([L, -L]), np.full(2 * L.shape[0], float(gamma)))


@dataclass(frozen=True)
class SliceSet:
    slices: tuple
    gammas: GammaSequence = field(repr=False)
    L: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.slices)

    def __getitem__(self, i) -> Region:
        return self.slices[i]

    def index_of(self, X) -> np.ndarray:
        """Slice index per point (``-1`` outside ``X``), from ``V`` directly."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        v = np.abs(X @ self.L.T).max(axis=1)
        g = np.asarray(self.gammas.gammas)
        idx = np.searchsorted(g, v, side="left")
        idx[v > g[-1]] = -1
        return idx


def build_slices(L, gs: GammaSequence) -> SliceSet:
    """``S_0 = P_{Γ_0}`` and ``S_i = P_{Γ_i} \\ P_{Γ_{i-1}}``."""
    polys = [sublevel_polytope(L, g).to_cell() for g in gs.gammas]
    slices = [Region.of(polys[0])]
    for i in range(1, len(polys)):
        slices.append(difference(polys[i], polys[i - 1]))
    L = np.array(L, dtype=float)
    L.setflags(write=False)
    return SliceSet(tuple(slices), gs, L)


def slice_transition_check(modes, L, gs: GammaSequence, samples: int = 10_000, rng=None) -> bool:
    """Sampling check that every mode moves each slice point to a lower slice."""
    rng = np.random.default_rng(0) if rng is None else rng
    slices = build_slices(L, gs)
    per = max(1, samples // max(1, gs.N))
    for i in range(1, len(slices)):
        X = sample_region(slices[i], per, rng)
        for A in modes:
            Y = X @ np.asarray(A, dtype=float).T
            j = slices.index_of(Y)
            if np.any((j < 0) | (j >= i)):
                return False
    return True
