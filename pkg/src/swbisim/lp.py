"""Dense two-phase simplex for small linear programs.

Every geometric predicate in the package reduces to problems of the form

    maximize c.x  subject to  A x <= b,  x free,

with a handful of variables and a few dozen rows.  Those are solved here with
a tableau simplex using Bland's rule, compiled with numba so that the
abstraction can afford hundreds of thousands of calls.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

OPTIMAL = 0
UNBOUNDED = 1
INFEASIBLE = 2
ITERATION_LIMIT = 3

_STATUS_NAMES = {OPTIMAL: "optimal", UNBOUNDED: "unbounded", INFEASIBLE: "infeasible"}

PIVOT_TOL = 1e-11


class LPError(RuntimeError):
    """Raised when the simplex cannot reach a verdict (e.g. cycling)."""


@dataclass(frozen=True)
class LPResult:
    status: str
    value: float
    point: np.ndarray | None


@njit(cache=True)
def _pivot(T, basis, R, row, col):
    piv = T[row, col]
    T[row, :] /= piv
    for i in range(T.shape[0]):
        if i != row:
            f = T[i, col]
            if f != 0.0:
                T[i, :] -= f * T[row, :]
    f = R[col]
    if f != 0.0:
        R[:] -= f * T[row, :]
    basis[row] = col


@njit(cache=True)
def _iterate(T, basis, R, n_enter, tol, max_iter):
    # R holds reduced costs; R[-1] holds minus the objective value
    m = T.shape[0]
    last = T.shape[1] - 1
    for _ in range(max_iter):
        enter = -1
        for j in range(n_enter):
            if R[j] > tol:
                enter = j
                break
        if enter < 0:
            return OPTIMAL
        best = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > PIVOT_TOL:
                ratio = T[i, last] / a
                if ratio < best:
                    best = ratio
        leave = -1
        for i in range(m):
            a = T[i, enter]
            if a > PIVOT_TOL and T[i, last] / a <= best + 1e-13:
                if leave < 0 or basis[i] < basis[leave]:
                    leave = i
        if leave < 0:
            return UNBOUNDED
        _pivot(T, basis, R, leave, enter)
    return ITERATION_LIMIT


@njit(cache=True)
def solve_lp(A, b, c, tol_feas, max_iter):
    """Maximize ``c.x`` subject to ``A x <= b`` with free ``x``.

    Returns ``(status, value, x)``.
    """
    m, n = A.shape
    nneg = 0
    for i in range(m):
        if b[i] < 0.0:
            nneg += 1
    ncol = 2 * n + m + nneg
    T = np.zeros((m, ncol + 1))
    basis = np.empty(m, np.int64)
    k = 0
    for i in range(m):
        s = 1.0
        if b[i] < 0.0:
            s = -1.0
        for j in range(n):
            T[i, j] = s * A[i, j]
            T[i, n + j] = -s * A[i, j]
        T[i, 2 * n + i] = s
        T[i, ncol] = s * b[i]
        if b[i] < 0.0:
            T[i, 2 * n + m + k] = 1.0
            basis[i] = 2 * n + m + k
            k += 1
        else:
            basis[i] = 2 * n + i

    x = np.zeros(n)
    rtol = 1e-12
    if nneg > 0:
        R = np.zeros(ncol + 1)
        for j in range(2 * n + m, ncol):
            R[j] = -1.0
        for i in range(m):
            if basis[i] >= 2 * n + m:
                R[:] += T[i, :]
        st = _iterate(T, basis, R, ncol, rtol, max_iter)
        if st == ITERATION_LIMIT:
            return ITERATION_LIMIT, np.nan, x
        infeas = 0.0
        for i in range(m):
            if basis[i] >= 2 * n + m:
                infeas += T[i, ncol]
        if infeas > tol_feas:
            return INFEASIBLE, np.nan, x
        for i in range(m):
            if basis[i] >= 2 * n + m:
                for j in range(2 * n + m):
                    if abs(T[i, j]) > 1e-9:
                        _pivot(T, basis, R, i, j)
                        break

    R = np.zeros(ncol + 1)
    for j in range(n):
        R[j] = c[j]
        R[n + j] = -c[j]
    for i in range(m):
        bi = basis[i]
        cb = 0.0
        if bi < n:
            cb = c[bi]
        elif bi < 2 * n:
            cb = -c[bi - n]
        if cb != 0.0:
            R[:] -= cb * T[i, :]
    st = _iterate(T, basis, R, 2 * n + m, rtol, max_iter)
    if st != OPTIMAL:
        return st, np.nan, x
    for i in range(m):
        bi = basis[i]
        if bi < n:
            x[bi] += T[i, ncol]
        elif bi < 2 * n:
            x[bi - n] -= T[i, ncol]
    val = 0.0
    for j in range(n):
        val += c[j] * x[j]
    return OPTIMAL, val, x


def lp_arrays(A, b, c, tol_feas=1e-9, max_iter=50_000):
    """Array front end to :func:`solve_lp` raising on iteration overrun."""
    A = np.ascontiguousarray(A, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    c = np.ascontiguousarray(c, dtype=float)
    if A.ndim != 2 or A.shape[0] != b.shape[0] or A.shape[1] != c.shape[0]:
        raise ValueError(
            f"dimension mismatch: A{A.shape}, b{b.shape}, c{c.shape}"
        )
    status, value, x = solve_lp(A, b, c, tol_feas, max_iter)
    if status == ITERATION_LIMIT:
        raise LPError("simplex exceeded its iteration bound")
    return status, value, x


def lp_optimize(objective, constraints, sense="max", tol_feas=1e-9):
    """Optimize a linear objective over the closed relaxation of ``constraints``.

    ``constraints`` is a sequence of objects with ``a``, ``b`` attributes
    (strictness is ignored).  Returns an :class:`LPResult` whose status is one
    of ``"optimal"``, ``"unbounded"``, ``"infeasible"``.
    """
    c = np.asarray(objective, dtype=float)
    n = c.shape[0]
    rows = [np.asarray(g.a, dtype=float) for g in constraints]
    for r in rows:
        if r.shape != (n,):
            raise ValueError(f"constraint of length {r.shape} in dimension {n}")
    A = np.array(rows, dtype=float).reshape(len(rows), n)
    b = np.array([float(g.b) for g in constraints], dtype=float)
    if sense not in ("max", "min"):
        raise ValueError(f"unknown sense {sense!r}")
    sign = 1.0 if sense == "max" else -1.0
    status, value, x = lp_arrays(A, b, sign * c, tol_feas=tol_feas)
    if status != OPTIMAL:
        return LPResult(_STATUS_NAMES[status], np.nan, None)
    return LPResult("optimal", float(c @ x), x)
