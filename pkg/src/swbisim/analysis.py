"""Products with the specification automaton, synthesis and verification."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .abstraction import TARGET, ProblemSpec, QuotientTS, observations_of
from .geometry import Region
from .logic import DFA, Formula, word_satisfies


class AnalysisError(ValueError):
    pass


class ProductAutomaton:
    """Reachable part of ``T x A``.

    Product states are ``(q, s)`` pairs numbered in discovery order.  Reading
    the observation of the source quotient state drives the automaton step.
    """

    def __init__(self, states, inputs, succ, initial, accepting, d_init):
        self.states = list(states)
        self.index = {p: i for i, p in enumerate(self.states)}
        self.inputs = tuple(inputs)
        self.succ = succ  # succ[i] is a tuple of (sigma, j) sorted by (input order, j)
        self.initial = tuple(initial)
        self.accepting = frozenset(accepting)
        self.dfa_init = d_init

    def __len__(self):
        return len(self.states)

    def edges(self):
        for i, out in enumerate(self.succ):
            for a, j in out:
                yield i, a, j

    def predecessors(self) -> list:
        pred = [[] for _ in self.states]
        for i, _, j in self.edges():
            pred[j].append(i)
        return pred


def build_product(T: QuotientTS, d: DFA) -> ProductAutomaton:
    labels = {T.label(q) for q in range(len(T))}
    missing = labels - set(d.alphabet)
    if missing:
        raise AnalysisError(f"observations {sorted(missing)} are not in the automaton alphabet")
    letter_idx = {a: k for k, a in enumerate(d.alphabet)}
    order = {a: k for k, a in enumerate(T.sigma)}
    states = []
    index = {}

    def add(p):
        if p not in index:
            index[p] = len(states)
            states.append(p)
            queue.append(p)
        return index[p]

    queue = deque()
    initial = [add((q, d.init)) for q in range(len(T))]
    succ_map = {}
    while queue:
        q, s = queue.popleft()
        s2 = d.delta[s][letter_idx[T.label(q)]]
        out = []
        for a in T.sigma:
            for t in T.succ[q][a]:
                out.append((a, add((t, s2))))
        out.sort(key=lambda e: (order[e[0]], e[1]))
        succ_map[index[(q, s)]] = tuple(out)
    succ = [succ_map[i] for i in range(len(states))]
    accepting = [i for i, (_, s) in enumerate(states) if s in d.accepting]
    return ProductAutomaton(states, T.sigma, succ, initial, accepting, d.init)


@dataclass(frozen=True)
class Strategy:
    """Winning product states, their distance to acceptance and a choice map."""

    winning: frozenset
    dist: dict
    choice: dict  # product index -> (sigma, successor index)

    def is_winning(self, i: int) -> bool:
        return i in self.winning


def synthesize(pa: ProductAutomaton) -> Strategy:
    """Backward breadth-first search from the accepting states."""
    pred = pa.predecessors()
    dist = {i: 0 for i in sorted(pa.accepting)}
    queue = deque(sorted(pa.accepting))
    while queue:
        j = queue.popleft()
        for i in pred[j]:
            if i not in dist:
                dist[i] = dist[j] + 1
                queue.append(i)
    choice = {}
    for i, k in dist.items():
        if k == 0:
            continue
        # succ is sorted by input order then successor index
        for a, j in pa.succ[i]:
            if dist.get(j) == k - 1:
                choice[i] = (a, j)
                break
    return Strategy(frozenset(dist), dist, choice)


@dataclass(frozen=True)
class ValueTable:
    """Worst-case number of steps to acceptance (``inf`` if not guaranteed)."""

    J: tuple

    def __getitem__(self, i):
        return self.J[i]

    def finite(self) -> frozenset:
        return frozenset(i for i, v in enumerate(self.J) if v != math.inf)


def value_table(pa: ProductAutomaton) -> ValueTable:
    """Least fixed point of ``J(s) = 1 + max J(s')`` with ``J = 0`` on acceptance.

    A non-accepting state is settled once all of its successors are settled;
    states on cycles that avoid acceptance never are and keep ``inf``.
    """
    n = len(pa)
    J = [math.inf] * n
    pred = [[] for _ in range(n)]
    waiting = [0] * n
    for i, out in enumerate(pa.succ):
        targets = {j for _, j in out}
        waiting[i] = len(targets)
        for j in targets:
            pred[j].append(i)
    queue = deque()
    for i in sorted(pa.accepting):
        J[i] = 0
        queue.append(i)
    while queue:
        j = queue.popleft()
        for i in pred[j]:
            if i in pa.accepting or J[i] != math.inf:
                continue
            waiting[i] -= 1
            if waiting[i] == 0:
                J[i] = 1 + max(J[k] for _, k in pa.succ[i])
                queue.append(i)
    return ValueTable(tuple(J))


@dataclass(frozen=True)
class InitialSet:
    """Union of the partition classes of the listed quotient states."""

    states: tuple
    region: Region

    def __bool__(self):
        return bool(self.states)

    def contains_points(self, X) -> np.ndarray:
        return self.region.contains_points(X)


def _initial_set(pa: ProductAutomaton, T: QuotientTS, win) -> InitialSet:
    qs = tuple(sorted(pa.states[i][0] for i in pa.initial if i in win))
    cells = [c for q in qs for c in T.states[q].region.cells]
    return InitialSet(qs, Region(cells, T.states[0].region.dim))


def satisfying_initial_set(strategy: Strategy, pa: ProductAutomaton, T: QuotientTS) -> InitialSet:
    return _initial_set(pa, T, strategy.winning)


def verify_arbitrary(pa: ProductAutomaton, T: QuotientTS):
    """Return the value table and the set of initial states that satisfy the
    specification under every switching sequence."""
    vt = value_table(pa)
    return vt, _initial_set(pa, T, vt.finite())


def product_walk(strategy: Strategy, pa: ProductAutomaton, start: int) -> list:
    """Inputs chosen from product state ``start`` until acceptance."""
    if start not in strategy.winning:
        raise AnalysisError("start state is not winning")
    seq = []
    i = start
    while i not in pa.accepting:
        a, i = strategy.choice[i]
        seq.append(a)
    return seq


def switching_sequence(x, strategy: Strategy, pa: ProductAutomaton, T: QuotientTS) -> list:
    q = T.locate(x)
    if q < 0:
        raise AnalysisError(f"point {np.asarray(x)} lies in no partition class")
    i = pa.index[(q, pa.dfa_init)]
    if i not in strategy.winning:
        raise AnalysisError(f"point {np.asarray(x)} is not in the satisfying set")
    return product_walk(strategy, pa, i)


def simulate(spec: ProblemSpec, x0, sequence) -> np.ndarray:
    """Trajectory under ``sequence``; points inside ``D`` stay put."""
    x = np.asarray(x0, dtype=float)
    out = [x]
    for a in sequence:
        if spec.lf(x) > spec.gamma_D:
            x = spec.modes[a] @ x
        out.append(x)
    return np.array(out)


def run_to_target(spec: ProblemSpec, x0, sequence, filler=None, max_steps: int = 10_000) -> np.ndarray:
    """Simulate ``sequence`` and then keep applying ``filler`` until ``D``."""
    filler = spec.sigma[0] if filler is None else filler
    traj = simulate(spec, x0, sequence)
    x = traj[-1]
    extra = []
    while spec.lf(x) > spec.gamma_D:
        if len(extra) >= max_steps:
            raise AnalysisError("trajectory does not reach D")
        x = spec.modes[filler] @ x
        extra.append(x)
    if extra:
        traj = np.vstack([traj, np.array(extra)])
    return traj


def trajectory_word(spec: ProblemSpec, traj) -> tuple:
    """Observation word of a trajectory ending in ``D``: ``(prefix, tail)``."""
    obs = list(observations_of(traj, spec))
    if obs[-1] != TARGET:
        raise AnalysisError("trajectory does not end in D")
    while len(obs) > 1 and obs[-2] == TARGET:
        obs.pop()
    return obs[:-1], TARGET


def trajectory_satisfies(spec: ProblemSpec, f: Formula, traj) -> bool:
    prefix, tail = trajectory_word(spec, traj)
    return word_satisfies(f, prefix, tail)


def outcome_words(spec: ProblemSpec, x0, horizon: int) -> list:
    """Observation words of all switching sequences of length ``horizon``.

    Sequences are enumerated as a tree; once a branch enters ``D`` the state
    is frozen, so every extension of it yields the same word and the branch
    is closed.  Returns ``(prefix, tail, multiplicity)`` triples where
    ``tail`` is ``None`` when the horizon ends outside ``D``.
    """
    sigma = spec.sigma
    out = []

    def rec(x, obs, depth):
        v = spec.lf(x)
        if v <= spec.gamma_D:
            out.append((tuple(obs), TARGET, len(sigma) ** (horizon - depth)))
            return
        label = observations_of(x[None, :], spec)[0]
        if depth == horizon:
            out.append((tuple(obs) + (label,), None, 1))
            return
        for a in sigma:
            rec(spec.modes[a] @ x, obs + [label], depth + 1)

    rec(np.asarray(x0, dtype=float), [], 0)
    return out


def brute_force_membership(spec: ProblemSpec, f: Formula, x0, horizon: int):
    """``(some, every)``: whether some / every sequence of length ``horizon``
    produces a word satisfying ``f``.  Words that have not reached ``D`` by
    the horizon count as failures."""
    some, every = False, True
    for prefix, tail, _ in outcome_words(spec, x0, horizon):
        ok = tail is not None and word_satisfies(f, prefix, tail)
        some |= ok
        every &= ok
    return some, every
