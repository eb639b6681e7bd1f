import math

import numpy as np
import pytest

from conftest import reduced_spec
from swbisim.abstraction import EMPTY, TARGET, QuotientState, QuotientTS, arbitrary_switching_view
from swbisim.analysis import (
    AnalysisError, ProductAutomaton, brute_force_membership, build_product, outcome_words,
    product_walk, run_to_target, satisfying_initial_set, simulate, switching_sequence, synthesize,
    trajectory_satisfies, value_table, verify_arbitrary,
)
from swbisim.geometry import Cell, Region, sample_region
from swbisim.logic import DFA, parse_formula, to_dfa, word_satisfies


def toy_ts(labels, edges, sigma=("a", "b"), d_state=0):
    sq = Region.of(Cell([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 1, 1]))
    states = [QuotientState(i, sq, i, lab) for i, lab in enumerate(labels)]
    return QuotientTS(states, sigma, edges, d_state)


def graph_product(n, succ, accepting, inputs=("a", "b")):
    states = [(i, 0) for i in range(n)]
    return ProductAutomaton(states, inputs, [tuple(s) for s in succ], range(n), accepting, 0)


def test_trivially_accepting_dfa_gives_isomorphic_product(reduced):
    _, T, _ = reduced
    d = DFA(1, 0, (EMPTY, TARGET, "R1"), ((0, 0, 0),), frozenset({0}))
    pa = build_product(T, d)
    assert len(pa) == len(T)
    assert pa.accepting == frozenset(range(len(T)))
    edges = {(pa.states[i][0], a, pa.states[j][0]) for i, a, j in pa.edges()}
    assert edges == set(T.transitions)


def test_alphabet_mismatch():
    T = toy_ts([TARGET, "R7"], {(0, "a", 0), (0, "b", 0), (1, "a", 0), (1, "b", 0)})
    d = to_dfa(parse_formula("F D"), (EMPTY, TARGET))
    with pytest.raises(AnalysisError):
        build_product(T, d)


def test_product_edges_respect_both_factors(reduced):
    spec, T, _ = reduced
    d = to_dfa(parse_formula("F R1"), spec.letters)
    pa = build_product(T, d)
    assert len(pa) <= len(T) * d.n_states
    for i, a, j in pa.edges():
        (q, s), (q2, s2) = pa.states[i], pa.states[j]
        assert q2 in T.succ[q][a]
        assert s2 == d.step(s, T.label(q))


def test_unreachable_acceptance():
    pa = graph_product(3, [[("a", 1)], [("a", 2)], [("a", 2)]], [2])
    pa_none = graph_product(3, [[("a", 1)], [("a", 0)], [("a", 2)]], [2])
    st = synthesize(pa_none)
    assert st.winning == frozenset({2})
    st = synthesize(pa)
    assert st.winning == frozenset({0, 1, 2})
    assert st.choice == {0: ("a", 1), 1: ("a", 2)}
    assert product_walk(st, pa, 0) == ["a", "a"]


def test_choice_tie_breaking():
    # both inputs reach acceptance in one step; the first input wins,
    # and among equal inputs the smaller successor
    pa = graph_product(4, [[("a", 3), ("b", 2)], [("b", 2), ("b", 3)], [("a", 2)], [("a", 3)]], [2, 3])
    st = synthesize(pa)
    assert st.choice[0] == ("a", 3)
    assert st.choice[1] == ("b", 2)


def test_value_table_uses_max():
    # 0 -> {1 accepting, 2 trapped}; 3 -> {1}
    pa = graph_product(4, [[("a", 1), ("b", 2)], [("a", 1)], [("a", 2)], [("a", 1), ("b", 1)]], [1])
    vt = value_table(pa)
    assert vt[1] == 0 and vt[3] == 1
    assert vt[0] == math.inf and vt[2] == math.inf
    chain = graph_product(4, [[("a", 1), ("b", 2)], [("a", 3)], [("a", 3)], [("a", 3)]], [3])
    assert value_table(chain).J == (2, 1, 1, 0)


def test_value_table_is_a_fixed_point(reduced):
    spec, T, _ = reduced
    d = to_dfa(parse_formula("(!R1 U D)"), spec.letters)
    pa = build_product(arbitrary_switching_view(T), d)
    vt = value_table(pa)
    for i in range(len(pa)):
        if i in pa.accepting:
            assert vt[i] == 0
            continue
        succ = [vt[j] for _, j in pa.succ[i]]
        want = 1 + max(succ)
        assert vt[i] == want
        if vt[i] != math.inf:
            assert vt[i] <= len(pa)


def test_f_d_covers_all_of_x(reduced):
    spec, T, _ = reduced
    d = to_dfa(parse_formula("F D"), spec.letters)
    pa = build_product(T, d)
    st = synthesize(pa)
    XS = satisfying_initial_set(st, pa, T)
    assert len(XS.states) == len(T)
    _, XA = verify_arbitrary(build_product(arbitrary_switching_view(T), d), T)
    assert XA.states == XS.states


def test_contradictory_formula_gives_empty_sets(reduced):
    spec, T, _ = reduced
    d = to_dfa(parse_formula("F R1 & (!R1 U D)"), spec.letters)
    pa = build_product(T, d)
    assert not satisfying_initial_set(synthesize(pa), pa, T)
    _, XA = verify_arbitrary(build_product(arbitrary_switching_view(T), d), T)
    assert not XA


def test_single_mode_makes_both_sets_equal(reduced):
    spec, T, _ = reduced
    one = QuotientTS(T.states, ("1",), {(q, a, t) for q, a, t in T.transitions if a == "1"}, T.d_state)
    d = to_dfa(parse_formula("F R1"), spec.letters)
    pa = build_product(one, d)
    XS = satisfying_initial_set(synthesize(pa), pa, one)
    _, XA = verify_arbitrary(build_product(arbitrary_switching_view(one), d), one)
    assert XS.states == XA.states


def test_as_contained_in_s(reduced):
    spec, T, _ = reduced
    for text in ("F R1", "(!R1 U D)", "X X !R1 U D", "F D"):
        d = to_dfa(parse_formula(text), spec.letters)
        pa = build_product(T, d)
        XS = satisfying_initial_set(synthesize(pa), pa, T)
        _, XA = verify_arbitrary(build_product(arbitrary_switching_view(T), d), T)
        assert set(XA.states) <= set(XS.states)


def test_strategy_walk_reaches_acceptance(reduced):
    spec, T, _ = reduced
    d = to_dfa(parse_formula("F R1"), spec.letters)
    pa = build_product(T, d)
    st = synthesize(pa)
    for i in st.winning:
        assert len(product_walk(st, pa, i)) == st.dist[i] <= len(pa)


def test_product_paths_match_word_semantics(reduced, rng):
    # walk random product paths into D; acceptance must agree with the oracle
    spec, T, _ = reduced
    f = parse_formula("F R1")
    d = to_dfa(f, spec.letters)
    pa = build_product(T, d)
    for _ in range(1000):
        i = int(rng.choice(pa.initial))
        word = []
        while True:
            q, _s = pa.states[i]
            word.append(T.label(q))
            if q == T.d_state:
                break
            i = pa.succ[i][int(rng.integers(len(pa.succ[i])))][1]
        # D self-loops keep the product running; one more step consumes D
        accepted = i in pa.accepting or pa.succ[i][0][1] in pa.accepting
        assert accepted == word_satisfies(f, word[:-1], TARGET)


def test_switching_sequence_is_sound(reduced, rng):
    spec, T, _ = reduced
    f = parse_formula("F R1")
    pa = build_product(T, to_dfa(f, spec.letters))
    st = synthesize(pa)
    XS = satisfying_initial_set(st, pa, T)
    for x in sample_region(XS.region, 100, rng):
        seq = switching_sequence(x, st, pa, T)
        assert trajectory_satisfies(spec, f, run_to_target(spec, x, seq))


def test_switching_sequence_errors(reduced):
    spec, T, _ = reduced
    pa = build_product(T, to_dfa(parse_formula("F R1"), spec.letters))
    st = synthesize(pa)
    with pytest.raises(AnalysisError):
        switching_sequence([-6.0, 0.0], st, pa, T)
    with pytest.raises(AnalysisError):
        switching_sequence([50.0, 0.0], st, pa, T)


def test_target_point_with_f_d_needs_no_switching(reduced):
    spec, T, _ = reduced
    pa = build_product(T, to_dfa(parse_formula("F D"), spec.letters))
    st = synthesize(pa)
    # one step consumes the initial observation D; the mode is irrelevant there
    assert switching_sequence([0.0, 0.0], st, pa, T) == ["1"]


def test_simulation_freezes_in_d():
    spec = reduced_spec()
    traj = simulate(spec, [0.5, 0.5], ["1", "2", "1"])
    assert np.allclose(traj, [[0.5, 0.5]] * 4)
    traj = simulate(spec, [6.0, 0.0], ["1"])
    assert np.allclose(traj[1], spec.modes["1"] @ [6.0, 0.0])


def test_outcome_tree_collapses_after_d():
    spec = reduced_spec()
    words = outcome_words(spec, np.array([6.0, 0.0]), 6)
    assert sum(m for _, _, m in words) == 2 ** 6
    assert all(t == TARGET for _, t, _ in words)


def test_brute_force_on_known_points():
    spec = reduced_spec()
    f = parse_formula("F R1")
    assert brute_force_membership(spec, f, [5.5, -1.0], 8) == (True, True)
    assert brute_force_membership(spec, f, [0.0, 0.0], 8) == (False, False)
