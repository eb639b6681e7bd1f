import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swbisim.logic import (
    EMPTY, TARGET, And, Atom, Eventually, FormulaError, Next, NotAtom, Or, Until,
    all_words, dfa_accepts_eventually, dfa_accepts_word, dfa_run, minimize, parse_formula,
    progress, progression_automaton, to_dfa, to_dnf, word_satisfies, DNF_TRUE, DNF_FALSE,
    dnf_to_formula, DFA,
)

GUARDED = "(!R2 U D) & F R1 & ((R3 -> X !R1) U D)"
ALPHABET = ("R1", "R2", "R3", EMPTY, TARGET)
CORPUS = [
    GUARDED,
    "F D",
    "R1 U D",
    "F R1 & (!R1 U D)",
    "(!R1 U R2) | X X R3",
    "F (R1 & X (R2 | X R3))",
    "!R3 U (R1 & F D)",
    "X (R1 -> F R2)",
]


def test_parse_basic_shapes():
    assert parse_formula("F D") == Eventually(Atom("D"))
    assert parse_formula("!R1") == NotAtom("R1")
    assert parse_formula("a U b U c") == Until(Atom("a"), Until(Atom("b"), Atom("c")))
    # U binds tighter than &
    f = parse_formula("a & b U c")
    assert f == And(frozenset({Atom("a"), Until(Atom("b"), Atom("c"))}))


def test_parse_eq14_shape():
    f = parse_formula(GUARDED, ["R1", "R2", "R3"])
    assert isinstance(f, And) and len(f.args) == 3
    assert Until(NotAtom("R2"), Atom("D")) in f.args
    assert Eventually(Atom("R1")) in f.args
    guard = Until(Or(frozenset({NotAtom("R3"), Next(NotAtom("R1"))})), Atom("D"))
    assert guard in f.args


def test_implication_is_right_associative_and_negation_pushed():
    f = parse_formula("a -> b -> c")
    assert f == Or(frozenset({NotAtom("a"), NotAtom("b"), Atom("c")}))
    assert parse_formula("!(a & !b)") == Or(frozenset({NotAtom("a"), Atom("b")}))
    assert parse_formula("!!a") == Atom("a")


@pytest.mark.parametrize("text, msg", [
    ("! F R1", "not syntactically co-safe"),
    ("!(a U b)", "not syntactically co-safe"),
    ("G a", "co-safe"),
    ("a &", "position 3"),
    ("(a | b", r"expected '\)'"),
    ("a $ b", "unexpected character"),
    ("a b", "unexpected 'b'"),
])
def test_parse_errors(text, msg):
    with pytest.raises(FormulaError, match=msg):
        parse_formula(text)


def test_unknown_atom():
    with pytest.raises(FormulaError, match="R4"):
        parse_formula("F R4 & F R1", ["R1"])
    parse_formula("F D", [])  # D is always admissible


def test_word_satisfies_examples():
    f = parse_formula(GUARDED)
    assert word_satisfies(parse_formula("F D"), [EMPTY, EMPTY], TARGET)
    assert not word_satisfies(f, ["R2"], TARGET)
    assert not word_satisfies(f, ["R3", "R1"], TARGET)
    assert word_satisfies(f, ["R3", EMPTY, "R1"], TARGET)
    assert word_satisfies(f, ["R1"], TARGET)


def test_word_satisfies_tail_semantics():
    assert word_satisfies(parse_formula("X X X a"), [], "a")
    assert not word_satisfies(parse_formula("X X X a"), ["a", "a", "a"], "b")
    assert word_satisfies(parse_formula("a U b"), ["a", "a"], "b")
    assert not word_satisfies(parse_formula("a U b"), ["a", "c"], "b")
    assert not word_satisfies(parse_formula("F a"), ["b"], "b")


def test_f_d_dfa_has_two_states():
    d = to_dfa(parse_formula("F D"), (EMPTY, TARGET))
    assert d.n_states == 2
    assert d.is_total()
    s = dfa_run(d, [])
    assert s == d.init
    assert dfa_accepts_eventually(d, d.init, TARGET)


def test_f_r1_on_target_tail():
    d = to_dfa(parse_formula("F R1"), ALPHABET)
    assert not dfa_accepts_eventually(d, d.init, TARGET)


def test_until_progression_trace():
    d = to_dfa(parse_formula("R1 U D"), ALPHABET)
    s = dfa_run(d, ["R1", "R1"])
    assert s not in d.accepting
    assert dfa_run(d, ["D"], start=s) in d.accepting


def test_eq14_dfa_size():
    d = to_dfa(parse_formula(GUARDED), ALPHABET)
    # six live states plus the rejecting sink
    assert d.n_states == 7
    sinks = [s for s in range(d.n_states) if s not in d.accepting and set(d.delta[s]) == {s}]
    assert len(sinks) == 1


def test_letter_not_in_alphabet():
    d = to_dfa(parse_formula("F D"), (EMPTY, TARGET))
    with pytest.raises(FormulaError):
        dfa_run(d, ["R1"])


def test_dnf_canonical_form():
    a, b = Atom("a"), Atom("b")
    # absorption and a contradiction between two positive atoms
    assert to_dnf(Or(frozenset({a, And(frozenset({a, b}))}))) == frozenset({frozenset({a})})
    assert to_dnf(And(frozenset({a, b}))) == DNF_FALSE
    assert to_dnf(And(frozenset({a, NotAtom("a")}))) == DNF_FALSE
    assert progress(to_dnf(Eventually(a)), "a") == DNF_TRUE


@pytest.mark.parametrize("text", CORPUS)
def test_dfa_matches_semantics_short_words(text):
    f = parse_formula(text)
    d = to_dfa(f, ALPHABET)
    assert d.is_total()
    for w in all_words(ALPHABET, 5):
        for tail in ALPHABET:
            assert dfa_accepts_word(d, w, tail) == word_satisfies(f, w, tail), (w, tail)


@pytest.mark.parametrize("text", CORPUS)
def test_minimization_preserves_language(text):
    f = parse_formula(text)
    raw = progression_automaton(f, ALPHABET)
    m = minimize(raw)
    assert m.n_states <= raw.n_states
    for w in all_words(ALPHABET, 5):
        assert (dfa_run(raw, w) in raw.accepting) == (dfa_run(m, w) in m.accepting)


def test_minimize_merges_equivalent_states():
    # states 1 and 2 are equivalent
    d = DFA(4, 0, ("a", "b"), ((1, 2), (3, 3), (3, 3), (3, 3)), frozenset({3}))
    m = minimize(d)
    assert m.n_states == 3


def test_dfa_dict_round_trip():
    d = to_dfa(parse_formula(GUARDED), ALPHABET)
    assert DFA.from_dict(d.to_dict()) == d


def test_random_long_words_agree():
    rng = np.random.default_rng(0)
    for text in CORPUS:
        f = parse_formula(text)
        d = to_dfa(f, ALPHABET)
        for _ in range(2000):
            k = int(rng.integers(6, 20))
            w = [ALPHABET[i] for i in rng.integers(0, 5, size=k)]
            tail = ALPHABET[int(rng.integers(0, 5))]
            assert dfa_accepts_word(d, w, tail) == word_satisfies(f, w, tail)


atoms = st.sampled_from(["a", "b", "c"])
formulas = st.recursive(
    st.one_of(atoms.map(Atom), atoms.map(NotAtom)),
    lambda sub: st.one_of(
        st.tuples(sub, sub).map(lambda p: And(frozenset(p)) if p[0] != p[1] else p[0]),
        st.tuples(sub, sub).map(lambda p: Or(frozenset(p)) if p[0] != p[1] else p[0]),
        sub.map(Next),
        sub.map(Eventually),
        st.tuples(sub, sub).map(lambda p: Until(*p)),
    ),
    max_leaves=6,
)
letters = st.sampled_from(["a", "b", "c", "d"])


@settings(max_examples=300, deadline=None)
@given(formulas, letters, st.lists(letters, max_size=6), letters)
def test_progression_soundness(f, first, rest, tail):
    # (l . w) satisfies f  iff  w satisfies progress(f, l)
    g = dnf_to_formula(progress(to_dnf(f), first))
    assert word_satisfies(f, [first] + rest, tail) == word_satisfies(g, rest, tail)


@settings(max_examples=150, deadline=None)
@given(formulas, st.lists(letters, max_size=6), letters)
def test_random_formula_dfa_agrees(f, w, tail):
    d = to_dfa(f, ("a", "b", "c", "d"))
    assert dfa_accepts_word(d, w, tail) == word_satisfies(f, w, tail)
