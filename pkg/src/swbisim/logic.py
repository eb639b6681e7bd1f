"""Syntactically co-safe LTL over single-observation letters.

Formulas are kept in negation normal form with negation only on atoms.  A
formula is turned into a deterministic automaton of its good prefixes by
formula progression: each automaton state is a canonical disjunctive normal
form over temporal subformulas and literals, and reading a letter rewrites
the formula into what the rest of the word must satisfy.

Letters are plain strings.  Because observation regions are disjoint, every
position of a word carries exactly one symbol: a region label, the empty
observation, or ``D``.
"""
from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from itertools import product

TARGET = "D"
EMPTY = "∅"


class FormulaError(ValueError):
    """Syntax errors, unknown atoms and non-co-safe input."""


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Formula):
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Atom(Formula):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class NotAtom(Formula):
    name: str

    def __str__(self):
        return f"!{self.name}"


@dataclass(frozen=True)
class And(Formula):
    args: frozenset

    def __str__(self):
        return "(" + " & ".join(sorted(map(str, self.args))) + ")"


@dataclass(frozen=True)
class Or(Formula):
    args: frozenset

    def __str__(self):
        return "(" + " | ".join(sorted(map(str, self.args))) + ")"


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula

    def __str__(self):
        return f"X {self.arg}"


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def __str__(self):
        return f"({self.left} U {self.right})"


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula

    def __str__(self):
        return f"F {self.arg}"


def conj(*fs) -> Formula:
    args = set()
    for f in fs:
        if f == FALSE:
            return FALSE
        if f == TRUE:
            continue
        args |= f.args if isinstance(f, And) else {f}
    if not args:
        return TRUE
    if len(args) == 1:
        return next(iter(args))
    return And(frozenset(args))


def disj(*fs) -> Formula:
    args = set()
    for f in fs:
        if f == TRUE:
            return TRUE
        if f == FALSE:
            continue
        args |= f.args if isinstance(f, Or) else {f}
    if not args:
        return FALSE
    if len(args) == 1:
        return next(iter(args))
    return Or(frozenset(args))


# parsing ---------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(->|=>|&&|\|\||[!~&|()])|([A-Za-z_][A-Za-z0-9_]*))")


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaError(f"unexpected character {text[pos:].lstrip()[0]!r} at position {pos}")
        tok = m.group(1) or m.group(2)
        start = m.start(1) if m.group(1) else m.start(2)
        tok = {"=>": "->", "&&": "&", "||": "|", "~": "!"}.get(tok, tok)
        out.append((tok, start))
        pos = m.end()
    out.append(("<end>", len(text)))
    return out


# raw syntax tree, before normalization
@dataclass(frozen=True)
class _Not:
    arg: object


@dataclass(frozen=True)
class _Imp:
    left: object
    right: object


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0]

    def take(self, expect=None):
        tok, pos = self.toks[self.i]
        if expect is not None and tok != expect:
            raise FormulaError(f"expected {expect!r} at position {pos}, found {tok!r}")
        self.i += 1
        return tok

    def parse(self):
        f = self.implication()
        if self.peek() != "<end>":
            tok, pos = self.toks[self.i]
            raise FormulaError(f"unexpected {tok!r} at position {pos}")
        return f

    def implication(self):
        left = self.disjunction()
        if self.peek() == "->":
            self.take()
            return _Imp(left, self.implication())
        return left

    def disjunction(self):
        f = self.conjunction()
        while self.peek() == "|":
            self.take()
            f = ("or", f, self.conjunction())
        return f

    def conjunction(self):
        f = self.until()
        while self.peek() == "&":
            self.take()
            f = ("and", f, self.until())
        return f

    def until(self):
        left = self.unary()
        if self.peek() == "U":
            self.take()
            return Until(left, self.until())
        return left

    def unary(self):
        tok, pos = self.toks[self.i]
        if tok == "!":
            self.take()
            return _Not(self.unary())
        if tok == "X":
            self.take()
            return Next(self.unary())
        if tok == "F":
            self.take()
            return Eventually(self.unary())
        if tok == "G":
            raise FormulaError(f"'G' at position {pos}: always is not syntactically co-safe")
        if tok in ("W", "R"):
            raise FormulaError(f"{tok!r} at position {pos} is not supported")
        if tok == "(":
            self.take()
            f = self.implication()
            self.take(")")
            return f
        if tok == "true":
            self.take()
            return TRUE
        if tok == "false":
            self.take()
            return FALSE
        if tok in ("<end>", ")", "&", "|", "->", "U"):
            raise FormulaError(f"unexpected {tok!r} at position {pos}")
        self.take()
        return Atom(tok)


def _nnf(f, neg=False):
    if isinstance(f, Const):
        return Const(f.value != neg)
    if isinstance(f, Atom):
        return NotAtom(f.name) if neg else f
    if isinstance(f, _Not):
        return _nnf(f.arg, not neg)
    if isinstance(f, _Imp):
        if neg:
            return conj(_nnf(f.left), _nnf(f.right, True))
        return disj(_nnf(f.left, True), _nnf(f.right))
    if isinstance(f, tuple):
        op, a, b = f
        if (op == "and") != neg:
            return conj(_nnf(a, neg), _nnf(b, neg))
        return disj(_nnf(a, neg), _nnf(b, neg))
    if neg:
        raise FormulaError(f"negation over a temporal operator is not syntactically co-safe: {f}")
    if isinstance(f, Next):
        return Next(_nnf(f.arg))
    if isinstance(f, Eventually):
        return Eventually(_nnf(f.arg))
    if isinstance(f, Until):
        return Until(_nnf(f.left), _nnf(f.right))
    raise TypeError(f"unexpected node {f!r}")


def atoms_of(f: Formula) -> set:
    if isinstance(f, (Atom, NotAtom)):
        return {f.name}
    if isinstance(f, (And, Or)):
        return set().union(*(atoms_of(g) for g in f.args))
    if isinstance(f, (Next, Eventually)):
        return atoms_of(f.arg)
    if isinstance(f, Until):
        return atoms_of(f.left) | atoms_of(f.right)
    return set()


def parse_formula(text: str, atoms=None) -> Formula:
    """Parse ``text``; ``atoms`` (if given) lists the admissible region labels.

    Grammar, loosest binding first: ``->`` (right associative), ``|``, ``&``,
    ``U`` (right associative), then the prefix operators ``!``, ``X``, ``F``.
    ``D`` denotes the target set.
    """
    f = _nnf(_Parser(text).parse())
    if atoms is not None:
        known = set(atoms) | {TARGET}
        unknown = sorted(atoms_of(f) - known)
        if unknown:
            raise FormulaError(f"unknown atom(s): {', '.join(unknown)}")
    return f


# semantics oracle ------------------------------------------------------

def _postorder(f, out, seen):
    if f in seen:
        return
    if isinstance(f, (And, Or)):
        for g in sorted(f.args, key=str):
            _postorder(g, out, seen)
    elif isinstance(f, (Next, Eventually)):
        _postorder(f.arg, out, seen)
    elif isinstance(f, Until):
        _postorder(f.left, out, seen)
        _postorder(f.right, out, seen)
    seen.add(f)
    out.append(f)


class SuffixEvaluator:
    """Truth of every subformula of ``f`` at one word position.

    ``stationary(letter)`` gives the values at any position of a constant
    suffix ``letter^ω``; ``step(letter, after)`` gives the values one position
    earlier from the values ``after`` at the next position.  Values are
    tuples indexed like ``self.subs``; the root is last.
    """

    def __init__(self, f: Formula):
        subs = []
        _postorder(f, subs, set())
        self.subs = tuple(subs)
        idx = {g: i for i, g in enumerate(subs)}
        ops = []
        for g in subs:
            if isinstance(g, Const):
                ops.append(("const", g.value))
            elif isinstance(g, Atom):
                ops.append(("atom", g.name))
            elif isinstance(g, NotAtom):
                ops.append(("natom", g.name))
            elif isinstance(g, And):
                ops.append(("and", tuple(idx[h] for h in g.args)))
            elif isinstance(g, Or):
                ops.append(("or", tuple(idx[h] for h in g.args)))
            elif isinstance(g, Next):
                ops.append(("next", idx[g.arg]))
            elif isinstance(g, Eventually):
                ops.append(("ev", idx[g.arg]))
            else:
                ops.append(("until", (idx[g.left], idx[g.right])))
        self._ops = tuple(ops)
        self.root = len(subs) - 1

    def _eval(self, letter, after):
        cur = []
        for i, (op, arg) in enumerate(self._ops):
            if op == "const":
                v = arg
            elif op == "atom":
                v = letter == arg
            elif op == "natom":
                v = letter != arg
            elif op == "and":
                v = all(cur[j] for j in arg)
            elif op == "or":
                v = any(cur[j] for j in arg)
            elif after is None:
                # constant suffix: X f and F f reduce to f, (a U b) to b
                v = cur[arg[1]] if op == "until" else cur[arg]
            elif op == "next":
                v = after[arg]
            elif op == "ev":
                v = cur[arg] or after[i]
            else:
                v = cur[arg[1]] or (cur[arg[0]] and after[i])
            cur.append(v)
        return tuple(cur)

    def stationary(self, letter) -> tuple:
        return self._eval(letter, None)

    def step(self, letter, after) -> tuple:
        return self._eval(letter, after)


def word_satisfies(f: Formula, prefix, tail) -> bool:
    """Evaluate ``f`` on the word ``prefix`` followed by ``tail`` forever.

    Truth values are computed position by position from the back.  Every
    position at or past ``len(prefix)`` starts the same suffix, so the
    constant tail is a single position whose temporal operators are their
    own successors.
    """
    ev = SuffixEvaluator(f)
    val = ev.stationary(tail)
    for a in reversed(list(prefix)):
        val = ev.step(a, val)
    return val[ev.root]


# progression -----------------------------------------------------------

DNF_TRUE = frozenset({frozenset()})
DNF_FALSE = frozenset()


def _absorb(clauses):
    clauses = set(clauses)
    if frozenset() in clauses:
        return DNF_TRUE
    keep = set()
    for c in sorted(clauses, key=len):
        if not any(k <= c for k in keep):
            keep.add(c)
    return frozenset(keep)


def _clause_ok(c):
    pos = {l.name for l in c if isinstance(l, Atom)}
    if len(pos) > 1:
        return False
    neg = {l.name for l in c if isinstance(l, NotAtom)}
    return not (pos & neg)


def _dnf_and(a, b):
    out = set()
    for x in a:
        for y in b:
            c = x | y
            if _clause_ok(c):
                out.add(c)
    return _absorb(out)


def _dnf_or(a, b):
    return _absorb(set(a) | set(b))


def to_dnf(f: Formula):
    """Canonical DNF: a frozenset of clauses, each a frozenset of literals."""
    if isinstance(f, Const):
        return DNF_TRUE if f.value else DNF_FALSE
    if isinstance(f, And):
        out = DNF_TRUE
        for g in f.args:
            out = _dnf_and(out, to_dnf(g))
        return out
    if isinstance(f, Or):
        out = DNF_FALSE
        for g in f.args:
            out = _dnf_or(out, to_dnf(g))
        return out
    return frozenset({frozenset({f})})


def _progress_literal(lit, letter, memo):
    key = (lit, letter)
    if key in memo:
        return memo[key]
    if isinstance(lit, Atom):
        r = DNF_TRUE if letter == lit.name else DNF_FALSE
    elif isinstance(lit, NotAtom):
        r = DNF_FALSE if letter == lit.name else DNF_TRUE
    elif isinstance(lit, Next):
        r = to_dnf(lit.arg)
    elif isinstance(lit, Eventually):
        r = _dnf_or(progress(to_dnf(lit.arg), letter, memo), frozenset({frozenset({lit})}))
    elif isinstance(lit, Until):
        r = _dnf_or(
            progress(to_dnf(lit.right), letter, memo),
            _dnf_and(progress(to_dnf(lit.left), letter, memo), frozenset({frozenset({lit})})),
        )
    else:
        raise TypeError(f"not a literal: {lit!r}")
    memo[key] = r
    return r


def progress(dnf, letter, memo=None):
    """What the remainder of a word must satisfy after reading ``letter``."""
    memo = {} if memo is None else memo
    out = DNF_FALSE
    for clause in dnf:
        acc = DNF_TRUE
        for lit in sorted(clause, key=str):
            acc = _dnf_and(acc, _progress_literal(lit, letter, memo))
            if not acc:
                break
        out = _dnf_or(out, acc)
        if out == DNF_TRUE:
            break
    return out


def dnf_to_formula(dnf) -> Formula:
    return disj(*(conj(*c) for c in dnf))


# automata --------------------------------------------------------------

@dataclass(frozen=True)
class DFA:
    """Complete DFA over string letters; states are ``0..n-1``."""

    n_states: int
    init: int
    alphabet: tuple
    delta: tuple  # delta[s][k] is the successor of s on alphabet[k]
    accepting: frozenset
    labels: tuple = ()

    def step(self, s: int, letter) -> int:
        try:
            k = self.alphabet.index(letter)
        except ValueError:
            raise FormulaError(f"letter {letter!r} not in the alphabet") from None
        return self.delta[s][k]

    def is_total(self) -> bool:
        return all(
            len(row) == len(self.alphabet) and all(0 <= t < self.n_states for t in row)
            for row in self.delta
        ) and len(self.delta) == self.n_states

    def to_dict(self) -> dict:
        return {
            "states": self.n_states,
            "init": self.init,
            "alphabet": list(self.alphabet),
            "delta": [list(r) for r in self.delta],
            "accepting": sorted(self.accepting),
            "labels": list(self.labels),
        }

    @classmethod
    def from_dict(cls, d) -> "DFA":
        return cls(
            d["states"], d["init"], tuple(d["alphabet"]),
            tuple(tuple(r) for r in d["delta"]), frozenset(d["accepting"]),
            tuple(d.get("labels", ())),
        )


def progression_automaton(f: Formula, alphabet) -> DFA:
    """Unminimized DFA whose states are the reachable progressed formulas."""
    alphabet = tuple(alphabet)
    memo = {}
    start = to_dnf(f)
    index = {start: 0}
    forms = [start]
    rows = []
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        row = []
        for a in alphabet:
            nxt = DNF_TRUE if cur == DNF_TRUE else progress(cur, a, memo)
            if nxt not in index:
                index[nxt] = len(forms)
                forms.append(nxt)
                queue.append(nxt)
            row.append(index[nxt])
        rows.append(tuple(row))
    accepting = frozenset(i for i, d in enumerate(forms) if d == DNF_TRUE)
    labels = tuple(str(dnf_to_formula(d)) for d in forms)
    return DFA(len(forms), 0, alphabet, tuple(rows), accepting, labels)


def minimize(d: DFA) -> DFA:
    """Moore partition refinement on the reachable part of ``d``."""
    reach = {d.init}
    stack = [d.init]
    while stack:
        s = stack.pop()
        for t in d.delta[s]:
            if t not in reach:
                reach.add(t)
                stack.append(t)
    states = sorted(reach)
    block = {s: int(s in d.accepting) for s in states}
    while True:
        sig = {s: (block[s],) + tuple(block[t] for t in d.delta[s]) for s in states}
        ids = {}
        new = {}
        for s in states:
            new[s] = ids.setdefault(sig[s], len(ids))
        if len(ids) == len(set(block.values())):
            block = new
            break
        block = new
    # renumber blocks in BFS order from the initial state
    order = {}
    queue = deque([d.init])
    seen = {d.init}
    while queue:
        s = queue.popleft()
        order.setdefault(block[s], len(order))
        for t in d.delta[s]:
            if t not in seen:
                seen.add(t)
                queue.append(t)
    rep = {}
    for s in states:
        rep.setdefault(order[block[s]], s)
    n = len(order)
    delta = tuple(tuple(order[block[t]] for t in d.delta[rep[i]]) for i in range(n))
    accepting = frozenset(order[block[s]] for s in states if s in d.accepting)
    labels = tuple(d.labels[rep[i]] for i in range(n)) if d.labels else ()
    return DFA(n, order[block[d.init]], d.alphabet, delta, accepting, labels)


def to_dfa(f: Formula, alphabet) -> DFA:
    return minimize(progression_automaton(f, alphabet))


def dfa_run(d: DFA, prefix, start=None) -> int:
    s = d.init if start is None else start
    for a in prefix:
        s = d.step(s, a)
    return s


def dfa_accepts_eventually(d: DFA, state: int, tail) -> bool:
    """Whether repeating ``tail`` from ``state`` meets an accepting state."""
    s = state
    for _ in range(d.n_states + 1):
        if s in d.accepting:
            return True
        s = d.step(s, tail)
    return False


def dfa_accepts_word(d: DFA, prefix, tail) -> bool:
    """Some prefix of ``prefix`` followed by ``tail``-repetition is accepted."""
    s = d.init
    for a in prefix:
        if s in d.accepting:
            return True
        s = d.step(s, a)
    return dfa_accepts_eventually(d, s, tail)


def all_words(alphabet, max_len: int):
    for k in range(max_len + 1):
        yield from product(alphabet, repeat=k)
