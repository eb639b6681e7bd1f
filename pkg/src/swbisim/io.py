"""JSON problem files, quotient dumps and result bundles.

Dumps are written with sorted keys and Python's shortest float repr, so
``dumps(load(text)) == text`` holds for any dump produced here.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .abstraction import ProblemSpec, QuotientState, QuotientTS, SpecError
from .geometry import Cell, Polytope, Region
from .logic import DFA
from .lyapunov import PolyhedralLF, LyapunovError

FORMAT_VERSION = 1


class InputError(ValueError):
    """Malformed input; the message starts with the offending key path."""


# problem files ----------------------------------------------------------

def _matrix(obj, path, rows=None, cols=None):
    try:
        M = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{path}: expected a numeric matrix") from None
    if M.ndim != 2:
        raise InputError(f"{path}: expected a matrix, got {M.ndim}-d data")
    if rows is not None and M.shape[0] != rows or cols is not None and M.shape[1] != cols:
        want = f"{rows if rows is not None else '*'}x{cols if cols is not None else '*'}"
        raise InputError(f"{path}: expected {want}, got {M.shape[0]}x{M.shape[1]}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{path}: non-finite entries")
    return M


def _number(obj, path):
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise InputError(f"{path}: expected a number")
    return float(obj)


def _get(d, key, path):
    if not isinstance(d, dict):
        raise InputError(f"{path or '<root>'}: expected an object")
    if key not in d:
        raise InputError(f"{path + '.' if path else ''}{key}: missing")
    return d[key]


def problem_from_dict(d) -> ProblemSpec:
    n = _get(d, "n", "")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError("n: expected a positive integer")
    modes_raw = _get(d, "modes", "")
    if not isinstance(modes_raw, dict) or not modes_raw:
        raise InputError("modes: expected a non-empty object")
    modes = {str(k): _matrix(v, f"modes.{k}", n, n) for k, v in modes_raw.items()}
    lyap = _get(d, "lyapunov", "")
    L = _matrix(_get(lyap, "L", "lyapunov"), "lyapunov.L", None, n)
    rho = _number(_get(lyap, "rho", "lyapunov"), "lyapunov.rho")
    try:
        lf = PolyhedralLF(L, rho)
    except LyapunovError as e:
        raise InputError(f"lyapunov: {e}") from None
    gX = _number(_get(d, "gamma_X", ""), "gamma_X")
    gD = _number(_get(d, "gamma_D", ""), "gamma_D")
    if not 0 < gD < gX:
        raise InputError("gamma_D: need 0 < gamma_D < gamma_X")
    regions = {}
    regs = d.get("regions", {})
    if not isinstance(regs, dict):
        raise InputError("regions: expected an object")
    for k, r in regs.items():
        H = _matrix(_get(r, "H", f"regions.{k}"), f"regions.{k}.H", None, n)
        h = np.array(_get(r, "h", f"regions.{k}"), dtype=float).reshape(-1)
        if h.shape[0] != H.shape[0]:
            raise InputError(f"regions.{k}.h: expected {H.shape[0]} entries, got {h.shape[0]}")
        regions[str(k)] = Polytope(H, h)
    formula = d.get("formula")
    if formula is not None and not isinstance(formula, str):
        raise InputError("formula: expected a string")
    return ProblemSpec(modes, lf, gX, gD, regions, formula)


def problem_to_dict(spec: ProblemSpec) -> dict:
    d = {
        "n": spec.n,
        "modes": {k: A.tolist() for k, A in spec.modes.items()},
        "lyapunov": {"L": spec.lf.L.tolist(), "rho": spec.lf.rho},
        "gamma_X": spec.gamma_X,
        "gamma_D": spec.gamma_D,
        "regions": {k: {"H": P.H.tolist(), "h": P.h.tolist()} for k, P in spec.regions.items()},
    }
    if spec.formula is not None:
        d["formula"] = spec.formula
    return d


def load_problem(path) -> ProblemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None
    return problem_from_dict(d)


# cells and regions -------------------------------------------------------

def cell_to_dict(c: Cell) -> dict:
    return {"A": c.A.tolist(), "b": c.b.tolist(), "strict": c.strict.tolist()}


def cell_from_dict(d, dim: int, path: str = "cell", check: bool = True) -> Cell:
    try:
        c = Cell(np.array(d["A"], dtype=float).reshape(-1, dim), d["b"], d["strict"], normalize=False)
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: malformed cell ({e})") from None
    if check and c.is_empty():
        raise InputError(f"{path}: cell is empty")
    return c


def region_to_list(r: Region) -> list:
    return [cell_to_dict(c) for c in r.cells]


def region_from_list(cells, dim: int, path: str, check: bool = True) -> Region:
    return Region([cell_from_dict(c, dim, f"{path}[{i}]", check) for i, c in enumerate(cells)], dim)


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


# quotient dumps ----------------------------------------------------------

def quotient_to_dict(T: QuotientTS, spec: ProblemSpec, gammas, rho_star: float) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": "quotient",
        "problem": problem_to_dict(spec),
        "gammas": list(gammas),
        "rho_certified": rho_star,
        "sigma": list(T.sigma),
        "d_state": T.d_state,
        "states": [
            {"id": s.id, "slice": s.slice, "obs": s.obs, "cells": region_to_list(s.region)}
            for s in T.states
        ],
        "transitions": [
            [q, a, t]
            for q, a, t in sorted(T.transitions, key=lambda e: (e[0], T.sigma.index(e[1]), e[2]))
        ],
    }


@dataclass
class QuotientDump:
    spec: ProblemSpec
    T: QuotientTS
    gammas: list
    rho_certified: float
    raw: dict = field(repr=False)


def _check_version(d, kind):
    if not isinstance(d, dict):
        raise InputError("<root>: expected an object")
    v = d.get("format_version")
    if v != FORMAT_VERSION:
        raise InputError(f"format_version: unsupported value {v!r}")
    if d.get("kind") != kind:
        raise InputError(f"kind: expected {kind!r}, got {d.get('kind')!r}")


def quotient_from_dict(d, check: bool = True) -> QuotientDump:
    _check_version(d, "quotient")
    spec = problem_from_dict(_get(d, "problem", ""))
    n = spec.n
    states = []
    for i, s in enumerate(_get(d, "states", "")):
        if s.get("id") != i:
            raise InputError(f"states[{i}].id: expected {i}")
        region = region_from_list(s["cells"], n, f"states[{i}].cells", check)
        states.append(QuotientState(i, region, int(s["slice"]), str(s["obs"])))
    sigma = tuple(_get(d, "sigma", ""))
    trans = []
    for k, e in enumerate(_get(d, "transitions", "")):
        q, a, t = e
        if a not in sigma or not (0 <= q < len(states) and 0 <= t < len(states)):
            raise InputError(f"transitions[{k}]: invalid edge {e}")
        trans.append((q, a, t))
    T = QuotientTS(states, sigma, trans, int(_get(d, "d_state", "")))
    return QuotientDump(spec, T, list(d["gammas"]), float(d["rho_certified"]), d)


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise InputError(f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from None


# result bundles ----------------------------------------------------------

@dataclass
class ResultBundle:
    """Outcome of synthesis or verification, with everything needed to
    reproduce figures and check claims offline."""

    mode: str  # "synthesize" or "verify"
    formula: str
    dfa: DFA
    gammas: list
    rho_certified: float
    quotient: dict  # summary: states, transitions, per_slice
    states: list  # quotient ids in the initial set
    region: Region
    table: list  # strategy rows or value rows
    timing: dict
    problem: dict

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": "result",
            "mode": self.mode,
            "formula": self.formula,
            "dfa": self.dfa.to_dict(),
            "gammas": list(self.gammas),
            "rho_certified": self.rho_certified,
            "quotient": self.quotient,
            "initial_set": {"states": list(self.states), "cells": region_to_list(self.region)},
            "table": self.table,
            "timing": self.timing,
            "problem": self.problem,
        }

    @classmethod
    def from_dict(cls, d, check: bool = True) -> "ResultBundle":
        _check_version(d, "result")
        spec = problem_from_dict(_get(d, "problem", ""))
        init = _get(d, "initial_set", "")
        region = region_from_list(init["cells"], spec.n, "initial_set.cells", check)
        return cls(
            d["mode"], d["formula"], DFA.from_dict(d["dfa"]), list(d["gammas"]),
            float(d["rho_certified"]), d["quotient"], list(init["states"]), region,
            d["table"], d["timing"], d["problem"],
        )


def quotient_summary(T: QuotientTS) -> dict:
    per = {}
    for q, _, _ in T.transitions:
        s = str(T.states[q].slice)
        per[s] = per.get(s, 0) + 1
    return {
        "states": len(T),
        "transitions": len(T.transitions),
        "states_per_slice": {str(k): v for k, v in T.slice_counts().items()},
        "transitions_per_slice": dict(sorted(per.items(), key=lambda kv: int(kv[0]))),
    }


__all__ = [
    "FORMAT_VERSION", "InputError", "QuotientDump", "ResultBundle", "SpecError",
    "cell_from_dict", "cell_to_dict", "dumps", "load_json", "load_problem",
    "problem_from_dict", "problem_to_dict", "quotient_from_dict", "quotient_summary",
    "quotient_to_dict", "region_from_list", "region_to_list",
]
