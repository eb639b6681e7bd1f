"""``swbisim`` command line: check, abstract, synthesize, verify, plot, simulate.

Exit codes: 0 success, 1 certification check failed, 2 input error,
3 formula error, 4 internal or numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .abstraction import (
    CertificationError, ProblemSpec, QuotientBuilder, SpecError, arbitrary_switching_view,
    bisimulation_violations,
)
from .analysis import (
    AnalysisError, build_product, run_to_target, satisfying_initial_set, simulate,
    switching_sequence, synthesize, trajectory_word, verify_arbitrary,
)
from .geometry import TOL
from .io import (
    InputError, QuotientDump, ResultBundle, dumps, load_json, problem_from_dict,
    problem_to_dict, quotient_from_dict, quotient_summary, quotient_to_dict,
)
from .logic import FormulaError, parse_formula, to_dfa, word_satisfies
from .lyapunov import LyapunovError, contraction_per_mode, gamma_sequence, sampled_contraction
from .plot import PlotError, render_svg

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_FORMULA, EXIT_INTERNAL = 0, 1, 2, 3, 4

log = logging.getLogger("swbisim")


def _env_float(name, default):
    v = os.environ.get(name)
    if v is None:
        return default
    try:
        return float(v)
    except ValueError:
        raise InputError(f"environment variable {name}: not a number: {v!r}") from None


def _apply_tolerances(args):
    TOL.feas = args.tol_feas if args.tol_feas is not None else _env_float("SWBISIM_TOL_FEAS", TOL.feas)
    TOL.strict = args.tol_strict if args.tol_strict is not None else _env_float("SWBISIM_TOL_STRICT", TOL.strict)
    if args.samples is None:
        args.samples = int(_env_float("SWBISIM_SAMPLES", 10_000))
    if not (TOL.feas > 0 and TOL.strict > 0 and args.samples >= 0):
        raise InputError("tolerances must be positive and samples non-negative")


def _info(msg):
    print(msg, file=sys.stderr, flush=True)


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _adopted(spec: ProblemSpec, rho_star: float) -> ProblemSpec:
    # round up so the adopted rate is itself certified
    rho = math.ceil(rho_star * 1e6) / 1e6
    if rho >= 1.0:
        raise CertificationError(f"certified rate {rho_star:.10g} is not below 1")
    return spec.with_rho(rho)


# loading helpers -----------------------------------------------------------

def _load_any(path):
    d = load_json(path)
    if isinstance(d, dict) and d.get("kind") == "quotient":
        return "quotient", quotient_from_dict(d)
    if isinstance(d, dict) and d.get("kind") == "result":
        return "result", ResultBundle.from_dict(d)
    return "problem", problem_from_dict(d)


def _abstract(spec: ProblemSpec, adopt: bool, max_states: int, quiet=False) -> QuotientDump:
    try:
        rho_star = spec.validate(tol=TOL.feas)
    except CertificationError:
        if not adopt:
            raise
        spec = _adopted(spec, spec.lf.certify(spec.modes.values()))
        rho_star = spec.validate(tol=TOL.feas)
        if not quiet:
            _info(f"adopting certified rho = {spec.lf.rho:.6f}")
    t0 = time.perf_counter()
    b = QuotientBuilder(spec, max_states=max_states, check=False)
    T, _ = b.run(progress=None if quiet else lambda i, k: _info(f"  iteration {i}: {k} states"))
    elapsed = time.perf_counter() - t0
    gs = list(b.gammas.gammas)
    raw = quotient_to_dict(T, spec, gs, rho_star)
    if not quiet:
        _info(f"N = {b.gammas.N}")
        for k, v in T.slice_counts().items():
            _info(f"  slice {k}: {v} states")
        _info(f"states = {len(T)}, transitions = {len(T.transitions)}, time = {elapsed:.1f} s")
    return QuotientDump(spec, T, gs, rho_star, raw)


def _quotient_for(args) -> QuotientDump:
    kind, obj = _load_any(args.input)
    if kind == "quotient":
        return obj
    if kind == "result":
        raise InputError(f"{args.input}: expected a problem file or a quotient dump")
    return _abstract(obj, args.adopt_certified_rho, args.max_states)


def _formula_for(args, spec: ProblemSpec) -> str:
    text = args.formula if args.formula is not None else spec.formula
    if text is None:
        raise InputError("formula: none given on the command line or in the problem")
    return text


# subcommands --------------------------------------------------------------

def cmd_check(args) -> int:
    kind, spec = _load_any(args.input)
    if kind != "problem":
        spec = spec.spec if kind == "quotient" else problem_from_dict(spec.problem)
    print(f"L: {spec.lf.L.shape[0]} x {spec.n}, full column rank: yes")
    try:
        spec_rates = contraction_per_mode(spec.lf.L, spec.modes.values())
    except LyapunovError as e:
        raise InputError(str(e)) from None
    for name, r in zip(spec.modes, spec_rates):
        print(f"mode {name}: rho* = {r:.10f}")
    rho_star = max(spec_rates)
    if args.samples:
        est = sampled_contraction(spec.lf.L, spec.modes.values(), args.samples)
        print(f"sampled estimate ({args.samples} directions): {est:.10f}")
    ok = rho_star <= spec.lf.rho + TOL.feas
    print(f"rho* = {rho_star:.10f} <= {spec.lf.rho:g}: {'PASS' if ok else 'FAIL'}")
    try:
        spec.validate(tol=math.inf)
    except SpecError as e:
        print(f"set assumptions: FAIL ({e})")
        return EXIT_FAIL
    print("set assumptions: PASS")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_abstract(args) -> int:
    kind, spec = _load_any(args.input)
    if kind != "problem":
        raise InputError(f"{args.input}: expected a problem file")
    qd = _abstract(spec, args.adopt_certified_rho, args.max_states)
    if args.samples and args.check_bisimulation:
        per = max(1, args.samples // max(1, len(qd.T)))
        bad = bisimulation_violations(qd.T, qd.spec, per, np.random.default_rng(0))
        print(f"bisimulation sampling: {len(bad)} violations", file=sys.stderr)
        if bad:
            return EXIT_INTERNAL
    _write(args.out, dumps(qd.raw))
    return EXIT_OK


def _analyse(args, mode) -> int:
    qd = _quotient_for(args)
    spec, T = qd.spec, qd.T
    text = _formula_for(args, spec)
    f = parse_formula(text, spec.regions)
    d = to_dfa(f, spec.letters)
    t0 = time.perf_counter()
    if mode == "synthesize":
        pa = build_product(T, d)
        st = synthesize(pa)
        init = satisfying_initial_set(st, pa, T)
        table = [
            [*pa.states[i], a, *pa.states[j], st.dist[i]]
            for i, (a, j) in sorted(st.choice.items())
        ]
        extra = {"product_states": len(pa), "winning": len(st.winning)}
    else:
        pa = build_product(arbitrary_switching_view(T), d)
        vt, init = verify_arbitrary(pa, T)
        table = [[*pa.states[i], vt[i]] for i in sorted(vt.finite())]
        extra = {"product_states": len(pa), "winning": len(vt.finite())}
    elapsed = time.perf_counter() - t0
    bundle = ResultBundle(
        mode, text, d, qd.gammas, qd.rho_certified, quotient_summary(T),
        list(init.states), init.region, table, {"seconds": round(elapsed, 3), **extra},
        problem_to_dict(spec),
    )
    name = "X^S" if mode == "synthesize" else "X^AS"
    _info(f"formula: {text}")
    _info(f"automaton states: {d.n_states}, product states: {len(pa)}")
    _info(f"{name}: {len(init.states)} of {len(T)} partition classes, time = {elapsed:.2f} s")
    _write(args.out, dumps(bundle.to_dict()))
    return EXIT_OK


def cmd_synthesize(args) -> int:
    return _analyse(args, "synthesize")


def cmd_verify(args) -> int:
    return _analyse(args, "verify")


def _parse_point(text, n):
    try:
        x = np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise InputError(f"--x0: not a comma-separated list of numbers: {text!r}") from None
    if x.shape != (n,):
        raise InputError(f"--x0: expected {n} coordinates, got {x.shape[0]}")
    return x


def cmd_plot(args) -> int:
    kind, obj = _load_any(args.input)
    highlight, partition, trajs = None, None, []
    if kind == "problem":
        spec = obj
        gammas = gamma_sequence(spec.gamma_D, spec.gamma_X, spec.lf.rho).gammas
    elif kind == "quotient":
        spec, gammas = obj.spec, obj.gammas
        if args.partition:
            partition = [s.region for s in obj.T.states]
    else:
        spec, gammas = problem_from_dict(obj.problem), obj.gammas
        highlight = obj.region
    if args.slice is not None:
        from .lyapunov import build_slices

        gs = gamma_sequence(spec.gamma_D, spec.gamma_X, spec.lf.rho)
        if not 0 <= args.slice <= gs.N:
            raise InputError(f"--slice: expected 0..{gs.N}")
        highlight = build_slices(spec.lf.L, gs)[args.slice]
    for text in args.trajectory or []:
        x0 = _parse_point(text, spec.n)
        seq = args.sequence.split(",") if args.sequence else []
        trajs.append(run_to_target(spec, x0, seq))
    svg = render_svg(spec, gammas, highlight, partition, trajs, title=args.title)
    _write(args.out, svg)
    return EXIT_OK


def cmd_simulate(args) -> int:
    kind, obj = _load_any(args.input)
    if kind == "result":
        raise InputError(f"{args.input}: expected a problem file or a quotient dump")
    spec = obj if kind == "problem" else obj.spec
    x0 = _parse_point(args.x0, spec.n)
    if spec.lf(x0) > spec.gamma_X:
        raise InputError("--x0: point lies outside X")
    text = args.formula if args.formula is not None else spec.formula
    if args.sequence:
        seq = args.sequence.split(",")
        unknown = [a for a in seq if a not in spec.modes]
        if unknown:
            raise InputError(f"--sequence: unknown modes {unknown}")
    else:
        if text is None:
            raise InputError("simulate needs --sequence or a formula to synthesize one")
        qd = obj if kind == "quotient" else _abstract(spec, args.adopt_certified_rho, args.max_states, quiet=True)
        f = parse_formula(text, spec.regions)
        T = qd.T
        pa = build_product(T, to_dfa(f, spec.letters))
        seq = switching_sequence(x0, synthesize(pa), pa, T)
    traj = run_to_target(spec, x0, seq) if args.to_target else simulate(spec, x0, seq)
    print("sequence: " + (",".join(seq) if seq else "(empty)"))
    for k, x in enumerate(traj):
        print(f"  x[{k}] = " + ", ".join(f"{v:.6f}" for v in x) + f"   V = {spec.lf(x):.6f}")
    if text is not None and spec.lf(traj[-1]) <= spec.gamma_D:
        f = parse_formula(text, spec.regions)
        prefix, tail = trajectory_word(spec, traj)
        print("word: " + " ".join(prefix + [tail + "^w"]))
        print(f"satisfies formula: {word_satisfies(f, prefix, tail)}")
    if args.svg:
        _write(args.svg, render_svg(spec, gamma_sequence(spec.gamma_D, spec.gamma_X, spec.lf.rho).gammas,
                                    trajectories=[traj]))
    return EXIT_OK


# parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swbisim", description="Finite bisimulations of switched linear systems.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-feas", type=float, default=None, help="LP feasibility tolerance")
    common.add_argument("--tol-strict", type=float, default=None, help="minimum interior slack for non-empty cells")
    common.add_argument("--samples", type=int, default=None, help="sample count for sampling checks")
    common.add_argument("-v", "--verbose", action="store_true")
    abstr = argparse.ArgumentParser(add_help=False)
    abstr.add_argument("--adopt-certified-rho", action="store_true",
                       help="if the declared rho fails certification, use the certified rate rounded up to 1e-6")
    abstr.add_argument("--max-states", type=int, default=1_000_000)

    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("check", parents=[common], help="certify the Lyapunov function and set assumptions")
    s.add_argument("input")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("abstract", parents=[common, abstr], help="compute the bisimulation quotient")
    s.add_argument("input")
    s.add_argument("-o", "--out", default="-")
    s.add_argument("--check-bisimulation", action="store_true", help="run the sampling check on the result")
    s.set_defaults(func=cmd_abstract)

    for name, fn, what in (("synthesize", cmd_synthesize, "largest set satisfiable by some switching"),
                           ("verify", cmd_verify, "largest set satisfying under all switching")):
        s = sub.add_parser(name, parents=[common, abstr], help=what)
        s.add_argument("input", help="problem file or quotient dump")
        s.add_argument("-f", "--formula")
        s.add_argument("-o", "--out", default="-")
        s.set_defaults(func=fn)

    s = sub.add_parser("plot", parents=[common], help="SVG figure of a problem, dump or result")
    s.add_argument("input")
    s.add_argument("-o", "--out", default="-")
    s.add_argument("--slice", type=int, help="highlight slice i")
    s.add_argument("--partition", action="store_true", help="outline partition classes (quotient dumps)")
    s.add_argument("--trajectory", action="append", metavar="X0", help="overlay a trajectory from X0 (comma-separated)")
    s.add_argument("--sequence", help="modes for --trajectory, comma-separated")
    s.add_argument("--title")
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("simulate", parents=[common, abstr], help="trajectory under a given or synthesized sequence")
    s.add_argument("input", help="problem file or quotient dump")
    s.add_argument("--x0", required=True)
    s.add_argument("--sequence", help="comma-separated modes; synthesized from the formula if omitted")
    s.add_argument("-f", "--formula")
    s.add_argument("--to-target", action="store_true", help="continue with the first mode until D")
    s.add_argument("--svg")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_tolerances(args)
        return args.func(args)
    except FormulaError as e:
        print(f"formula error: {e}", file=sys.stderr)
        return EXIT_FORMULA
    except (InputError, SpecError, AnalysisError, PlotError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # noqa: BLE001
        print(f"internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
