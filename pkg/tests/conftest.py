import json
from pathlib import Path

import numpy as np
import pytest

from swbisim.abstraction import ProblemSpec, build_quotient
from swbisim.geometry import Polytope
from swbisim.lyapunov import PolyhedralLF

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"

A1 = np.array([[-0.65, 0.32], [-0.42, -0.92]])
A2 = np.array([[0.65, 0.32], [-0.42, -0.92]])
L_EX = np.array([[-0.0625, 1.0], [0.6815, 1.0], [0.9947, 0.6868], [0.9947, -0.0678]])
RHO_CERT = 0.940009  # certified rate of the printed data, rounded up


def box(x0, x1, y0, y1):
    return Polytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [x1, -x0, y1, -y0])


def problem_path(name):
    return PROBLEMS / f"{name}.json"


def load_problem_dict(name):
    return json.loads(problem_path(name).read_text())


def reduced_spec(formula="F R1"):
    return ProblemSpec(
        {"1": A1, "2": A2}, PolyhedralLF(L_EX, RHO_CERT), 6.4, 5.063,
        {"R1": box(5.2, 5.9, -1.5, 0.5)}, formula,
    )


@pytest.fixture(scope="session")
def reduced():
    spec = reduced_spec()
    T, partition = build_quotient(spec)
    return spec, T, partition


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance verdicts, printed once at the end of the run
ACCEPTANCE = {}


def record(number, ok, detail):
    ACCEPTANCE[number] = (ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
