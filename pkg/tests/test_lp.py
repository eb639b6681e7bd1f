import numpy as np
import pytest
from scipy.optimize import linprog

from swbisim.lp import INFEASIBLE, OPTIMAL, UNBOUNDED, LPError, lp_arrays, lp_optimize
from swbisim.geometry import LinearConstraint


def test_box_maximum():
    A = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
    b = np.array([2.0, 1, 3, 0])
    status, value, x = lp_arrays(A, b, np.array([1.0, 1.0]))
    assert status == OPTIMAL
    assert value == pytest.approx(5.0)
    assert np.allclose(x, [2, 3])


def test_infeasible_and_unbounded():
    A = np.array([[1.0, 0], [-1, 0]])
    assert lp_arrays(A, np.array([-1.0, -1.0]), np.array([1.0, 0]))[0] == INFEASIBLE
    assert lp_arrays(np.array([[1.0, 0]]), np.array([1.0]), np.array([0.0, 1.0]))[0] == UNBOUNDED


def test_negative_rhs_needs_phase_one():
    # x >= 1, y >= 2, x + y <= 4
    A = np.array([[-1.0, 0], [0, -1], [1, 1]])
    b = np.array([-1.0, -2, 4])
    status, value, x = lp_arrays(A, b, np.array([-1.0, -1.0]))
    assert status == OPTIMAL
    assert value == pytest.approx(-3.0)


def test_degenerate_vertex_does_not_cycle():
    # many constraints active at the origin
    th = np.linspace(0, np.pi / 2, 12)
    A = np.column_stack([np.cos(th), np.sin(th)])
    b = np.zeros(len(th))
    A = np.vstack([A, [[-1, 0], [0, -1]]])
    b = np.append(b, [1.0, 1.0])
    status, value, _ = lp_arrays(A, b, np.array([-1.0, -1.0]))
    assert status == OPTIMAL
    assert value == pytest.approx(2.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        lp_arrays(np.zeros((2, 2)), np.zeros(3), np.zeros(2))


def test_iteration_limit_raises():
    A = np.array([[-1.0, 0], [0, -1], [1, 1]])
    with pytest.raises(LPError):
        lp_arrays(A, np.array([-1.0, -2, 4]), np.array([-1.0, -1.0]), max_iter=0)


def test_lp_optimize_min_sense():
    cons = [LinearConstraint((1, 0), 3), LinearConstraint((-1, 0), -1), LinearConstraint((0, 1), 1),
            LinearConstraint((0, -1), 1)]
    r = lp_optimize((1.0, 2.0), cons, sense="min")
    assert r.status == "optimal"
    assert r.value == pytest.approx(-1.0)
    assert lp_optimize((1.0, 0.0), cons[:1] + [LinearConstraint((-1, 0), -4)]).status == "infeasible"


def test_agrees_with_scipy_on_random_instances():
    rng = np.random.default_rng(7)
    for _ in range(400):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 10))
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m) + 0.3
        c = rng.normal(size=n)
        status, value, x = lp_arrays(A, b, c)
        ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
        if ref.status == 0:
            assert status == OPTIMAL
            assert value == pytest.approx(-ref.fun, abs=1e-7)
            assert np.all(A @ x <= b + 1e-7)
        elif ref.status == 2:
            assert status == INFEASIBLE
        elif ref.status == 3:
            assert status == UNBOUNDED
