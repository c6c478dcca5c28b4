import numpy as np
import pytest

from lexborrow.optimize import DivergenceError, minimize, pseudo_gradient


def quadratic(A, b):
    def f(x):
        return 0.5 * x @ A @ x - b @ x, A @ x - b
    return f


def test_lbfgs_solves_quadratic():
    rng = np.random.default_rng(0)
    M = rng.normal(size=(8, 8))
    A = M @ M.T + 8 * np.eye(8)
    b = rng.normal(size=8)
    res = minimize(quadratic(A, b), np.zeros(8), tolerance=1e-14, max_iterations=500)
    np.testing.assert_allclose(res.x, np.linalg.solve(A, b), atol=1e-6)


def test_trace_non_increasing():
    rng = np.random.default_rng(1)
    A = np.diag(rng.uniform(1, 50, 20))
    b = rng.normal(size=20)
    res = minimize(quadratic(A, b), np.zeros(20), c1=0.3, tolerance=1e-12)
    assert all(b2 <= a + 1e-12 for a, b2 in zip(res.trace, res.trace[1:]))


def test_l1_soft_threshold_on_separable_problem():
    # 0.5 (x - b)^2 + c1 |x| has the soft-thresholded solution
    b = np.array([3.0, -2.0, 0.5, -0.2, 0.0])
    c1 = 1.0
    f = lambda x: (0.5 * ((x - b) ** 2).sum(), x - b)
    res = minimize(f, np.zeros(5), c1=c1, tolerance=1e-14, max_iterations=500)
    expected = np.sign(b) * np.maximum(np.abs(b) - c1, 0)
    np.testing.assert_allclose(res.x, expected, atol=1e-8)
    assert (res.x[2:] == 0).all()


def test_huge_l1_keeps_zero():
    f = lambda x: (float(((x - 1) ** 2).sum()), 2 * (x - 1))
    res = minimize(f, np.zeros(4), c1=1000.0)
    assert (res.x == 0).all() and res.converged


def test_pseudo_gradient_at_zero():
    x = np.zeros(3)
    g = np.array([-2.0, 0.5, 3.0])
    np.testing.assert_allclose(pseudo_gradient(x, g, 1.0), [-1.0, 0.0, 2.0])
    np.testing.assert_allclose(pseudo_gradient(np.array([1.0, -1.0, 0]), g, 1.0), [-1.0, -0.5, 2.0])


def test_divergence_names_iteration():
    with pytest.raises(DivergenceError) as exc:
        minimize(lambda x: (float("nan"), x), np.zeros(2))
    assert exc.value.iteration == 0


def test_max_iterations_cap():
    A = np.diag(np.logspace(0, 6, 30))
    res = minimize(quadratic(A, np.ones(30)), np.zeros(30), max_iterations=3, tolerance=1e-30)
    assert res.iterations == 3 and not res.converged
