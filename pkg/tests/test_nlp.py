import numpy as np
import pytest

from fourierocp.nlp import (
    NlpProblem,
    NlpSolverHandle,
    check_jacobian,
    minimize,
)


def quadratic_problem():
    return NlpProblem(
        n_vars=1,
        objective=lambda x: (x[0] - 3.0) ** 2,
        gradient=lambda x: np.array([2.0 * (x[0] - 3.0)]),
        lower=np.array([0.0]),
        upper=np.array([2.0]),
    )


def circle_problem():
    return NlpProblem(
        n_vars=2,
        objective=lambda x: x[0] + x[1],
        gradient=lambda x: np.ones(2),
        constraints=lambda x: np.array([x[0] ** 2 + x[1] ** 2 - 1.0]),
        jacobian=lambda x: np.array([[2.0 * x[0], 2.0 * x[1]]]),
    )


def test_clipped_quadratic():
    result = minimize(quadratic_problem(), np.array([0.5]))
    assert result.success
    assert result.x[0] == pytest.approx(2.0, abs=1e-10)
    assert 0 in result.diagnostics.active_bounds


def test_textbook_lagrange_point():
    result = minimize(circle_problem(), np.array([0.5, -0.5]))
    assert result.success
    assert np.max(np.abs(result.x + np.sqrt(2.0) / 2.0)) < 1e-8
    assert result.diagnostics.equality_residual_norm <= 1e-8


def test_rosenbrock_with_equality():
    # Oracle: with x0 pinned at 1 the reduced problem is (x1 - 1)^2-like
    # with unique minimiser (1, 1).
    def rosen(x):
        return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

    def rosen_grad(x):
        return np.array(
            [
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] ** 2),
                200.0 * (x[1] - x[0] ** 2),
            ]
        )

    problem = NlpProblem(
        n_vars=2,
        objective=rosen,
        gradient=rosen_grad,
        constraints=lambda x: np.array([x[0] - 1.0]),
        jacobian=lambda x: np.array([[1.0, 0.0]]),
    )
    result = minimize(problem, np.array([-1.2, 1.0]))
    assert result.success
    assert np.max(np.abs(result.x - 1.0)) < 1e-6


def test_invalid_bounds_reported():
    problem = NlpProblem(
        n_vars=1,
        objective=lambda x: x[0] ** 2,
        gradient=lambda x: 2.0 * x,
        lower=np.array([1.0]),
        upper=np.array([-1.0]),
    )
    result = minimize(problem, np.array([0.0]))
    assert result.status == "invalid_bounds"


def test_nan_objective_aborts_with_diagnostic():
    problem = NlpProblem(
        n_vars=1,
        objective=lambda x: float("nan"),
        gradient=lambda x: np.zeros(1),
        constraints=lambda x: np.zeros(1),
        jacobian=lambda x: np.zeros((1, 1)),
    )
    result = minimize(problem, np.array([0.0]))
    assert result.status == "evaluator_error"
    assert "objective" in result.message


def test_deterministic_iterates():
    a = minimize(circle_problem(), np.array([0.5, -0.5]))
    b = minimize(circle_problem(), np.array([0.5, -0.5]))
    assert np.array_equal(a.x, b.x)
    assert a.iterations == b.iterations


def test_handle_validation():
    with pytest.raises(ValueError):
        NlpSolverHandle(tol_feasibility=0.0)
    with pytest.raises(ValueError):
        NlpSolverHandle(max_outer=0)


def test_feasible_iterate_never_abandoned():
    # Start at a feasible point and cap the outer iterations hard: the
    # returned iterate must still be (near) feasible.
    problem = circle_problem()
    handle = NlpSolverHandle(max_outer=2, max_inner=5)
    result = minimize(problem, np.array([1.0, 0.0]), handle)
    assert result.diagnostics.equality_residual_norm <= 1e-2


def test_check_jacobian_clean_and_corrupted():
    clean = circle_problem()
    assert check_jacobian(clean, np.array([0.3, 0.7])) < 1e-9

    linear = NlpProblem(
        n_vars=2,
        objective=lambda x: x[0],
        gradient=lambda x: np.array([1.0, 0.0]),
        constraints=lambda x: np.array([2.0 * x[0] - x[1]]),
        jacobian=lambda x: np.array([[2.0, -1.0]]),
    )
    # central differences are exact for linear maps, so a large step avoids
    # the cancellation floor entirely
    assert check_jacobian(linear, np.array([0.3, 0.7]), step=0.5) < 1e-12

    corrupted = NlpProblem(
        n_vars=2,
        objective=lambda x: x[0],
        gradient=lambda x: np.array([1.0, 0.0]),
        constraints=lambda x: np.array([x[0] ** 2 + x[1] ** 2 - 1.0]),
        jacobian=lambda x: np.array([[2.0 * x[0] + 1.0, 2.0 * x[1]]]),
    )
    assert check_jacobian(corrupted, np.array([0.3, 0.7])) > 1e-2


def test_check_jacobian_requires_step():
    with pytest.raises(ValueError):
        check_jacobian(circle_problem(), np.array([0.3, 0.7]), step=0.0)
