import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fourierocp.nlp import NlpSolverHandle, check_jacobian, minimize
from fourierocp.transcription import (
    DecisionVector,
    RefineConfig,
    initial_guess,
    normalize,
    refine,
    sample_physical,
    solve_mesh,
)
from fourierocp.uav import default_parameters, drag, trim_alpha

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="module")
def params():
    return default_parameters()


@pytest.fixture(scope="module")
def small_nlp(params):
    return normalize(params, 16)


# ------------------------------------------------------- decision vector


def test_pack_unpack_roundtrip():
    rng = np.random.default_rng(0)
    blocks = [rng.standard_normal(8) for _ in range(6)]
    v = DecisionVector.pack(*blocks, 9.5)
    x, z, gamma, V, alpha, T, T_f = v.unpack()
    for got, want in zip((x, z, gamma, V, alpha, T), blocks):
        assert np.array_equal(got, want)
    assert T_f == 9.5
    again = DecisionVector(8, v.data.copy())
    assert np.array_equal(again.data, v.data)


def test_decision_vector_length_checked():
    with pytest.raises(ValueError):
        DecisionVector(8, np.zeros(10))


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 20), st.floats(1.0, 20.0))
def test_pack_length_invariant(half_n, t_f):
    n = 2 * half_n
    v = DecisionVector.pack(*[np.zeros(n)] * 6, t_f)
    assert v.data.size == 6 * n + 1
    assert v.T_f == t_f


# --------------------------------------------------------- transcription


def test_trim_guess_residuals_vanish(params, small_nlp):
    residual = small_nlp.constraints(small_nlp.start.data)
    assert np.max(np.abs(residual)) < 1e-10


def test_trim_guess_within_bounds(params, small_nlp):
    data = small_nlp.start.data
    assert np.all(data >= small_nlp.lower - 1e-12)
    assert np.all(data <= small_nlp.upper + 1e-12)


def test_initial_guess_trim_values(params):
    guess = initial_guess(params, 16, 10.0)
    alpha = trim_alpha(params, 27.0)
    assert np.allclose(guess.alpha, alpha)
    assert np.allclose(guess.T, drag(params, 27.0, alpha))
    assert guess.T_f == 10.0
    with pytest.raises(ValueError):
        initial_guess(params, 16, -1.0)


def test_objective_constant_thrust(params):
    nlp = normalize(params, 100)
    v = DecisionVector.pack(
        np.zeros(100),
        np.zeros(100),
        np.zeros(100),
        np.full(100, 27.0),
        np.zeros(100),
        np.full(100, 140.0),
        10.0,
    )
    assert nlp.objective(v.data) == pytest.approx(100 * 140.0)
    assert nlp.fuel_rate(v.data) == pytest.approx(0.012 * 140.0)


def test_gamma0_shift_moves_constraint_rows(params, small_nlp):
    # Raising gamma(0) moves every gamma-row residual by -delta through the
    # additive free-constant term; the first block entry doubles as the
    # node-0 sample, so a small integrand correction of order
    # delta * mu * theta_{l,0} rides on top of the uniform shift.
    n = small_nlp.n
    base = small_nlp.start.data.copy()
    c0 = small_nlp.constraints(base)
    delta = 0.05
    shifted = base.copy()
    shifted[2 * n] += delta
    c1 = small_nlp.constraints(shifted)
    diff = c1[2 * n : 3 * n] - c0[2 * n : 3 * n]
    # row 0 collocates the integral from 0 to 0 and is identically zero
    assert diff[0] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(diff[1:], -delta, atol=0.01 * delta)


def test_quadrature_identity_random_vectors(params):
    # J == sigma * mean(T) for any decision vector, to round-off.
    nlp = normalize(params, 32)
    rng = np.random.default_rng(9)
    for _ in range(100):
        data = rng.uniform(-10.0, 150.0, 6 * 32 + 1)
        j1 = params.sigma / 32 * nlp.objective(data)
        j2 = params.sigma * np.mean(data[5 * 32 : 6 * 32])
        assert abs(j1 - j2) <= 1e-14 * max(abs(j1), 1.0)


def test_full_jacobian_matches_fd(params, small_nlp):
    dev = check_jacobian(small_nlp.as_problem(), small_nlp.start.data, 1e-6)
    assert dev < 1e-5


def test_reduced_consistency(params, small_nlp):
    n = small_nlp.n
    rng = np.random.default_rng(4)
    y = np.concatenate(
        (
            0.3 * rng.standard_normal(n),
            20.0 + 2.0 * rng.standard_normal(n),
            0.05 * rng.standard_normal(n),
            rng.uniform(0, 140, n),
            [9.7],
        )
    )
    full = DecisionVector.pack(
        np.zeros(n), np.zeros(n), y[:n], y[n : 2 * n], y[2 * n : 3 * n], y[3 * n : 4 * n], y[4 * n]
    )
    c_full = small_nlp.constraints(full.data)
    c_red = small_nlp.reduced_constraints(y)
    # gamma and V rows plus closures agree between the two views
    assert np.allclose(c_red[: 2 * n], c_full[2 * n : 4 * n], atol=1e-12)
    assert np.allclose(c_red[2 * n :], c_full[4 * n :], atol=1e-12)
    # completion zeroes the x and z rows exactly
    completed = small_nlp.complete(y)
    c_completed = small_nlp.constraints(completed.data)
    assert np.max(np.abs(c_completed[: 2 * n])) < 1e-10


def test_reduced_jacobian_and_hessian_fd(params, small_nlp):
    n = small_nlp.n
    rng = np.random.default_rng(5)
    y = np.concatenate(
        (
            0.2 * rng.standard_normal(n),
            22.0 + rng.standard_normal(n),
            0.03 * rng.standard_normal(n),
            rng.uniform(0, 140, n),
            [10.2],
        )
    )
    jac = small_nlp.reduced_jacobian(y)
    h = 1e-6
    fd = np.empty_like(jac)
    for j in range(y.size):
        e = np.zeros(y.size)
        e[j] = h
        fd[:, j] = (small_nlp.reduced_constraints(y + e) - small_nlp.reduced_constraints(y - e)) / (2 * h)
    assert np.max(np.abs(fd - jac) / (1.0 + np.abs(jac))) < 1e-5

    w = rng.standard_normal(2 * n + 3)
    assert np.max(np.abs(jac.T @ w - small_nlp.reduced_jtprod(y, w))) < 1e-10

    hess = small_nlp.reduced_hessian(y, w)
    fd_h = np.empty_like(hess)
    for j in range(y.size):
        e = np.zeros(y.size)
        e[j] = h
        fd_h[:, j] = (small_nlp.reduced_jtprod(y + e, w) - small_nlp.reduced_jtprod(y - e, w)) / (2 * h)
    assert np.max(np.abs(fd_h - hess) / (1.0 + np.abs(hess))) < 1e-5
    assert np.array_equal(hess, hess.T)


def test_normalize_rejects_bad_mesh(params):
    with pytest.raises(ValueError):
        normalize(params, 7)
    with pytest.raises(ValueError):
        normalize(params, 6)


# -------------------------------------------------------------- solving


def test_solver_contract_smoke(params):
    # Tiny mesh solve: keeps runtime low while exercising the full path.
    nlp = normalize(params, 16)
    solution, result = solve_mesh(nlp, None, NlpSolverHandle(max_outer=30, rho_init=1e3, rho_max=1e7))
    assert result.diagnostics.equality_residual_norm <= 1e-8
    data = solution.data
    assert np.all(data >= nlp.lower - 1e-10)
    assert np.all(data <= nlp.upper + 1e-10)


def test_infeasible_bounds_error_status(params):
    nlp = normalize(params, 16)
    broken = type(nlp)(
        n=nlp.n,
        params=nlp.params,
        grid=nlp.grid,
        lower=nlp.lower,
        upper=np.where(np.isfinite(nlp.upper), -np.abs(nlp.upper), nlp.upper),
        start=nlp.start,
    )
    solution, result = solve_mesh(broken, None, NlpSolverHandle(max_outer=5))
    assert result.status == "invalid_bounds"


def test_objective_scaling_equivalence(params):
    # Solving with the scaled objective and rescaling reproduces the same
    # solution as the physical objective on a small smoke instance.
    from dataclasses import replace

    nlp = normalize(params, 16)
    handle = NlpSolverHandle(max_outer=30, rho_init=1e3, rho_max=1e7)
    reduced = nlp.as_reduced_problem()
    y0 = np.concatenate((nlp.start.gamma, nlp.start.V, nlp.start.alpha, nlp.start.T, [nlp.start.T_f]))
    res_scaled = minimize(reduced, y0, handle)

    sigma_over_n = params.sigma / nlp.n
    physical = replace(
        reduced,
        objective=lambda y: sigma_over_n * reduced.objective(y),
        gradient=lambda y: sigma_over_n * reduced.gradient(y),
        obj_scale=reduced.obj_scale * sigma_over_n,
    )
    res_phys = minimize(physical, y0, handle)
    j_scaled = reduced.objective(res_scaled.x)
    j_phys = physical.objective(res_phys.x)
    assert j_phys == pytest.approx(sigma_over_n * j_scaled, rel=1e-5)
    # Both runs find the same periodic orbit; the free phase lets the node
    # labels rotate, so compare blocks modulo the best cyclic shift.
    n = nlp.n
    gamma_a, gamma_b = res_scaled.x[:n], res_phys.x[:n]
    shifts = [
        np.max(np.abs(np.roll(gamma_a, k) - gamma_b)) for k in range(n)
    ]
    k = int(np.argmin(shifts))
    for sl in (slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n), slice(3 * n, 4 * n)):
        assert np.max(np.abs(np.roll(res_scaled.x[sl], k) - res_phys.x[sl])) < 0.05
    assert res_scaled.x[-1] == pytest.approx(res_phys.x[-1], rel=1e-3)


# -------------------------------------------------------------- sampling


def test_sample_physical_nodes_and_periodicity(params):
    nlp = normalize(params, 16)
    solution, result = solve_mesh(nlp, None, NlpSolverHandle(max_outer=30, rho_init=1e3, rho_max=1e7))
    mu = solution.mu
    grid_times = mu * nlp.grid.nodes
    table = sample_physical(solution, params, grid_times)
    assert np.max(np.abs(table.z - solution.z)) < 1e-9 * (1 + np.max(np.abs(solution.z)))
    assert np.max(np.abs(table.V - solution.V)) < 1e-9 * (1 + np.max(np.abs(solution.V)))
    ends = sample_physical(solution, params, np.array([0.0, solution.T_f]))
    assert abs(ends.z[0] - ends.z[1]) < 1e-6
    assert abs(ends.V[0] - ends.V[1]) < 1e-6
    assert abs(ends.gamma[0] - ends.gamma[1]) < 1e-6


def test_sample_physical_rejects_out_of_range(params):
    nlp = normalize(params, 16)
    with pytest.raises(ValueError):
        sample_physical(nlp.start, params, np.array([-0.1]))
    with pytest.raises(ValueError):
        sample_physical(nlp.start, params, np.array([nlp.start.T_f + 1.0]))


def test_single_mesh_history(params):
    config = RefineConfig(n_in=16, n_inc=2, max_meshes=1, fine_grid_size=64, n_retries=1)
    report = refine(params, config, NlpSolverHandle(max_outer=30, rho_init=1e3, rho_max=1e7))
    assert len(report.history) == 1
    assert report.history[0].n == 16


def test_refine_config_validation():
    with pytest.raises(ValueError):
        RefineConfig(n_in=7)
    with pytest.raises(ValueError):
        RefineConfig(n_inc=1)
    with pytest.raises(ValueError):
        RefineConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        RefineConfig(max_meshes=0)
