import numpy as np
import pytest

from hypinverse.errors import BallEscape, GridMismatch, NonConvergence
from hypinverse.inverse import (
    Iterate, SolveResult, apply_Phi, fixed_point_solve, forward_solve, initial_iterate, norm_B, norm_E,
    recover_a, residual_report, solve_problem,
)
from hypinverse.basis import lambda_k
from hypinverse.manufactured import build, error_report, preset_spec
from hypinverse.problem import Discretization, ProblemData
from hypinverse.spectral import SpectralState, extract_data, time_grid

K, NT, NX = 8, 129, 513


@pytest.fixture(scope="module", params=["single-odd", "odd-even"])
def manufactured(request):
    problem, truth = build(preset_spec(request.param, 0.5))
    data = extract_data(problem, Discretization(K, NT, NX))
    return problem, data, truth.iterate(K, NT)


def manufactured_spec(problem):
    return preset_spec("single-odd" if problem.beta == 3.0 else "odd-even", 0.5)


def trivial(h):
    return ProblemData(0.5, 0.2, 0.1, 0.5, "0", "0", "0", h)


# ------------------------------------------------------------- norms

def test_norm_examples():
    g = time_grid(1.0, 5)
    modes = np.zeros((3, 5))
    modes[0] = 1.0
    assert norm_B(SpectralState(modes, g)) == 1.0
    modes = np.zeros((3, 5))
    modes[1] = 1.0
    assert norm_B(SpectralState(modes, g)) == pytest.approx(8 * np.pi**3)
    z = Iterate(SpectralState(np.zeros((3, 5)), g), np.full(5, -2.0))
    assert norm_E(z) == 2.0


def test_iterate_validation():
    g = time_grid(1.0, 5)
    with pytest.raises(GridMismatch):
        Iterate(SpectralState.zeros(1, g), np.zeros(4))
    with pytest.raises(ValueError):
        Iterate(SpectralState.zeros(1, g), np.full(5, np.nan))


def test_geometric_mean_ratio():
    g = time_grid(1.0, 5)
    z = Iterate.zeros(1, g)
    assert SolveResult(z, 0, [], True, []).geometric_mean_ratio is None
    assert SolveResult(z, 3, [], True, [0.5, 0.0]).geometric_mean_ratio == 0.0
    assert SolveResult(z, 3, [], True, [0.25, 1.0]).geometric_mean_ratio == pytest.approx(0.5)


# ------------------------------------------------------------- Phi

def test_phi_constant_observation_gives_zero_coefficient():
    data = extract_data(trivial("2"), Discretization(2, 33, 129))
    z = initial_iterate(data, trivial("2").nonlocal_params)
    assert np.max(np.abs(z.a)) <= 1e-14
    assert np.max(np.abs(z.state.modes)) == 0.0


def test_phi_exponential_observation_gives_unit_coefficient():
    problem = trivial("3*exp(t)")
    data = extract_data(problem, Discretization(2, 33, 129))
    z = initial_iterate(data, problem.nonlocal_params)
    assert np.allclose(z.a, 1.0, atol=1e-13)


def test_recover_a_sign_convention():
    """a = [h'' - f(1/2) + 1/2 sum (-1)^k lambda_k^2 u_{2k-1}] / h."""
    data = extract_data(trivial("1"), Discretization(2, 9, 65))
    modes = np.zeros((5, 9))
    modes[1] = 1.0
    modes[3] = 2.0
    a, tail = recover_a(modes, data)
    expected = 0.5 * (-lambda_k(1) ** 2 + 2 * lambda_k(2) ** 2)
    assert np.allclose(a, expected)
    assert tail == pytest.approx(lambda_k(2) ** 2 / expected)


def test_apply_phi_grid_checks(manufactured):
    problem, data, _ = manufactured
    with pytest.raises(GridMismatch):
        apply_Phi(Iterate.zeros(K + 1, data.grid), data, problem.nonlocal_params)


def test_truth_is_a_fixed_point(manufactured):
    problem, data, truth = manufactured
    nl = problem.nonlocal_params
    gap = norm_E(apply_Phi(truth, data, nl) - truth)
    assert gap <= 1e-5
    fine = extract_data(problem, Discretization(K, 2 * NT - 1, NX))
    truth_f = build(manufactured_spec(problem))[1].iterate(K, 2 * NT - 1)
    gap_f = norm_E(apply_Phi(truth_f, fine, nl) - truth_f)
    assert gap / gap_f >= 8  # the defect is discretization error


def test_phi_is_locally_lipschitz_with_small_constant(manufactured):
    problem, data, truth = manufactured
    nl = problem.nonlocal_params
    rng = np.random.default_rng(11)
    t = data.grid.nodes
    base = apply_Phi(truth, data, nl)
    for s in (1e-3, 1e-2):
        m = np.zeros_like(truth.state.modes)
        m[1] = s * np.sin(3 * t + rng.normal())
        m[2] = s * np.cos(2 * t)
        z = Iterate(SpectralState(truth.state.modes + m, data.grid), truth.a + s * rng.normal() * np.cos(t))
        assert norm_E(apply_Phi(z, data, nl) - base) <= 0.5 * norm_E(z - truth)


# ----------------------------------------------------------- iteration

def test_fixed_point_converges_geometrically(manufactured):
    problem, data, truth = manufactured
    res = fixed_point_solve(data, problem.nonlocal_params, tol=1e-10, max_iter=100)
    assert res.converged and res.iterations <= 20
    assert all(r < 1 for r in res.contraction_ratios)
    assert 0 < res.geometric_mean_ratio < 0.5
    assert res.history == sorted(res.history, reverse=True)
    assert len(res.norms) == res.iterations + 1
    assert error_report(res, truth)["a_sup"] <= 1e-6
    # u(1/2, t) = h(t) is only enforced through its second derivative
    assert res.residuals["overdetermination"] <= 1e-7
    assert res.residuals["integral"] <= 1e-14


def test_uniqueness_from_three_starts(manufactured):
    problem, data, truth = manufactured
    nl = problem.nonlocal_params
    rng = np.random.default_rng(2)
    ref = fixed_point_solve(data, nl, max_iter=100)
    noise = 0.05 * rng.normal(size=truth.state.modes.shape) / (1 + np.arange(2 * K + 1)[:, None]) ** 3
    starts = ["zero", truth, Iterate(SpectralState(truth.state.modes + noise, data.grid), truth.a + 0.1)]
    for start in starts:
        other = fixed_point_solve(data, nl, initial=start, max_iter=100)
        assert norm_E(other.solution - ref.solution) <= 1e-9


def test_zero_start_records_the_data_step():
    problem, truth = build(preset_spec("single-odd", 0.5))
    data = extract_data(problem, Discretization(K, 65, NX))
    nl = problem.nonlocal_params
    a = fixed_point_solve(data, nl, initial="zero")
    b = fixed_point_solve(data, nl, initial="data")
    assert a.iterations == b.iterations + 1
    assert np.array_equal(a.solution.a, b.solution.a)
    with pytest.raises(ValueError):
        initial_iterate(data, nl, kind="other")


def test_nonconvergence_carries_result(manufactured):
    problem, data, _ = manufactured
    with pytest.raises(NonConvergence) as info:
        fixed_point_solve(data, problem.nonlocal_params, max_iter=2)
    res = info.value.result
    assert not res.converged and res.iterations == 2 and len(res.history) == 2
    assert np.all(np.isfinite(res.solution.a))


def test_ball_escape_warns_once(manufactured):
    problem, data, _ = manufactured
    with pytest.warns(BallEscape) as record:
        fixed_point_solve(data, problem.nonlocal_params, radius=1e-3)
    assert sum(issubclass(w.category, BallEscape) for w in record) == 1


def test_solve_problem_defaults():
    problem, truth = build(preset_spec("odd-even", 0.5))
    res = solve_problem(problem, Discretization(4, 65, 257))
    assert res.converged
    assert error_report(res, truth.iterate(4, 65))["a_sup"] <= 1e-5


# -------------------------------------------------------------- forward

def test_forward_recovers_truth(manufactured):
    problem, data, truth = manufactured
    nl = problem.nonlocal_params
    u = forward_solve(data, truth.a, nl)
    assert np.max(np.abs(u.modes - truth.state.modes)) <= 1e-6
    v = forward_solve(data, truth.a, nl, method="direct")
    assert np.max(np.abs(u.modes - v.modes)) <= 1e-12
    with pytest.raises(ValueError):
        forward_solve(data, truth.a, nl, method="other")


def test_forward_with_zero_coefficient_needs_one_step():
    problem, truth = build(preset_spec("odd-even", 0.5))
    data = extract_data(problem, Discretization(4, 65, 257))
    u = forward_solve(data, 0.0, problem.nonlocal_params, max_iter=1)
    assert u.modes.shape == (9, 65)


def test_forward_nonconvergence():
    problem, _ = build(preset_spec("single-odd", 0.5))
    data = extract_data(problem, Discretization(4, 65, 257))
    with pytest.raises(NonConvergence):
        forward_solve(data, 50.0, problem.nonlocal_params, max_iter=3)


# ------------------------------------------------------------- residuals

def test_residual_report_on_solution():
    problem, truth = build(preset_spec("single-odd", 0.5))
    reports = []
    for nt in (129, 257):
        data = extract_data(problem, Discretization(K, nt, NX))
        res = fixed_point_solve(data, problem.nonlocal_params)
        reports.append(residual_report(res.solution, problem))
    coarse, fine = reports
    assert set(fine) == {"pde", "pde_interior", "integral", "overdetermination", "nonlocal_value",
                         "nonlocal_derivative", "boundary", "flux"}
    assert fine["pde"] <= 1e-4 and coarse["pde"] / fine["pde"] >= 3.5
    assert fine["integral"] <= 1e-12 and fine["overdetermination"] <= 1e-8
    assert coarse["overdetermination"] / fine["overdetermination"] >= 8
    assert fine["boundary"] <= 1e-12 and fine["flux"] <= 1e-9
    assert fine["nonlocal_value"] <= 1e-10 and fine["nonlocal_derivative"] <= 1e-3
