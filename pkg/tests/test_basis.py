import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypinverse import expr as E
from hypinverse.basis import (
    ModeIndex, basis_expr, biorthogonality_defect, coefficients, eval_X, eval_X_derivs, eval_Y,
    lambda_k, lambda_sq_sum_closed_form, make_basis_params, mode_index, synthesize,
)
from hypinverse.errors import DegenerateBeta, QuadratureResolution
from hypinverse.quadrature import UniformGrid, integrate

BETAS = [-0.5, 0.0, 0.5, 3.0]
ODD1, EVEN1, ZERO = ModeIndex(1, "odd"), ModeIndex(1, "even"), ModeIndex(0, "zero")


def test_lambda():
    assert lambda_k(1) == pytest.approx(6.283185307)
    assert lambda_k(2) == 4 * math.pi
    assert lambda_k(10) == 20 * math.pi
    with pytest.raises(ValueError):
        lambda_k(0)


def test_params_examples():
    p0 = make_basis_params(0.0)
    assert (p0.p, p0.q) == (1.0, 0.0)
    p3 = make_basis_params(3.0)
    assert (p3.p, p3.q) == (-0.5, 0.75)
    for beta in (1.0, -1.0, 1.0 + 1e-13):
        with pytest.raises(DegenerateBeta):
            make_basis_params(beta)


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=-50, max_value=50).filter(lambda b: abs(b - 1) > 1e-3 and abs(b + 1) > 1e-3))
def test_params_relations(beta):
    bp = make_basis_params(beta)
    assert abs((1 + beta) * bp.p - (1 - beta)) <= 1e-14 * max(1, abs(beta))
    assert abs((1 + beta) * bp.q - beta) <= 1e-14 * max(1, abs(beta))
    assert abs(bp.p / 2 + bp.q - 0.5) <= 1e-14 * max(1, abs(bp.p))


def test_mode_index():
    assert mode_index(0) == ZERO
    assert mode_index(1) == ODD1 and mode_index(2) == EVEN1 and mode_index(5) == ModeIndex(3, "odd")
    assert ModeIndex(3, "even").flat == 6
    with pytest.raises(ValueError):
        ModeIndex(0, "odd")


def test_eval_X_examples():
    assert eval_X(ODD1, make_basis_params(0.0), 0.5) == pytest.approx(-0.5)
    for beta in BETAS:
        assert abs(eval_X(EVEN1, make_basis_params(beta), 0.5)) < 1e-15
    assert eval_X(ZERO, make_basis_params(3.0), 0.0) == 0.75


def test_eval_Y_printed_examples():
    bp = make_basis_params(3.0)
    assert eval_Y(ZERO, bp, 0.3, variant="printed") == 2.0
    assert eval_Y(ODD1, bp, 0.25, variant="printed") == pytest.approx(4.0)
    assert eval_Y(EVEN1, bp, 0.0, variant="printed") == pytest.approx(3 / 16)


def test_eval_Y_biorthogonal_values():
    bp = make_basis_params(3.0)
    assert eval_Y(ZERO, bp, 0.3) == 2.0
    assert eval_Y(ODD1, bp, 0.0) == 4.0
    assert eval_Y(EVEN1, bp, 0.25) == pytest.approx(4 * (1 - 0.75 + 0.5 * 0.25))


def test_printed_dual_is_not_biorthogonal():
    for beta in (-0.5, 0.5, 3.0):
        assert biorthogonality_defect(3, make_basis_params(beta), variant="printed") > 0.5


def test_derivative_examples():
    lam = lambda_k(1)
    assert eval_X_derivs(EVEN1, make_basis_params(3.0), 0.0) == pytest.approx((0.0, lam, 0.0))
    x = np.array([0.2, 0.7])
    X, dX, d2X = eval_X_derivs(ZERO, make_basis_params(0.0), x)
    assert np.allclose(X, x) and np.allclose(dX, 1) and np.allclose(d2X, 0)
    assert eval_X_derivs(ODD1, make_basis_params(0.0), 0.0) == pytest.approx((0.0, 1.0, 0.0))


@pytest.mark.parametrize("beta", BETAS)
@pytest.mark.parametrize("j", range(7))
def test_derivatives_against_differences(beta, j):
    bp = make_basis_params(beta)
    x = np.linspace(0.05, 0.95, 19)
    h = 1e-4
    X, dX, d2X = eval_X_derivs(j, bp, x)
    f = lambda y: eval_X(j, bp, y)
    # O(h^2) differences: compare relative to each derivative's size
    scale1, scale2 = 1 + np.max(np.abs(dX)), 1 + np.max(np.abs(d2X))
    assert np.max(np.abs((f(x + h) - f(x - h)) / (2 * h) - dX)) <= 1e-6 * scale1
    assert np.max(np.abs((f(x + h) - 2 * X + f(x - h)) / h**2 - d2X)) <= 1e-6 * scale2


@pytest.mark.parametrize("beta", BETAS)
def test_boundary_and_mean_structure(beta):
    bp = make_basis_params(beta)
    g = UniformGrid(0.0, 1.0, 2049)
    for j in range(21):
        X0, dX0, _ = eval_X_derivs(j, bp, 0.0)
        X1, dX1, _ = eval_X_derivs(j, bp, 1.0)
        assert abs(X0 - beta * X1) <= 1e-12
        assert abs(dX0 - dX1) <= 1e-12 * lambda_k(10)
        if j >= 1:
            assert abs(integrate(eval_X(j, bp, g.nodes), g)) <= 1e-10


@pytest.mark.parametrize("beta", BETAS)
def test_biorthogonality(beta):
    bp = make_basis_params(beta)
    assert biorthogonality_defect(5, bp, 2049) <= 1e-10
    assert biorthogonality_defect(20, bp, 2049) <= 1e-8


def test_zero_mode_only():
    for beta in BETAS:
        bp = make_basis_params(beta)
        g = UniformGrid(0.0, 1.0, 3)
        assert abs(integrate(2 * eval_X(0, bp, g.nodes), g) - 1) <= 1e-14


def test_coefficient_examples():
    bp = make_basis_params(3.0)
    c = coefficients(lambda x: eval_X(0, bp, x), 4, bp)
    assert c[0] == pytest.approx(1.0, abs=1e-14) and np.max(np.abs(c[1:])) < 1e-12
    c = coefficients(lambda x: np.sin(2 * np.pi * x), 4, bp)
    assert c[2] == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(np.delete(c, 2))) < 1e-10
    assert np.all(coefficients(lambda x: np.zeros_like(x), 4, bp) == 0)


def test_coefficients_of_samples_keep_leading_axes():
    bp = make_basis_params(0.5)
    g = UniformGrid(0.0, 1.0, 513)
    samples = np.array([eval_X(1, bp, g.nodes), 2 * eval_X(4, bp, g.nodes)])
    c = coefficients(samples, 3, bp)
    assert c.shape == (2, 7)
    assert c[0, 1] == pytest.approx(1.0) and c[1, 4] == pytest.approx(2.0)


def test_coarse_quadrature_warns():
    bp = make_basis_params(0.5)
    with pytest.warns(QuadratureResolution):
        coefficients(np.zeros(33), 8, bp)


def test_synthesis_examples():
    bp = make_basis_params(3.0)
    x = np.linspace(0, 1, 101)
    e0 = np.zeros(9)
    e0[0] = 1
    assert np.allclose(synthesize(e0, bp, x), eval_X(0, bp, x))
    c = coefficients(lambda y: eval_X(2, bp, y), 4, bp)
    assert np.max(np.abs(synthesize(c, bp, x) - np.sin(2 * np.pi * x))) <= 1e-8
    assert np.all(synthesize(np.zeros(9), bp, x) == 0)
    assert np.ndim(synthesize(e0, bp, 0.3)) == 0


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(BETAS), st.lists(st.floats(min_value=-2, max_value=2), min_size=11, max_size=11))
def test_reconstruction_in_span(beta, coeffs):
    bp = make_basis_params(beta)
    coeffs = np.array(coeffs)
    x = np.linspace(0, 1, 2049)
    v = synthesize(coeffs, bp, x)
    back = coefficients(v, 5, bp)
    assert np.max(np.abs(synthesize(back, bp, x) - v)) <= 1e-7


def test_basis_expr_matches_numeric():
    bp = make_basis_params(-0.5)
    x = np.linspace(0, 1, 11)
    for j in range(5):
        assert np.allclose(E.evaluate(basis_expr(j, bp), x=x), eval_X(j, bp, x), atol=1e-14)


def test_series_constant_by_partial_sums():
    k = np.arange(1, 1001)
    partial = np.sum(1.0 / (2 * np.pi * k) ** 2)
    tail = 1.0 / (4 * np.pi**2 * 1000)  # integral bound of the remaining terms
    assert abs(math.sqrt(partial + tail) - lambda_sq_sum_closed_form()) <= 1e-6
    assert lambda_sq_sum_closed_form() == pytest.approx(math.sqrt(math.pi**2 / 6 / (4 * math.pi**2)))
