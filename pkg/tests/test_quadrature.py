import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypinverse.quadrature import UniformGrid, integrate, integrate_split, rule_weights, split_weights


def grid01(n):
    return UniformGrid(0.0, 1.0, n)


def test_examples():
    g = grid01(11)
    assert integrate(np.ones(11), g) == 1.0
    g = grid01(5)
    assert integrate(g.nodes**3, g) == pytest.approx(0.25, abs=1e-14)
    g = grid01(257)
    assert abs(integrate(np.sin(2 * np.pi * g.nodes), g)) <= 1e-12


def test_rejects_tiny_grids():
    with pytest.raises(ValueError):
        UniformGrid(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        UniformGrid(1.0, 1.0, 5)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6, 7, 8, 12, 13])
def test_exact_on_cubics(n):
    g = UniformGrid(-0.5, 1.5, n)
    x = g.nodes
    exact = (1.5**4 - 0.5**4) / 4 + (1.5**2 - 0.5**2) / 2
    expected = exact if n >= 3 else (x**3 + x)[[0, -1]].mean() * 2.0
    assert integrate(x**3 + x, g) == pytest.approx(expected, rel=1e-13)


def test_convergence_order():
    errs = []
    exact = (1 - np.cos(2 * np.pi * 0.8)) / (2 * np.pi)
    for n in (33, 65, 129):
        g = UniformGrid(0.0, 0.8, n)  # [0, 0.8] so the error is not zero by periodicity
        errs.append(abs(integrate(np.sin(2 * np.pi * g.nodes), g) - exact))
    assert errs[0] / errs[1] >= 14 and errs[1] / errs[2] >= 14


def test_split_examples():
    g = grid01(9)
    s = np.sin(g.nodes)
    assert integrate_split(s, g, 0) == (0.0, pytest.approx(integrate(s, g)))
    left, right = integrate_split(s, g, 8)
    assert left == pytest.approx(integrate(s, g)) and right == 0.0
    left, right = integrate_split(g.nodes, g, 4)
    assert left == pytest.approx(0.125, abs=1e-14) and right == pytest.approx(0.375, abs=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=4, max_value=40), st.data(),
       st.lists(st.floats(min_value=-3, max_value=3), min_size=4, max_size=4))
def test_split_additivity_for_cubics(n, data, c):
    g = grid01(n)
    j = data.draw(st.integers(min_value=0, max_value=n - 1))
    x = g.nodes
    s = c[0] + c[1] * x + c[2] * x**2 + c[3] * x**3
    left, right = integrate_split(s, g, j)
    tj = x[j]
    antider = lambda u: c[0] * u + c[1] * u**2 / 2 + c[2] * u**3 / 3 + c[3] * u**4 / 4
    assert left == pytest.approx(antider(tj), abs=1e-12)
    assert right == pytest.approx(antider(1.0) - antider(tj), abs=1e-12)
    assert left + right == pytest.approx(integrate(s, g), abs=1e-12)


def test_split_additivity_smooth_fine_grid():
    g = grid01(2049)
    s = np.exp(np.sin(3 * g.nodes))
    total = integrate(s, g)
    for j in (1, 2, 777, 1024, 2047):
        assert sum(integrate_split(s, g, j)) == pytest.approx(total, abs=1e-12)


def test_split_weights_rows_match():
    g = grid01(10)
    left, right = split_weights(g)
    s = np.cos(g.nodes)
    for j in range(10):
        assert (left[j] @ s, right[j] @ s) == pytest.approx(integrate_split(s, g, j))


def test_split_bad_index():
    with pytest.raises(ValueError):
        integrate_split(np.zeros(5), grid01(5), 5)


def test_rule_weights_sum_to_length():
    for m in range(2, 20):
        assert rule_weights(m, 0.1).sum() == pytest.approx(0.1 * (m - 1))
