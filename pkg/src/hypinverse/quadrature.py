"""Composite quadrature on uniform grids.

Odd point counts use composite Simpson; even counts use Simpson on all
but the last three intervals plus one Simpson 3/8 panel.  Both are exact
for cubics, so the order is four either way.

Integrals split at an interior node are what the kernel integrals need:
their integrands are smooth on each side of ``tau = t`` but not across
it.  A one-interval piece cannot carry a fourth-order rule on its own,
so it borrows the next nodes of the (smoothly extended) integrand and
integrates the cubic through four points.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["UniformGrid", "rule_weights", "integrate", "integrate_split", "split_weights"]


@dataclass(frozen=True)
class UniformGrid:
    a: float
    b: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"a uniform grid needs at least 2 points, got {self.n}")
        if not self.b > self.a:
            raise ValueError(f"empty interval [{self.a}, {self.b}]")

    @property
    def step(self) -> float:
        return (self.b - self.a) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.step * np.arange(self.n)


def _patterns(m: int):
    """Integer Simpson and 3/8 patterns; weights are ``h/3 * S + 3h/8 * P``."""
    simpson = np.zeros(m)
    panel = np.zeros(m)
    n_simpson = m if m % 2 == 1 else m - 3
    if n_simpson >= 3:
        simpson[:n_simpson:2] = 2.0
        simpson[1:n_simpson:2] = 4.0
        simpson[0] = simpson[n_simpson - 1] = 1.0
    if m % 2 == 0:
        panel[m - 4:] = [1.0, 3.0, 3.0, 1.0]
    return simpson, panel


def rule_weights(m: int, h: float) -> np.ndarray:
    """Weights of the composite rule on ``m`` equally spaced points."""
    if m < 1:
        raise ValueError("need at least one point")
    if m == 1:
        return np.zeros(1)
    if m == 2:
        return np.full(2, h / 2)
    simpson, panel = _patterns(m)
    return simpson * (h / 3) + panel * (3 * h / 8)


def integrate(samples, grid: UniformGrid) -> float:
    samples = np.asarray(samples, dtype=float)
    if samples.shape[-1] != grid.n:
        raise ValueError(f"expected {grid.n} samples, got {samples.shape[-1]}")
    h = grid.step
    if grid.n == 2:
        return (samples[..., 0] + samples[..., 1]) * h / 2
    simpson, panel = _patterns(grid.n)
    # sum the integer-weighted samples first; scaling once keeps e.g. int 1 = b - a exact
    out = (samples @ simpson) * h / 3
    if grid.n % 2 == 0:
        out = out + (samples @ panel) * 3 * h / 8
    return out


# cubic through nodes 0..3 integrated over [t0, t1]
_FIRST_INTERVAL = np.array([9.0, 19.0, -5.0, 1.0]) / 24
_FIRST_INTERVAL_QUAD = np.array([5.0, 8.0, -1.0]) / 12


def _left_weights(j, n, h):
    """Weights over all n nodes approximating the integral over [t0, tj]."""
    w = np.zeros(n)
    if j == 0:
        return w
    if j == 1 and n >= 4:
        w[:4] = h * _FIRST_INTERVAL
    elif j == 1 and n == 3:
        w[:3] = h * _FIRST_INTERVAL_QUAD
    else:
        w[: j + 1] = rule_weights(j + 1, h)
    return w


def _right_weights(j, n, h):
    return _left_weights(n - 1 - j, n, h)[::-1]


def integrate_split(samples, grid: UniformGrid, split_index: int) -> tuple[float, float]:
    """Integrals over ``[a, t_s]`` and ``[t_s, b]`` with ``s = split_index``.

    A piece spanning one interval reads up to three extra samples across
    the split, so the samples there must come from a smooth extension of
    that piece's integrand.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape[-1] != grid.n:
        raise ValueError(f"expected {grid.n} samples, got {samples.shape[-1]}")
    if not 0 <= split_index <= grid.n - 1:
        raise ValueError(f"split index {split_index} outside 0..{grid.n - 1}")
    h = grid.step
    left = samples @ _left_weights(split_index, grid.n, h)
    right = samples @ _right_weights(split_index, grid.n, h)
    return float(left), float(right)


@lru_cache(maxsize=16)
def _split_weights(n, h):
    left = np.array([_left_weights(j, n, h) for j in range(n)])
    right = np.array([_right_weights(j, n, h) for j in range(n)])
    left.setflags(write=False)
    right.setflags(write=False)
    return left, right


def split_weights(grid: UniformGrid) -> tuple[np.ndarray, np.ndarray]:
    """Row ``j`` of each matrix holds the weights ``integrate_split`` uses at split ``j``."""
    return _split_weights(grid.n, grid.step)
