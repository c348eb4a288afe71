"""The non-orthogonal spatial basis and its biorthogonal family.

For ``beta != +-1`` put ``p = (1 - beta)/(1 + beta)``, ``q = beta/(1 + beta)``
and ``lambda_k = 2 k pi``.  The basis is::

    X_0 = p x + q,   X_{2k-1} = (p x + q) cos(lambda_k x),   X_{2k} = sin(lambda_k x)

Every ``X_j`` satisfies ``X(0) = beta X(1)`` and ``X'(0) = X'(1)``.  The
dual family used for coefficient extraction is::

    Y_0 = 2,   Y_{2k-1} = 4 cos(lambda_k x),   Y_{2k} = 4 (1 - q - p x) sin(lambda_k x)

which satisfies ``int_0^1 X_j Y_k dx = delta_jk``.  The ``"printed"``
variant of :func:`eval_Y` (``4 sin`` and ``q (1 - q - p x) cos``) is kept
for comparison only; it is not biorthogonal to ``X`` for any ``beta``.

Flat mode indices run ``0..2K``; :func:`mode_index` maps them to
:class:`ModeIndex`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DegenerateBeta, QuadratureResolution
from .quadrature import UniformGrid, rule_weights

Parity = Literal["zero", "odd", "even"]

__all__ = [
    "BasisParams", "ModeIndex", "lambda_k", "make_basis_params", "mode_index",
    "eval_X", "eval_Y", "eval_X_derivs", "basis_matrix", "dual_matrix",
    "coefficients", "synthesize", "biorthogonality_defect", "default_quad_points",
    "basis_expr",
]


@dataclass(frozen=True)
class BasisParams:
    beta: float
    p: float
    q: float


@dataclass(frozen=True)
class ModeIndex:
    k: int
    parity: Parity

    def __post_init__(self):
        if self.parity not in ("zero", "odd", "even"):
            raise ValueError(f"bad parity {self.parity!r}")
        if self.parity == "zero" and self.k != 0:
            raise ValueError("the zero mode has k = 0")
        if self.parity != "zero" and self.k < 1:
            raise ValueError("odd and even modes need k >= 1")

    @property
    def flat(self) -> int:
        return {"zero": 0, "odd": 2 * self.k - 1, "even": 2 * self.k}[self.parity]


def mode_index(j: int) -> ModeIndex:
    if j < 0:
        raise ValueError("mode index must be nonnegative")
    if j == 0:
        return ModeIndex(0, "zero")
    return ModeIndex((j + 1) // 2, "odd" if j % 2 else "even")


def lambda_k(k) -> float:
    """Angular frequency ``2 k pi`` of mode pair ``k >= 1``."""
    if np.any(np.asarray(k) < 1):
        raise ValueError("lambda_k is defined for k >= 1 only")
    return 2.0 * np.pi * k


def make_basis_params(beta: float) -> BasisParams:
    beta = float(beta)
    if abs(beta - 1.0) < 1e-12 or abs(beta + 1.0) < 1e-12:
        raise DegenerateBeta(f"beta = {beta} is not allowed (beta must differ from +1 and -1)")
    return BasisParams(beta, (1.0 - beta) / (1.0 + beta), beta / (1.0 + beta))


def _idx(idx) -> ModeIndex:
    return mode_index(idx) if isinstance(idx, (int, np.integer)) else idx


def eval_X(idx, params: BasisParams, x):
    idx = _idx(idx)
    x = np.asarray(x, dtype=float)
    w = params.p * x + params.q
    if idx.parity == "zero":
        return w
    lam = lambda_k(idx.k)
    if idx.parity == "odd":
        return w * np.cos(lam * x)
    return np.sin(lam * x)


def eval_Y(idx, params: BasisParams, x, variant: Literal["biorthogonal", "printed"] = "biorthogonal"):
    idx = _idx(idx)
    x = np.asarray(x, dtype=float)
    if idx.parity == "zero":
        return np.full_like(x, 2.0)
    lam = lambda_k(idx.k)
    if variant == "printed":
        if idx.parity == "odd":
            return 4.0 * np.sin(lam * x)
        return params.q * (1.0 - params.q - params.p * x) * np.cos(lam * x)
    if idx.parity == "odd":
        return 4.0 * np.cos(lam * x)
    return 4.0 * (1.0 - params.q - params.p * x) * np.sin(lam * x)


def eval_X_derivs(idx, params: BasisParams, x):
    """``(X, X', X'')`` in closed form."""
    idx = _idx(idx)
    x = np.asarray(x, dtype=float)
    p, q = params.p, params.q
    w = p * x + q
    if idx.parity == "zero":
        return w, np.full_like(x, p), np.zeros_like(x)
    lam = lambda_k(idx.k)
    c, s = np.cos(lam * x), np.sin(lam * x)
    if idx.parity == "odd":
        return w * c, p * c - lam * w * s, -2 * p * lam * s - lam**2 * w * c
    return s, lam * c, -(lam**2) * s


def basis_matrix(K: int, params: BasisParams, x, derivative: int = 0) -> np.ndarray:
    """Array of shape ``(2K + 1, len(x))`` holding ``X_j`` (or a derivative)."""
    x = np.asarray(x, dtype=float)
    return np.array([eval_X_derivs(j, params, x)[derivative] for j in range(2 * K + 1)])


def dual_matrix(K: int, params: BasisParams, x, variant="biorthogonal") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.array([eval_Y(j, params, x, variant) for j in range(2 * K + 1)])


def default_quad_points(K: int) -> int:
    n = max(513, 16 * K + 1)
    return n if n % 2 else n + 1


def coefficients(v, K: int, params: BasisParams, quad_points: int | None = None) -> np.ndarray:
    """Coefficients ``v_k = int_0^1 v Y_k dx`` for ``k = 0..2K``.

    ``v`` is a callable of ``x`` or an array of samples on the uniform grid
    of ``[0, 1]`` (trailing axis; leading axes are kept, e.g. time).
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if callable(v):
        n = quad_points or default_quad_points(K)
        grid = UniformGrid(0.0, 1.0, n)
        samples = np.asarray(v(grid.nodes), dtype=float)
        samples = np.broadcast_to(samples, (n,)) if samples.ndim == 0 else samples
    else:
        samples = np.asarray(v, dtype=float)
        n = samples.shape[-1]
        if quad_points is not None and quad_points != n:
            raise ValueError(f"{n} samples given but quad_points={quad_points}")
        grid = UniformGrid(0.0, 1.0, n)
    if n < 8 * K:
        warnings.warn(f"{n} quadrature points for K={K}; at least {8 * K} advised",
                      QuadratureResolution, stacklevel=2)
    weighted_dual = dual_matrix(K, params, grid.nodes) * rule_weights(n, grid.step)
    return samples @ weighted_dual.T


def synthesize(coeffs, params: BasisParams, x):
    """Truncated series ``sum_k u_k X_k(x)``.

    ``coeffs`` has the mode axis first; remaining axes (e.g. time) are
    kept, and ``x`` becomes the last axis when it is an array.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape[0] % 2 == 0:
        raise ValueError("expected 2K + 1 coefficients")
    K = (coeffs.shape[0] - 1) // 2
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    X = basis_matrix(K, params, x_arr)
    out = np.tensordot(coeffs, X, axes=(0, 0))
    return out[..., 0] if np.ndim(x) == 0 else out


def biorthogonality_defect(K: int, params: BasisParams, quad_points: int | None = None,
                           variant="biorthogonal") -> float:
    """``max_{j,k <= 2K} |int X_j Y_k - delta_jk|`` under composite Simpson."""
    n = quad_points or default_quad_points(K)
    grid = UniformGrid(0.0, 1.0, n)
    w = rule_weights(n, grid.step)
    X = basis_matrix(K, params, grid.nodes)
    Y = dual_matrix(K, params, grid.nodes, variant)
    gram = (X * w) @ Y.T
    return float(np.max(np.abs(gram - np.eye(2 * K + 1))))


def basis_expr(idx, params: BasisParams):
    """``X_j`` as an expression tree in ``x`` (for symbolic data)."""
    from . import expr as E

    idx = _idx(idx)
    x = E.Var("x")
    w = E._add(E._mul(E.Num(params.p), x), E.Num(params.q))
    if idx.parity == "zero":
        return w
    arg = E.BinOp("*", E.Num(2.0 * idx.k), E.BinOp("*", E.Const("pi"), x))
    if idx.parity == "odd":
        return E.BinOp("*", w, E.Call("cos", arg))
    return E.Call("sin", arg)


def lambda_sq_sum_closed_form() -> float:
    """``(sum_k lambda_k^-2)^(1/2) = 1/(2 sqrt 6)``."""
    return 1.0 / (2.0 * math.sqrt(6.0))

