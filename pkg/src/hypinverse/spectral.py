"""Mode-wise solution of the semi-discrete problem.

Expanding ``u(x, t) = sum_k u_k(t) X_k(x)`` turns the equation into the
mode ODEs::

    u_0''      = F_0
    u_{2k-1}'' + lambda_k^2 u_{2k-1} = F_{2k-1}
    u_{2k}''   + lambda_k^2 u_{2k}   = F_{2k} - 2 p lambda_k u_{2k-1}

with ``u_k(0) + d1 u_k(T) = phi_k``, ``u_k'(0) + d2 u_k'(T) = psi_k`` and
``F_k = a(t) u_k(t) + f_k(t)``.  Each mode is a free part plus a kernel
integral.  Kernel integrals are applied as dense matrices on the uniform
time grid (one per mode pair), built from the split-quadrature weights.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .basis import BasisParams, basis_matrix, coefficients, lambda_k
from .errors import GridMismatch, HNearZero
from .kernels import (
    G0_parts, Gk_parts, NonlocalParams, homogeneous_mode, homogeneous_u0,
    phi_bracket, psi_bracket,
)
from .problem import Discretization, ProblemData
from .quadrature import UniformGrid, rule_weights, split_weights

CouplingMode = Literal["ode-consistent", "as-printed"]
COUPLING_MODES = ("ode-consistent", "as-printed")
H_EPS = 1e-8

__all__ = [
    "SpectralState", "DataCoefficients", "time_grid", "space_grid", "extract_data",
    "kernel_matrix", "apply_kernel", "solve_u0", "solve_u_odd", "solve_u_even",
    "solve_modes", "assemble_F", "synthesize_field", "ode_residual", "COUPLING_MODES",
]


def time_grid(T: float, nt: int) -> UniformGrid:
    return UniformGrid(0.0, float(T), int(nt))


def space_grid(nx: int) -> UniformGrid:
    return UniformGrid(0.0, 1.0, int(nx))


@dataclass(frozen=True)
class SpectralState:
    """Mode amplitudes ``u_k(t_j)``; ``modes`` has shape ``(2K + 1, nt)``."""

    modes: np.ndarray
    grid: UniformGrid

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=float)
        if modes.ndim != 2 or modes.shape[0] % 2 == 0 or modes.shape[1] != self.grid.n:
            raise GridMismatch(f"modes of shape {modes.shape} do not fit 2K+1 x {self.grid.n}")
        object.__setattr__(self, "modes", modes)

    @property
    def K(self) -> int:
        return (self.modes.shape[0] - 1) // 2

    @classmethod
    def zeros(cls, K: int, grid: UniformGrid) -> "SpectralState":
        return cls(np.zeros((2 * K + 1, grid.n)), grid)


@dataclass(frozen=True)
class DataCoefficients:
    """Data projected on the dual family and sampled on the time grid."""

    phi: np.ndarray
    psi: np.ndarray
    f: np.ndarray
    h: np.ndarray
    h2: np.ndarray
    f_mid: np.ndarray
    grid: UniformGrid
    basis: BasisParams

    @property
    def K(self) -> int:
        return (len(self.phi) - 1) // 2


def extract_data(problem: ProblemData, disc: Discretization, check_h: bool = True) -> DataCoefficients:
    """Project ``phi``, ``psi`` and ``f(., t_j)`` on the dual family.

    ``check_h=False`` skips the nonvanishing test on the observation, which
    the forward problem does not use.
    """
    K = disc.K
    params = problem.basis
    tg = time_grid(problem.T, disc.nt)
    xg = space_grid(disc.nx)
    x, t = xg.nodes, tg.nodes

    h = np.broadcast_to(np.asarray(problem.h(t), dtype=float), t.shape).copy()
    if check_h and np.min(np.abs(h)) <= H_EPS:
        j = int(np.argmin(np.abs(h)))
        raise HNearZero(f"|h(t)| = {abs(h[j]):.3g} at t = {t[j]:.6g}; h must not vanish on [0, T]")
    h2 = np.broadcast_to(np.asarray(problem.h.derivative("t", 2)(t), dtype=float), t.shape).copy()

    phi_s = np.broadcast_to(problem.phi(x), x.shape)
    psi_s = np.broadcast_to(problem.psi(x), x.shape)
    f_s = np.broadcast_to(problem.f(x[:, None], t[None, :]), (x.size, t.size))
    f_mid = np.broadcast_to(problem.f(np.full_like(t, 0.5), t), t.shape).copy()

    return DataCoefficients(
        phi=coefficients(phi_s, K, params),
        psi=coefficients(psi_s, K, params),
        f=coefficients(f_s.T, K, params).T.copy(),
        h=h, h2=h2, f_mid=f_mid, grid=tg, basis=params,
    )


# ---------------------------------------------------------------- kernels

@lru_cache(maxsize=96)
def _kernel_matrix(k, d1, d2, T, n, strict=True):
    nl = NonlocalParams(d1, d2, T, strict)
    grid = time_grid(T, n)
    t = grid.nodes
    left, _ = split_weights(grid)
    w = rule_weights(n, grid.step)
    tj, ti = t[:, None], t[None, :]
    if k == 0:
        smooth, causal = G0_parts(tj, ti, nl)
    else:
        smooth, causal = Gk_parts(k, tj, ti, nl)
    M = left * causal + smooth * w[None, :]
    M.setflags(write=False)
    return M


def kernel_matrix(k: int, nl: NonlocalParams, grid: UniformGrid) -> np.ndarray:
    """Matrix ``M`` with ``(M @ F)[j] ~ int_0^T G_k(t_j, tau) F(tau) dtau``.

    The smooth part of the kernel is integrated over the whole grid; the
    causal part over ``[0, t_j]`` with the split weights, reading its smooth
    continuation where a one-interval piece needs extra nodes.
    """
    if grid.a != 0.0 or abs(grid.b - nl.T) > 1e-14 * max(1.0, nl.T):
        raise GridMismatch("time grid must cover [0, T]")
    return _kernel_matrix(int(k), nl.delta1, nl.delta2, nl.T, grid.n, nl.strict)


def apply_kernel(k, F, nl, grid):
    return kernel_matrix(k, nl, grid) @ np.asarray(F, dtype=float)


# ------------------------------------------------------------- mode solves

def solve_u0(phi0, psi0, F0, nl: NonlocalParams, grid: UniformGrid) -> np.ndarray:
    return homogeneous_u0(phi0, psi0, grid.nodes, nl) + apply_kernel(0, F0, nl, grid)


def solve_u_odd(k, phi_odd, psi_odd, F_odd, nl: NonlocalParams, grid: UniformGrid) -> np.ndarray:
    return homogeneous_mode(k, phi_odd, psi_odd, grid.nodes, nl) + apply_kernel(k, F_odd, nl, grid)


def solve_u_even(k, data: DataCoefficients, F_even, F_odd, nl: NonlocalParams,
                 mode: CouplingMode = "ode-consistent", u_odd=None) -> np.ndarray:
    """Even mode ``2k`` driven by ``F_even`` and coupled to mode ``2k - 1``.

    ``ode-consistent`` applies ``-2 p lambda_k`` times the kernel to the odd
    mode, which is what the mode ODE requires.  ``as-printed`` adds the two
    closed-form brackets and the double kernel integral of ``F_odd``
    unscaled, exactly as the reference formula reads.
    """
    grid = data.grid
    t = grid.nodes
    lam = lambda_k(k)
    M = kernel_matrix(k, nl, grid)
    phi_e, psi_e = data.phi[2 * k], data.psi[2 * k]
    phi_o, psi_o = data.phi[2 * k - 1], data.psi[2 * k - 1]
    out = homogeneous_mode(k, phi_e, psi_e, t, nl) + M @ F_even
    if mode == "ode-consistent":
        if u_odd is None:
            u_odd = solve_u_odd(k, phi_o, psi_o, F_odd, nl, grid)
        return out - 2.0 * data.basis.p * lam * (M @ u_odd)
    if mode == "as-printed":
        return (out - phi_o * phi_bracket(k, t, nl) + psi_o / lam * psi_bracket(k, t, nl)
                + M @ (M @ F_odd))
    raise ValueError(f"unknown coupling mode {mode!r}")


def solve_modes(F, data: DataCoefficients, nl: NonlocalParams,
                mode: CouplingMode = "ode-consistent", threads: int = 1) -> np.ndarray:
    """All modes ``0..2K`` for given right-hand sides ``F`` (shape ``(2K+1, nt)``)."""
    F = np.asarray(F, dtype=float)
    K, grid = data.K, data.grid
    out = np.empty_like(F)
    out[0] = solve_u0(data.phi[0], data.psi[0], F[0], nl, grid)

    def pair(k):
        u_odd = solve_u_odd(k, data.phi[2 * k - 1], data.psi[2 * k - 1], F[2 * k - 1], nl, grid)
        u_even = solve_u_even(k, data, F[2 * k], F[2 * k - 1], nl, mode, u_odd=u_odd)
        return k, u_odd, u_even

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(pair, range(1, K + 1)))
    else:
        results = [pair(k) for k in range(1, K + 1)]
    for k, u_odd, u_even in results:
        out[2 * k - 1] = u_odd
        out[2 * k] = u_even
    return out


def assemble_F(state: SpectralState, a, data: DataCoefficients) -> np.ndarray:
    """``F_k(t_j) = a(t_j) u_k(t_j) + f_k(t_j)``."""
    a = np.asarray(a, dtype=float)
    if a.shape != (state.grid.n,) or data.f.shape != state.modes.shape:
        raise GridMismatch("a, state and data must share the time grid and truncation")
    return a[None, :] * state.modes + data.f


def synthesize_field(state: SpectralState, params: BasisParams, x, derivative: int = 0) -> np.ndarray:
    """``u(x_i, t_j)`` (or its ``x``-derivative) as an array of shape ``(len(x), nt)``."""
    X = basis_matrix(state.K, params, np.atleast_1d(x), derivative)
    return X.T @ state.modes


# --------------------------------------------------------------- residuals

def _d2(u, h):
    return (u[..., 2:] - 2 * u[..., 1:-1] + u[..., :-2]) / h**2


def _ends_derivative(u, h):
    d0 = (-3 * u[..., 0] + 4 * u[..., 1] - u[..., 2]) / (2 * h)
    dT = (3 * u[..., -1] - 4 * u[..., -2] + u[..., -3]) / (2 * h)
    return d0, dT


def ode_residual(state: SpectralState, F, nl: NonlocalParams, params: BasisParams,
                 data: DataCoefficients | None = None) -> dict:
    """Per-mode residuals of the mode ODEs and nonlocal time conditions.

    ``ode[k] = max_j |D2 u_k + lambda^2 u_k - RHS_k|`` over interior nodes
    with the 3-point second difference; ``RHS`` carries the odd-to-even
    coupling.  With ``data`` the two nonlocal conditions are checked too,
    using one-sided second-order end derivatives.
    """
    if state.grid.n < 5:
        raise ValueError("need at least 5 time nodes")
    u = state.modes
    F = np.asarray(F, dtype=float)
    h = state.grid.step
    K = state.K
    lam2 = np.zeros(2 * K + 1)
    rhs = F.copy()
    for k in range(1, K + 1):
        lam = lambda_k(k)
        lam2[2 * k - 1] = lam2[2 * k] = lam**2
        rhs[2 * k] -= 2 * params.p * lam * u[2 * k - 1]
    res = _d2(u, h) + lam2[:, None] * u[:, 1:-1] - rhs[:, 1:-1]
    out = {"ode": np.max(np.abs(res), axis=1)}
    if data is not None:
        d0, dT = _ends_derivative(u, h)
        out["nonlocal_value"] = np.abs(u[:, 0] + nl.delta1 * u[:, -1] - data.phi)
        out["nonlocal_derivative"] = np.abs(d0 + nl.delta2 * dT - data.psi)
    return out
