"""The operator ``Phi = (Phi_1, Phi_2)``, its Picard iteration and the
forward solver.

``Phi_1(u, a)`` rebuilds every mode from ``F = a u + f``; ``Phi_2(u, a)``
recovers the coefficient from the observation.  Since
``X_{2k-1}''(1/2) = -lambda_k^2 (-1)^k / 2`` and the other basis functions
have ``X''(1/2) = 0``, the identity ``h'' - u_xx(1/2, t) = a h + f(1/2, t)``
gives::

    a(t) = [h''(t) - f(1/2, t) + 1/2 sum_k (-1)^k lambda_k^2 u_{2k-1}(t)] / h(t)

with ``u_{2k-1}`` the odd modes produced by ``Phi_1``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisParams, basis_matrix, lambda_k
from .errors import BallEscape, GridMismatch, NonConvergence
from .kernels import NonlocalParams
from .problem import Discretization, ProblemData
from .quadrature import integrate
from .spectral import (
    DataCoefficients, SpectralState, extract_data, kernel_matrix, ode_residual, solve_modes,
    solve_u_even, space_grid,
)

__all__ = [
    "Iterate", "SolveResult", "apply_Phi", "recover_a", "initial_iterate", "fixed_point_solve",
    "forward_solve", "residual_report", "norm_B", "norm_E", "solve_problem",
]


@dataclass(frozen=True)
class Iterate:
    """The pair ``z = (u, a)`` on the solver time grid."""

    state: SpectralState
    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.shape != (self.state.grid.n,):
            raise GridMismatch(f"a has shape {a.shape}, time grid has {self.state.grid.n} nodes")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(self.state.modes))):
            raise ValueError("iterate has non-finite entries")
        object.__setattr__(self, "a", a)

    @property
    def grid(self):
        return self.state.grid

    @classmethod
    def zeros(cls, K, grid) -> "Iterate":
        return cls(SpectralState.zeros(K, grid), np.zeros(grid.n))

    def __sub__(self, other: "Iterate") -> "Iterate":
        return Iterate(SpectralState(self.state.modes - other.state.modes, self.grid), self.a - other.a)


def norm_B(state: SpectralState) -> float:
    """Truncated ``J(u)``: sup of ``u_0`` plus lambda^3-weighted l2 sums of mode sups."""
    sup = np.max(np.abs(state.modes), axis=1)
    K = state.K
    if K == 0:
        return float(sup[0])
    lam3 = lambda_k(np.arange(1, K + 1)) ** 3
    odd, even = sup[1::2], sup[2::2]
    return float(sup[0] + np.sqrt(np.sum((lam3 * odd) ** 2)) + np.sqrt(np.sum((lam3 * even) ** 2)))


def norm_E(z: Iterate) -> float:
    return norm_B(z.state) + float(np.max(np.abs(z.a)))


@dataclass
class SolveResult:
    solution: Iterate
    iterations: int
    history: list
    converged: bool
    contraction_ratios: list
    residuals: dict | None = None
    norms: list = field(default_factory=list)
    tail_ratio: float = 0.0

    @property
    def geometric_mean_ratio(self) -> float | None:
        r = np.asarray(self.contraction_ratios, dtype=float)
        if r.size == 0:
            return None
        if np.any(r == 0):
            return 0.0
        return float(np.exp(np.mean(np.log(r))))


def _odd_weights(K):
    k = np.arange(1, K + 1)
    return 0.5 * (-1.0) ** k * lambda_k(k) ** 2


def recover_a(modes, data: DataCoefficients):
    """``Phi_2``: the coefficient from odd modes, with a tail diagnostic.

    Returns ``(a, tail)`` where ``tail = max_t |last term| / |partial sum|``
    (``0`` where the sum vanishes).
    """
    K = data.K
    terms = _odd_weights(K)[:, None] * modes[1::2]
    partial = terms.sum(axis=0)
    a = (data.h2 - data.f_mid + partial) / data.h
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(np.abs(partial) > 0, np.abs(terms[-1]) / np.abs(partial), 0.0)
    return a, float(np.max(tail))


def _phi(z: Iterate, data, nl, mode, threads):
    F = z.a[None, :] * z.state.modes + data.f
    modes = solve_modes(F, data, nl, mode, threads)
    a, tail = recover_a(modes, data)
    return Iterate(SpectralState(modes, data.grid), a), tail


def apply_Phi(z: Iterate, data: DataCoefficients, nl: NonlocalParams, params: BasisParams | None = None,
              mode="ode-consistent", threads: int = 1) -> Iterate:
    """One application of ``Phi`` to ``z``."""
    if z.state.modes.shape != data.f.shape or z.grid != data.grid:
        raise GridMismatch("iterate and data must share K and the time grid")
    return _phi(z, data, nl, mode, threads)[0]


def initial_iterate(data: DataCoefficients, nl: NonlocalParams, kind="data", mode="ode-consistent",
                    threads: int = 1) -> Iterate:
    """``"zero"``, or ``"data"``: modes driven by data alone (``a = 0``) and the
    coefficient recovered from them, i.e. ``Phi(0)``."""
    zero = Iterate.zeros(data.K, data.grid)
    if kind == "zero":
        return zero
    if kind == "data":
        return apply_Phi(zero, data, nl, mode=mode, threads=threads)
    raise ValueError(f"unknown initial iterate {kind!r}")


def _data_residuals(z: Iterate, data: DataCoefficients, nl: NonlocalParams) -> dict:
    """Residuals computable from the coefficients alone.

    Only ``X_0`` has nonzero mean (``1/2``), and ``u(1/2, t)`` is the
    series at ``x = 1/2``.
    """
    modes = z.state.modes
    F = z.a[None, :] * modes + data.f
    ode = ode_residual(z.state, F, nl, data.basis, data)
    mid = basis_matrix(data.K, data.basis, np.array([0.5]))[:, 0] @ modes
    return {
        "ode": float(np.max(ode["ode"])),
        "nonlocal_value": float(np.max(ode["nonlocal_value"])),
        "nonlocal_derivative": float(np.max(ode["nonlocal_derivative"])),
        "overdetermination": float(np.max(np.abs(mid - data.h))),
        "integral": float(np.max(np.abs(0.5 * modes[0]))),
    }


def fixed_point_solve(data: DataCoefficients, nl: NonlocalParams, params: BasisParams | None = None,
                      tol: float = 1e-10, max_iter: int = 100, initial="data", radius: float | None = None,
                      mode="ode-consistent", threads: int = 1) -> SolveResult:
    """Picard iteration ``z <- Phi z`` until the E-norm step is at most ``tol``.

    ``initial`` is ``"data"``, ``"zero"`` or an :class:`Iterate`.  With a
    ``radius`` (the ball ``A(T) + 2``) a :class:`BallEscape` warning is
    issued once when an iterate leaves the ball.  On hitting ``max_iter``
    :class:`NonConvergence` is raised; its ``result`` holds the last state.
    """
    z = initial if isinstance(initial, Iterate) else initial_iterate(data, nl, initial, mode, threads)
    if z.state.modes.shape != data.f.shape or z.grid != data.grid:
        raise GridMismatch("initial iterate does not match the data")
    history, ratios, norms = [], [], [norm_E(z)]
    escaped = False
    converged = False
    tail = 0.0
    for _ in range(max_iter):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                z_new, tail = _phi(z, data, nl, mode, threads)
                delta = norm_E(z_new - z)
        except ValueError:
            history.append(float("inf"))
            break
        if history and history[-1] > 0:
            ratios.append(delta / history[-1])
        history.append(delta)
        z = z_new
        norms.append(norm_E(z))
        if radius is not None and norms[-1] > radius and not escaped:
            escaped = True
            warnings.warn(f"iterate norm {norms[-1]:.6g} exceeds the ball radius {radius:.6g}",
                          BallEscape, stacklevel=2)
        if not np.isfinite(delta):
            break
        if delta <= tol:
            converged = True
            break
    result = SolveResult(z, len(history), history, converged, ratios,
                         _data_residuals(z, data, nl), norms, tail)
    if not converged:
        raise NonConvergence(
            f"no convergence after {len(history)} iterations (last step {history[-1]:.3g}, tol {tol:g})",
            result)
    return result


def forward_solve(data: DataCoefficients, a_known, nl: NonlocalParams, params: BasisParams | None = None,
                  tol: float = 1e-10, max_iter: int = 100, mode="ode-consistent", method="picard",
                  threads: int = 1) -> SpectralState:
    """Solve for ``u`` with the coefficient frozen at ``a_known``.

    ``picard`` iterates ``u <- Phi_1(u, a)`` from the data-only state;
    ``direct`` solves the linear system of each mode pair instead (odd
    mode first, then the even mode it drives).
    """
    grid = data.grid
    a = np.broadcast_to(np.asarray(a_known, dtype=float), (grid.n,)).copy()
    if method == "direct":
        return SpectralState(_forward_direct(data, a, nl, mode), grid)
    if method != "picard":
        raise ValueError(f"unknown method {method!r}")
    u = solve_modes(data.f, data, nl, mode, threads)
    last = None
    for _ in range(max_iter):
        u_new = solve_modes(a[None, :] * u + data.f, data, nl, mode, threads)
        last = norm_B(SpectralState(u_new - u, grid))
        u = u_new
        if last <= tol:
            return SpectralState(u, grid)
        if not np.isfinite(last):
            break
    state = SpectralState(np.nan_to_num(u), grid)
    raise NonConvergence(f"forward iteration did not converge (last step {last:.3g})",
                         SolveResult(Iterate(state, a), max_iter, [], False, []))


def _forward_direct(data, a, nl, mode):
    grid = data.grid
    K = data.K
    eye = np.eye(grid.n)
    out = np.empty_like(data.f)
    # each mode solves (I - M diag a) u = free part + M f (+ coupling)
    zero_F = np.zeros_like(data.f)
    free = solve_modes(zero_F, data, nl, mode)
    M0 = kernel_matrix(0, nl, grid)
    out[0] = np.linalg.solve(eye - M0 * a[None, :], free[0] + M0 @ data.f[0])
    for k in range(1, K + 1):
        M = kernel_matrix(k, nl, grid)
        A = eye - M * a[None, :]
        o, e = 2 * k - 1, 2 * k
        out[o] = np.linalg.solve(A, free[o] + M @ data.f[o])
        F_odd = a * out[o] + data.f[o]
        rhs = solve_u_even(k, data, data.f[e], F_odd, nl, mode, u_odd=out[o])
        out[e] = np.linalg.solve(A, rhs)
    return out


def _time_derivs(u, h):
    """Second time derivative on all nodes: centred inside, 4-point one-sided at the ends."""
    d2 = np.empty_like(u)
    d2[..., 1:-1] = (u[..., 2:] - 2 * u[..., 1:-1] + u[..., :-2]) / h**2
    d2[..., 0] = (2 * u[..., 0] - 5 * u[..., 1] + 4 * u[..., 2] - u[..., 3]) / h**2
    d2[..., -1] = (2 * u[..., -1] - 5 * u[..., -2] + 4 * u[..., -3] - u[..., -4]) / h**2
    return d2


def _time_first(u, h):
    d0 = (-3 * u[..., 0] + 4 * u[..., 1] - u[..., 2]) / (2 * h)
    dT = (3 * u[..., -1] - 4 * u[..., -2] + u[..., -3]) / (2 * h)
    return d0, dT


def residual_report(z: Iterate, problem: ProblemData, params: BasisParams | None = None,
                    nl: NonlocalParams | None = None, nx: int = 129) -> dict:
    """Residuals of the original problem for the series ``u`` and coefficient ``a``.

    The equation residual uses exact ``X''`` and second differences in
    time (one-sided at ``t = 0, T``); sup norms are over ``nx`` space
    nodes and all time nodes.
    """
    params = params or problem.basis
    nl = nl or problem.nonlocal_params
    grid = z.grid
    t = grid.nodes
    x = space_grid(nx).nodes
    K = z.state.K
    modes = z.state.modes
    X = basis_matrix(K, params, x)
    u = X.T @ modes
    u_xx = basis_matrix(K, params, x, 2).T @ modes
    u_tt = _time_derivs(u, grid.step)
    f = np.broadcast_to(problem.f(x[:, None], t[None, :]), u.shape)
    pde = u_tt - u_xx - z.a[None, :] * u - f
    u_mid = basis_matrix(K, params, np.array([0.5]))[:, 0] @ modes
    h = np.broadcast_to(problem.h(t), t.shape)
    mean = integrate(u.T, space_grid(nx))
    phi = np.broadcast_to(problem.phi(x), x.shape)
    psi = np.broadcast_to(problem.psi(x), x.shape)
    d0, dT = _time_first(u, grid.step)
    ends = basis_matrix(K, params, np.array([0.0, 1.0]))
    ends_x = basis_matrix(K, params, np.array([0.0, 1.0]), 1)
    u0, u1 = ends.T @ modes
    ux0, ux1 = ends_x.T @ modes
    return {
        "pde": float(np.max(np.abs(pde))),
        "pde_interior": float(np.max(np.abs(pde[:, 1:-1]))),
        "integral": float(np.max(np.abs(mean))),
        "overdetermination": float(np.max(np.abs(u_mid - h))),
        "nonlocal_value": float(np.max(np.abs(u[:, 0] + nl.delta1 * u[:, -1] - phi))),
        "nonlocal_derivative": float(np.max(np.abs(d0 + nl.delta2 * dT - psi))),
        "boundary": float(np.max(np.abs(u0 - params.beta * u1))),
        "flux": float(np.max(np.abs(ux0 - ux1))),
    }


def solve_problem(problem: ProblemData, disc: Discretization | None = None, **kwargs) -> SolveResult:
    """Extract the data on ``disc`` and run :func:`fixed_point_solve`."""
    disc = disc or Discretization()
    data = extract_data(problem, disc)
    return fixed_point_solve(data, problem.nonlocal_params, problem.basis, **kwargs)
