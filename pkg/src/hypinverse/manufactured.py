"""Manufactured inverse problems with known ``(u*, a*)``.

``u*(x, t) = sum_m g_m(t) X_{j_m}(x)`` and ``a*(t)`` are chosen; then
``f = u*_tt - u*_xx - a* u*``, ``phi``, ``psi`` follow from the nonlocal
time conditions and ``h(t) = u*(1/2, t)``.  All data are built as
expression trees, so their derivatives stay exact.

Since ``X_{2k-1}(1/2) = (-1)^k / 2``, ``X_{2k}(1/2) = 0`` and
``X_0(1/2) = 1/2``, only odd modes (and ``X_0``) feed the observation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import expr as E
from .basis import ModeIndex, basis_expr, make_basis_params
from .errors import GridMismatch, HIdenticallyZero, NonConvergence
from .inverse import Iterate, SolveResult, fixed_point_solve, norm_E
from .problem import Discretization, ExprFunction, ProblemData
from .quadrature import integrate
from .spectral import SpectralState, extract_data, time_grid

__all__ = [
    "Mode", "ManufacturedSpec", "build", "truth_iterate", "error_report", "refinement_study",
    "PRESETS", "preset_spec", "preset_T",
]


@dataclass(frozen=True)
class Mode:
    """One term ``g(t) X_j(x)``; ``g`` is an expression in ``t``."""

    parity: str
    k: int
    amplitude: str

    @property
    def index(self) -> ModeIndex:
        return ModeIndex(self.k, self.parity)

    @property
    def g(self) -> E.Expr:
        return E.parse(self.amplitude)


@dataclass(frozen=True)
class ManufacturedSpec:
    beta: float
    delta1: float
    delta2: float
    T: float
    a_star: str
    modes: tuple
    allow_zero_mode: bool = False

    def __post_init__(self):
        make_basis_params(self.beta)
        object.__setattr__(self, "modes", tuple(self.modes))
        if not self.modes:
            raise ValueError("a manufactured solution needs at least one mode")
        for m in self.modes:
            if m.parity == "zero" and not self.allow_zero_mode:
                raise ValueError("X_0 has nonzero mean; pass allow_zero_mode=True to use it")
            extra = E.free_variables(m.g) - {"t"}
            if extra:
                raise E.UnboundVariable(f"amplitude {m.amplitude!r} uses {sorted(extra)}")
        if E.free_variables(E.parse(self.a_star)) - {"t"}:
            raise E.UnboundVariable(f"a_star {self.a_star!r} may only use t")


def _num(v) -> E.Expr:
    return E.Num(float(v))


def _at(e: E.Expr, t: float) -> float:
    return float(E.evaluate(e, {"t": t}))


def build(spec: ManufacturedSpec) -> tuple[ProblemData, "ManufacturedTruth"]:
    """Data ``(f, phi, psi, h)`` consistent with the chosen ``(u*, a*)``."""
    params = make_basis_params(spec.beta)
    a_star = E.parse(spec.a_star)
    T, d1, d2 = spec.T, spec.delta1, spec.delta2
    f = phi = psi = h = E.Num(0.0)
    for m in spec.modes:
        X = basis_expr(m.index, params)
        Xxx = E.differentiate(X, "x", 2)
        g = m.g
        g1, g2 = E.differentiate(g, "t"), E.differentiate(g, "t", 2)
        term = E._sub(E._sub(E._mul(g2, X), E._mul(g, Xxx)), E._mul(a_star, E._mul(g, X)))
        f = E._add(f, term)
        phi = E._add(phi, E._mul(_num(_at(g, 0.0) + d1 * _at(g, T)), X))
        psi = E._add(psi, E._mul(_num(_at(g1, 0.0) + d2 * _at(g1, T)), X))
        mid = {"zero": 0.5, "odd": 0.5 * (-1) ** m.k, "even": 0.0}[m.parity]
        if mid:
            h = E._add(h, E._mul(_num(mid), g))
    ts = np.linspace(0.0, T, 257)
    h_vals = np.broadcast_to(E.evaluate(h, {"t": ts}), ts.shape)
    if np.max(np.abs(h_vals)) <= 1e-14:
        raise HIdenticallyZero("the manufactured observation u*(1/2, t) vanishes; include an odd mode")
    problem = ProblemData(spec.beta, d1, d2, T, ExprFunction(f, ("x", "t")), ExprFunction(phi, ("x",)),
                          ExprFunction(psi, ("x",)), ExprFunction(h, ("t",)))
    return problem, ManufacturedTruth(spec)


@dataclass(frozen=True)
class ManufacturedTruth:
    """Exact ``(u*, a*)``; sampled on a solver grid by :meth:`iterate`."""

    spec: ManufacturedSpec

    def iterate(self, K: int, nt: int) -> Iterate:
        return truth_iterate(self.spec, K, nt)

    def a(self, t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(E.evaluate(E.parse(self.spec.a_star), {"t": t}), t.shape).copy()


def truth_iterate(spec: ManufacturedSpec, K: int, nt: int) -> Iterate:
    grid = time_grid(spec.T, nt)
    t = grid.nodes
    modes = np.zeros((2 * K + 1, nt))
    for m in spec.modes:
        j = m.index.flat
        if j > 2 * K:
            raise GridMismatch(f"mode {m} lies beyond truncation K={K}")
        modes[j] += np.broadcast_to(E.evaluate(m.g, {"t": t}), t.shape)
    return Iterate(SpectralState(modes, grid), ManufacturedTruth(spec).a(t))


def error_report(result, truth: Iterate) -> dict:
    """Errors of a solve (``SolveResult`` or ``Iterate``) against the truth."""
    z = result.solution if isinstance(result, SolveResult) else result
    if z.grid != truth.grid or z.state.modes.shape != truth.state.modes.shape:
        raise GridMismatch("solution and truth live on different grids or truncations")
    da = z.a - truth.a
    du = z.state.modes - truth.state.modes
    return {
        "a_sup": float(np.max(np.abs(da))),
        "a_l2": float(np.sqrt(integrate(da**2, z.grid) / (z.grid.b - z.grid.a))),
        "u_modes_sup": [float(v) for v in np.max(np.abs(du), axis=1)],
        "E_norm": norm_E(z - truth),
    }


def refinement_study(spec: ManufacturedSpec, K: int = 16, nts=(129, 257, 513), nx: int = 513,
                     **solve_kwargs) -> dict:
    """a-errors for a sequence of time grids, with successive error ratios."""
    problem, truth = build(spec)
    errors = []
    for nt in nts:
        data = extract_data(problem, Discretization(K, nt, nx))
        try:
            res = fixed_point_solve(data, problem.nonlocal_params, problem.basis, **solve_kwargs)
        except NonConvergence as exc:
            res = exc.result
        errors.append(error_report(res, truth.iterate(K, nt))["a_sup"])
    ratios = [errors[i] / errors[i + 1] if errors[i + 1] > 0 else float("inf")
              for i in range(len(errors) - 1)]
    return {"nt": list(nts), "a_sup": errors, "ratios": ratios,
            "shrinks": all(r > 1 for r in ratios)}


# ------------------------------------------------------------------ presets

def _single_odd(T):
    return ManufacturedSpec(3.0, 0.0, 0.0, T, "0.25*sin(t)", (Mode("odd", 1, "1 + 0.1*sin(t)"),))


def _odd_even(T):
    return ManufacturedSpec(0.5, 0.0, 0.0, T, "0",
                            (Mode("odd", 1, "1 + 0.1*t"), Mode("even", 1, "0.3*cos(t)")))


def _three_mode(T):
    return ManufacturedSpec(-0.5, 0.2, 0.1, T, f"0.5*(1 + t)/{1.0 + T!r}",
                            (Mode("odd", 1, "1 + 0.1*sin(t)"), Mode("even", 1, "0.2*cos(t)"),
                             Mode("odd", 2, "0.05*exp(-t)")))


PRESETS = {"single-odd": _single_odd, "odd-even": _odd_even, "three-mode": _three_mode}


@lru_cache(maxsize=None)
def preset_T(name: str) -> float:
    """Largest horizon (bisection, relative 1e-4) at which the contraction test holds."""
    from .conditions import max_T

    factory = PRESETS[name]
    return max_T(lambda T: build(factory(T))[0], T0=1e-6)


def preset_spec(name: str, T: float | None = None) -> ManufacturedSpec:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return PRESETS[name](preset_T(name) if T is None else float(T))
