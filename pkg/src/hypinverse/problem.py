"""Problem data: the source ``f(x, t)``, initial data ``phi``, ``psi``,
the observation ``h(t)`` and the scalar parameters.

Data functions are either symbolic (:class:`ExprFunction`, derivatives
exact) or sampled on a uniform grid (:class:`SampledFunction`, derivatives
from a quintic interpolating spline).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import RectBivariateSpline, make_interp_spline

from . import expr as E
from .basis import BasisParams, make_basis_params
from .kernels import NonlocalParams

__all__ = ["ExprFunction", "SampledFunction", "ProblemData", "Discretization", "as_function"]


class ExprFunction:
    """A data function given by an expression in ``variables``."""

    is_symbolic = True

    def __init__(self, source, variables=("x",)):
        self.expr = E.parse(source) if isinstance(source, str) else source
        self.variables = tuple(variables)
        extra = E.free_variables(self.expr) - set(self.variables)
        if extra:
            raise E.UnboundVariable(
                f"expression uses {sorted(extra)} but only {self.variables} are allowed")

    @property
    def text(self) -> str:
        return E.to_text(self.expr)

    def __call__(self, *args):
        bindings = dict(zip(self.variables, args))
        return E.evaluate(self.expr, bindings)

    def derivative(self, var: str, order: int = 1) -> "ExprFunction":
        return ExprFunction(E.differentiate(self.expr, var, order), self.variables)

    def __repr__(self):
        return f"ExprFunction({self.text!r}, {self.variables})"


class SampledFunction:
    """Uniformly sampled data with spline interpolation.

    One-dimensional data take ``nodes`` as a 1-d array; ``f(x, t)`` takes
    ``nodes=(x_nodes, t_nodes)`` and ``values`` of shape ``(nx, nt)``.
    """

    is_symbolic = False

    def __init__(self, nodes, values, variables=("x",), orders=None, source=None):
        self.variables = tuple(variables)
        self.orders = orders or (0,) * len(self.variables)
        self.source = source
        if len(self.variables) == 1:
            self.nodes = (np.asarray(nodes, dtype=float),)
        else:
            self.nodes = tuple(np.asarray(n, dtype=float) for n in nodes)
        self.values = np.asarray(values, dtype=float)
        for axis, n in enumerate(self.nodes):
            if len(n) < 6:
                raise ValueError("sampled data need at least 6 points per axis")
            steps = np.diff(n)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
                raise ValueError("sampled data must lie on a uniform grid")

    @cached_property
    def _spline(self):
        if len(self.nodes) == 1:
            return make_interp_spline(self.nodes[0], self.values, k=5)
        return RectBivariateSpline(self.nodes[0], self.nodes[1], self.values, kx=5, ky=5, s=0)

    def __call__(self, *args):
        if len(self.nodes) == 1:
            x = np.asarray(args[0], dtype=float)
            return self._spline(x, nu=self.orders[0])
        x, t = np.broadcast_arrays(np.asarray(args[0], dtype=float), np.asarray(args[1], dtype=float))
        out = self._spline.ev(x.ravel(), t.ravel(), dx=self.orders[0], dy=self.orders[1])
        return out.reshape(x.shape) if x.ndim else float(out[0])

    def derivative(self, var: str, order: int = 1) -> "SampledFunction":
        axis = self.variables.index(var)
        orders = list(self.orders)
        orders[axis] += order
        return SampledFunction(self.nodes if len(self.nodes) > 1 else self.nodes[0], self.values,
                               self.variables, tuple(orders), self.source)

    def subsampled(self, stride: int) -> "SampledFunction":
        """Same function from every ``stride``-th sample (refinement checks)."""
        if len(self.nodes) == 1:
            return SampledFunction(self.nodes[0][::stride], self.values[::stride],
                                   self.variables, self.orders, self.source)
        nodes = (self.nodes[0][::stride], self.nodes[1][::stride])
        return SampledFunction(nodes, self.values[::stride, ::stride],
                               self.variables, self.orders, self.source)

    def __repr__(self):
        shape = "x".join(str(len(n)) for n in self.nodes)
        return f"SampledFunction({self.variables}, {shape} samples, d={self.orders})"


def as_function(value, variables):
    if isinstance(value, (ExprFunction, SampledFunction)):
        return value
    return ExprFunction(value, variables)


@dataclass(frozen=True)
class ProblemData:
    """One inverse-problem instance."""

    beta: float
    delta1: float
    delta2: float
    T: float
    f: object
    phi: object
    psi: object
    h: object

    def __post_init__(self):
        object.__setattr__(self, "f", as_function(self.f, ("x", "t")))
        object.__setattr__(self, "phi", as_function(self.phi, ("x",)))
        object.__setattr__(self, "psi", as_function(self.psi, ("x",)))
        object.__setattr__(self, "h", as_function(self.h, ("t",)))

    @property
    def basis(self) -> BasisParams:
        return make_basis_params(self.beta)

    @property
    def nonlocal_params(self) -> NonlocalParams:
        return NonlocalParams(self.delta1, self.delta2, self.T)

    @property
    def is_symbolic(self) -> bool:
        return all(fn.is_symbolic for fn in (self.f, self.phi, self.psi, self.h))


@dataclass(frozen=True)
class Discretization:
    """Truncation ``K`` (modes ``0..2K``) and the time/space grid sizes."""

    K: int = 16
    nt: int = 257
    nx: int = 513

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.nt < 5:
            raise ValueError("nt must be at least 5")
        if self.nx < 5:
            raise ValueError("nx must be at least 5")
