"""Spectral solver for recovering ``a(t)`` in ``u_tt - u_xx = a(t) u + f``
with nonlocal time conditions, a nonlocal boundary condition and the
observation ``u(1/2, t) = h(t)``."""

from .basis import BasisParams, ModeIndex, make_basis_params
from .conditions import check_conditions, compute_constants, max_T
from .inverse import Iterate, SolveResult, fixed_point_solve, forward_solve, residual_report
from .kernels import NonlocalParams
from .manufactured import ManufacturedSpec, Mode, build, preset_spec
from .problem import Discretization, ExprFunction, ProblemData, SampledFunction
from .spectral import SpectralState, extract_data

__all__ = [
    "BasisParams", "ModeIndex", "make_basis_params", "check_conditions", "compute_constants", "max_T",
    "Iterate", "SolveResult", "fixed_point_solve", "forward_solve", "residual_report",
    "NonlocalParams", "ManufacturedSpec", "Mode", "build", "preset_spec", "Discretization",
    "ExprFunction", "ProblemData", "SampledFunction", "SpectralState", "extract_data",
]

__version__ = "0.1.0"
