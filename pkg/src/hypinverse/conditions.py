"""Audits of the solvability conditions and the contraction constants.

:func:`check_conditions` tests the regularity/boundary hypotheses on the
data and the compatibility equalities; :func:`compute_constants` evaluates
``A_1..A_5``, ``B_1..B_5``, ``A(T)``, ``B(T)`` and the contraction test
``B(T) (A(T) + 2)^2 < 1``.  Norms are ``L2(0, 1)`` for functions of ``x``,
``L2(D_T)`` for ``f`` and its derivatives, and sup norms over ``[0, T]``
for functions of ``t``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from .basis import BasisParams, coefficients, lambda_k, lambda_sq_sum_closed_form
from .errors import BoundaryMismatch, InvalidNonlocalParams, MissingDerivative
from .inverse import norm_B, norm_E
from .kernels import NonlocalParams, rho_bound
from .problem import ProblemData, SampledFunction
from .quadrature import UniformGrid, integrate

__all__ = [
    "ComplianceReport", "ConstantsReport", "check_conditions", "compute_constants", "check_eq33",
    "check_theorem3", "check_theorem1_smallness", "theorem1_factor", "norm_B", "norm_E",
    "lemma_estimate_check", "max_T", "SERIES_CONSTANT",
]

SERIES_CONSTANT = lambda_sq_sum_closed_form()
EXPR_TOL = 1e-8
SAMPLE_TOL = 1e-4


@dataclass
class Check:
    name: str
    defect: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "defect": self.defect, "passed": self.passed}


@dataclass
class ComplianceReport:
    checks: list = field(default_factory=list)
    tolerance: float = EXPR_TOL

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self):
        return {"all_passed": self.all_passed, "tolerance": self.tolerance,
                "checks": [c.as_dict() for c in self.checks]}


def _sup(values) -> float:
    return float(np.max(np.abs(values)))


def check_conditions(problem: ProblemData, nx: int = 2049, nt: int = 65) -> ComplianceReport:
    """Numerical audit of C1..C5 and the compatibility conditions.

    Integrals use composite Simpson on ``nx`` nodes and conditions on
    ``f`` are sampled at ``nt`` times.  Each check passes when its defect
    is at most ``1e-8`` (all data symbolic) or ``1e-4`` (sampled data).
    """
    tol = EXPR_TOL if problem.is_symbolic else SAMPLE_TOL
    beta, d1, d2, T = problem.beta, problem.delta1, problem.delta2, problem.T
    xg = UniformGrid(0.0, 1.0, nx)
    x = xg.nodes
    t = np.linspace(0.0, T, nt)
    phi, psi, f, h = problem.phi, problem.psi, problem.f, problem.h

    def at(fn, *args):
        return np.broadcast_to(np.asarray(fn(*args), dtype=float), np.broadcast(*args).shape)

    zero, one = np.zeros_like(t), np.ones_like(t)
    out = []

    def add(name, defect, ok=None):
        defect = float(defect)
        out.append(Check(name, defect, bool(defect <= tol) if ok is None else bool(ok)))

    add("C1_delta_nonnegative", max(0.0, -d1, -d2), d1 >= 0 and d2 >= 0)
    add("C1_delta_product", max(0.0, (d1 + d2) - (1 + d1 * d2)), 1 + d1 * d2 > d1 + d2)

    p1, p2 = phi.derivative("x", 1), phi.derivative("x", 2)
    s1 = psi.derivative("x", 1)
    f1 = f.derivative("x", 1)
    e0, e1 = np.array(0.0), np.array(1.0)
    add("C2_phi_boundary", abs(at(phi, e0) - beta * at(phi, e1)))
    add("C2_phi_x_boundary", abs(at(p1, e0) - at(p1, e1)))
    add("C2_phi_xx_boundary", abs(at(p2, e0) - beta * at(p2, e1)))
    add("C3_psi_boundary", abs(at(psi, e0) - beta * at(psi, e1)))
    add("C3_psi_x_boundary", abs(at(s1, e0) - at(s1, e1)))
    add("C4_f_boundary", _sup(at(f, zero, t) - beta * at(f, one, t)))
    add("C4_f_x_boundary", _sup(at(f1, zero, t) - at(f1, one, t)))

    h_t = at(h, np.linspace(0.0, T, max(nt, 257)))
    add("C5_h_nonzero", 0.0 if np.min(np.abs(h_t)) > 1e-8 else 1.0, np.min(np.abs(h_t)) > 1e-8)

    add("mean_phi", abs(integrate(at(phi, x), xg)))
    add("mean_psi", abs(integrate(at(psi, x), xg)))
    add("mean_f", _sup(integrate(at(f, x[None, :], t[:, None]), xg)))

    h1 = h.derivative("t", 1)
    Tarr = np.array(T)
    add("compat_value", abs(at(h, e0) + d1 * at(h, Tarr) - at(phi, np.array(0.5))))
    add("compat_derivative", abs(at(h1, e0) + d2 * at(h1, Tarr) - at(psi, np.array(0.5))))
    return ComplianceReport(out, tol)


# ------------------------------------------------------------- constants

def _c(nl: NonlocalParams) -> float:
    return 1.0 + 2.0 * rho_bound(nl) * (nl.delta1 + nl.delta2 + nl.delta1 * nl.delta2)


def rho_1(nl: NonlocalParams) -> float:
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    r = rho_bound(nl)
    return (r**2 * (d1 * (d2 / 2 + T / 2) + d2 * (0.5 + T / 2 + d2 * (0.25 + T / 2))
                    + d1 * d2 * (0.5 + T / 2 + d2 * (0.5 + T / 2)))
            + T / 2 + d2 * (0.5 + T / 2))


def rho_2(nl: NonlocalParams) -> float:
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    r = rho_bound(nl)
    return (r**2 * (d1 * (0.5 + T / 2) + d1 * (0.25 + T / 2) + d2 * (d1 / 2 + T / 2)
                    + d1 * d2 * (0.5 + T / 2 + d1 * (0.5 + T / 2)))
            + 0.5 + T / 2 + d1 * (0.5 + T / 2))


def data_norms(problem: ProblemData, nx: int = 1025, nt: int = 257) -> dict:
    """Every data norm entering ``A_1..A_4``."""
    p, q = problem.basis.p, problem.basis.q
    xg = UniformGrid(0.0, 1.0, nx)
    tg = UniformGrid(0.0, problem.T, nt)
    x, t = xg.nodes, tg.nodes
    w = 1.0 - q - p * x

    def ev(fn, *args):
        return np.broadcast_to(np.asarray(fn(*args), dtype=float), np.broadcast(*args).shape)

    def l2x(v):
        return math.sqrt(max(integrate(v**2, xg), 0.0))

    def l2xt(v):  # v has shape (nt, nx)
        return math.sqrt(max(integrate(integrate(v**2, xg), tg), 0.0))

    phi, psi, f, h = problem.phi, problem.psi, problem.f, problem.h
    phi2, phi3 = ev(phi.derivative("x", 2), x), ev(phi.derivative("x", 3), x)
    psi1, psi2 = ev(psi.derivative("x", 1), x), ev(psi.derivative("x", 2), x)
    X, Tm = x[None, :], t[:, None]
    f0 = ev(f, X, Tm)
    fx = ev(f.derivative("x", 1), X, Tm)
    fxx = ev(f.derivative("x", 2), X, Tm)
    h_t = ev(h, t)
    h2 = ev(h.derivative("t", 2), t)
    fmid = ev(f, np.full_like(t, 0.5), t)
    return {
        "phi": l2x(ev(phi, x)),
        "phi_xxx": l2x(phi3),
        "psi": l2x(ev(psi, x)),
        "psi_xx": l2x(psi2),
        "f": l2xt(f0),
        "f_xx": l2xt(fxx),
        "phi_weighted": l2x(phi3 * w - 3 * p * phi2),
        "psi_weighted": l2x(psi2 * w - 2 * p * psi1),
        "f_weighted": l2xt(fxx * w[None, :] - 2 * p * fx),
        "h2_minus_f_mid": _sup(h2 - fmid),
        "inv_h": float(np.max(1.0 / np.abs(h_t))),
    }


def _refined_norms(problem: ProblemData, nx, nt) -> dict:
    norms = data_norms(problem, nx, nt)
    if problem.is_symbolic:
        return norms

    def coarse(stride):
        kw = {}
        for name in ("f", "phi", "psi", "h"):
            fn = getattr(problem, name)
            kw[name] = fn.subsampled(stride) if isinstance(fn, SampledFunction) else fn
        return data_norms(dataclasses.replace(problem, **kw), nx, nt)

    n2, n4 = coarse(2), coarse(4)
    for key, v in norms.items():
        for a, b in ((n4[key], n2[key]), (n2[key], v)):
            scale = max(abs(b), 1e-12)
            if abs(a - b) / scale >= 1e-3:
                raise MissingDerivative(
                    f"norm {key!r} changes by {abs(a - b) / scale:.2%} under refinement; "
                    "sampled data too coarse for the derivatives the constants need")
    return norms


@dataclass
class ConstantsReport:
    rho: float
    rho1: float
    rho2: float
    A: list
    B: list
    R: float
    eq33_lhs: float
    eq33_holds: bool
    thm1_smallness_lhs: float
    thm3_lhs: float
    thm3_holds: bool
    data_norms: dict
    series_constant: float = SERIES_CONSTANT
    T: float = 0.0

    @property
    def A_T(self) -> float:
        return self.A[-1]

    @property
    def B_T(self) -> float:
        return self.B[-1]

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["A_T"], d["B_T"] = self.A_T, self.B_T
        return d


def theorem1_factor(nl: NonlocalParams) -> float:
    """``(1 + 2 d1 + 3 d2 + d1 d2) T^2 / (2 (1 + d1)(1 + d2))``."""
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    return (1 + 2 * d1 + 3 * d2 + d1 * d2) * T**2 / (2 * (1 + d1) * (1 + d2))


def constants_from_norms(nl: NonlocalParams, n: dict) -> ConstantsReport:
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    rho = rho_bound(nl)
    c = _c(nl)
    r1, r2 = rho_1(nl), rho_2(nl)
    s = SERIES_CONSTANT
    sq2 = math.sqrt(2.0)
    g = (1 + 3 * d1 + 3 * d2) / ((1 + d1) * (1 + d2))

    A1 = 2 / (1 + d1) * n["phi"] + 2 * T / (1 + d2) * n["psi"] + 2 * g * T * math.sqrt(T) * n["f"]
    B1 = g * T**2
    A2 = (4 * sq2 * rho * (1 + d2) * n["phi_xxx"] + 4 * sq2 * rho * (1 + d1) * n["psi_xx"]
          + 4 * c * math.sqrt(2 * T) * n["f_xx"])
    B2 = 2 * c * T
    A3 = (8 * rho * (1 + d2) * n["phi_weighted"] + 8 * rho * (1 + d1) * n["psi_weighted"]
          + 8 * c * math.sqrt(T) * n["f_weighted"] + 8 * r1 * n["phi_xxx"] + 8 * r2 * n["psi_xx"]
          + 8 * c**2 * T * math.sqrt(T) * n["f_xx"])
    B3 = 2 * sq2 * c * T + 2 * sq2 * c**2 * T**2
    A4 = n["inv_h"] * (n["h2_minus_f_mid"] + 0.5 * s * (
        2 * sq2 * rho * (1 + d2) * n["phi_xxx"] + 2 * sq2 * rho * (1 + d1) * n["psi_xx"]
        + c * 2 * math.sqrt(2 * T) * n["f_xx"]))
    B4 = 0.5 * n["inv_h"] * s * c * T
    A5, B5 = A1 + A2 + A3, B1 + B2 + B3
    A, B = A4 + A5, B4 + B5
    R = A + 2
    eq33 = B * R**2
    k1 = theorem1_factor(nl)
    thm3 = k1 * R
    return ConstantsReport(
        rho=rho, rho1=r1, rho2=r2,
        A=[A1, A2, A3, A4, A5, A], B=[B1, B2, B3, B4, B5, B], R=R,
        eq33_lhs=eq33, eq33_holds=bool(eq33 < 1), thm1_smallness_lhs=k1,
        thm3_lhs=thm3, thm3_holds=bool(thm3 < 1), data_norms=dict(n), T=T)


def compute_constants(problem: ProblemData, nx: int = 1025, nt: int = 257) -> ConstantsReport:
    """All contraction constants for ``problem``.

    ``thm1_smallness_lhs`` is the factor multiplying ``||a||`` in the
    smallness condition for the auxiliary problem; ``thm3_lhs`` is that
    factor times ``A(T) + 2``.
    """
    return constants_from_norms(problem.nonlocal_params, _refined_norms(problem, nx, nt))


def check_eq33(report: ConstantsReport) -> dict:
    lhs = report.eq33_lhs
    return {"holds": bool(lhs < 1), "lhs": lhs, "margin": 1.0 - lhs}


def check_theorem3(report: ConstantsReport) -> dict:
    lhs = report.thm3_lhs
    return {"holds": bool(lhs < 1), "lhs": lhs, "margin": 1.0 - lhs}


def check_theorem1_smallness(a_norm: float, nl: NonlocalParams) -> dict:
    lhs = theorem1_factor(nl) * a_norm
    return {"holds": bool(lhs < 1), "lhs": lhs, "margin": 1.0 - lhs}


def max_T(make_problem, T0: float = 1e-3, rtol: float = 1e-4, nx: int = 1025, nt: int = 257,
          T_min: float = 1e-14, T_max: float = 1e3) -> float:
    """Largest ``T`` (to relative ``rtol``) at which ``B(T)(A(T)+2)^2 < 1``.

    ``make_problem(T)`` builds the problem for a given horizon.  Returns a
    ``T`` at which the inequality holds.
    """
    def holds(T):
        try:
            return compute_constants(make_problem(T), nx, nt).eq33_holds
        except InvalidNonlocalParams:
            return False

    lo = hi = float(T0)
    if holds(lo):
        hi = lo * 2
        while holds(hi):
            lo, hi = hi, hi * 2
            if hi > T_max:
                raise ValueError(f"inequality still holds at T = {lo}")
    else:
        lo = hi / 2
        while not holds(lo):
            hi, lo = lo, lo / 2
            if lo < T_min:
                raise ValueError("inequality fails for every tested T")
    while (hi - lo) > rtol * hi:
        mid = math.sqrt(lo * hi) if hi / lo > 4 else 0.5 * (lo + hi)
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ------------------------------------------------------------------ lemmas

def _boundary_defects(v, order, params: BasisParams):
    out = []
    for s in range(order + 1):
        d = v.derivative("x", s) if s else v
        a0, a1 = float(d(np.array(0.0))), float(d(np.array(1.0)))
        out.append(abs(a0 - params.beta * a1) if s % 2 == 0 else abs(a0 - a1))
    return out


def lemma_estimate_check(v, i: int, params: BasisParams, K: int = 32, nx: int = 4097,
                         tol: float = 1e-8) -> dict:
    """Spot-check the weighted coefficient estimates for ``v`` at order ``i``.

    ``v`` is an :class:`~hypinverse.problem.ExprFunction` (or anything with
    ``derivative``).  Coefficient sums run over ``k = 1..K``.  The second
    odd-order estimate is checked twice: with the odd coefficients (the
    reference pairing, reported as ``lemma2_second_printed``) and with the
    even coefficients; ``holds`` uses the even pairing.
    """
    if i < 1:
        raise ValueError("i must be >= 1")
    defects = _boundary_defects(v, 2 * i + 1, params)
    scale = 1.0 + max(abs(float(v(np.array(x0)))) for x0 in (0.0, 0.5, 1.0))
    if max(defects) > 1e-8 * scale * lambda_k(1) ** (2 * i + 1):
        raise BoundaryMismatch(f"boundary relations violated (defects {defects})")

    xg = UniformGrid(0.0, 1.0, nx)
    x = xg.nodes
    p, q = params.p, params.q
    w = 1.0 - q - p * x

    def ev(order):
        fn = v.derivative("x", order) if order else v
        return np.broadcast_to(np.asarray(fn(x), dtype=float), x.shape)

    def l2(vals):
        return math.sqrt(max(integrate(vals**2, xg), 0.0))

    coef = coefficients(ev(0), K, params)
    lam = lambda_k(np.arange(1, K + 1))
    odd, even = coef[1::2], coef[2::2]

    def wsum(power, c):
        return float(np.sqrt(np.sum((lam**power * c) ** 2)))

    sq8 = 2 * math.sqrt(2.0)
    e2i, e2i1, e2im1 = ev(2 * i), ev(2 * i + 1), ev(2 * i - 1)
    checks = {
        "lemma1_odd": (wsum(2 * i, odd), sq8 * l2(e2i)),
        "lemma1_even": (wsum(2 * i, even), sq8 * l2(e2i * w - 2 * i * p * e2im1)),
        "lemma2_odd": (wsum(2 * i + 1, odd), sq8 * l2(e2i1)),
        "lemma2_second_printed": (wsum(2 * i + 1, odd), sq8 * l2(e2i1 * w - (2 * i + 1) * p * e2i)),
        "lemma2_second": (wsum(2 * i + 1, even), sq8 * l2(e2i1 * w - (2 * i + 1) * p * e2i)),
    }
    out = {name: {"lhs": lhs, "rhs": rhs, "holds": bool(lhs <= rhs + tol)}
           for name, (lhs, rhs) in checks.items()}
    out["holds"] = all(v["holds"] for k, v in out.items() if k != "lemma2_second_printed")
    return out
