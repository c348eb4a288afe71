"""Green's kernels of the mode problems with nonlocal time conditions.

Mode ``k >= 1`` solves ``u'' + lambda^2 u = F`` with
``u(0) + d1 u(T) = phi`` and ``u'(0) + d2 u'(T) = psi``; mode 0 solves
``u'' = F`` under the same conditions.  The particular solution for
homogeneous conditions is ``int_0^T G(t, tau) F(tau) dtau``.

Each kernel is a part smooth on the whole square plus a causal part
switched on for ``tau <= t``.  Both pieces are exposed (``*_parts``) since
the discrete operators in :mod:`hypinverse.spectral` integrate them
separately.

:func:`phi_bracket` and :func:`psi_bracket` are term-for-term
transcriptions of the two closed-form coupling brackets of the reference
even-mode formula.  At ``d1 = d2 = 0`` they equal ``lambda`` times the
kernel applied to ``cos(lambda t)`` and ``sin(lambda t)``; for other
deltas they do not satisfy the mode ODE and are only used by the
``as-printed`` coupling mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import lambda_k
from .errors import InvalidNonlocalParams, NonPositiveRho

__all__ = [
    "NonlocalParams", "rho_k", "rho_bound", "G0", "Gk", "G0_parts", "Gk_parts",
    "homogeneous_u0", "homogeneous_mode", "phi_bracket", "psi_bracket",
]


@dataclass(frozen=True)
class NonlocalParams:
    """``delta1, delta2 >= 0`` with ``1 + d1 d2 > d1 + d2`` and horizon ``T > 0``.

    ``strict=False`` also admits the equality case ``1 + d1 d2 = d1 + d2``;
    the kernels are still defined wherever ``rho_k(T) > 0``, but the bound
    :func:`rho_bound` is infinite there.
    """

    delta1: float
    delta2: float
    T: float
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        d1, d2 = self.delta1, self.delta2
        if d1 < 0 or d2 < 0:
            raise InvalidNonlocalParams(f"delta1, delta2 must be >= 0, got {d1}, {d2}")
        ok = 1 + d1 * d2 > d1 + d2 if self.strict else 1 + d1 * d2 >= d1 + d2
        if not ok:
            rel = ">" if self.strict else ">="
            raise InvalidNonlocalParams(f"need 1 + d1*d2 {rel} d1 + d2, got d1={d1}, d2={d2}")
        if not self.T > 0:
            raise InvalidNonlocalParams(f"T must be positive, got {self.T}")


def rho_bound(nl: NonlocalParams) -> float:
    """``rho = 1 / (1 - (d1 + d2) + d1 d2)``, an upper bound of ``1/rho_k(T)``."""
    den = 1.0 - (nl.delta1 + nl.delta2) + nl.delta1 * nl.delta2
    if den <= 0:
        raise InvalidNonlocalParams("rho is unbounded when 1 + d1*d2 = d1 + d2")
    return 1.0 / den


def rho_k(k, nl: NonlocalParams):
    lam = lambda_k(k)
    r = 1.0 + (nl.delta1 + nl.delta2) * np.cos(lam * nl.T) + nl.delta1 * nl.delta2
    if np.any(np.asarray(r) <= 0):
        raise NonPositiveRho(f"rho_k(T) = {r} for k = {k}")
    return r


def G0_parts(t, tau, nl: NonlocalParams):
    """``(smooth, causal)`` with ``G0 = smooth + [t >= tau] * causal``."""
    t, tau = np.asarray(t, dtype=float), np.asarray(tau, dtype=float)
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    smooth = -(d2 * t + d1 * (T - tau) + d1 * d2 * (t - tau)) / ((1 + d1) * (1 + d2))
    return smooth, t - tau


def G0(t, tau, nl: NonlocalParams):
    t, tau = np.asarray(t, dtype=float), np.asarray(tau, dtype=float)
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    den = (1 + d1) * (1 + d2)
    before = -(d2 * t + d1 * (T - tau) + d1 * d2 * (t - tau)) / den
    after = -(d2 * t + d1 * (T - tau) - (1 + d1 + d2) * (t - tau)) / den
    # tie t == tau goes to the second branch; both agree there
    return np.where(t >= tau, after, before)


def Gk_parts(k, t, tau, nl: NonlocalParams):
    t, tau = np.asarray(t, dtype=float), np.asarray(tau, dtype=float)
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    lam = lambda_k(k)
    r = rho_k(k, nl)
    smooth = -(d1 * np.sin(lam * (T - tau)) * np.cos(lam * t)
               + d2 * np.cos(lam * (T - tau)) * np.sin(lam * t)
               + d1 * d2 * np.sin(lam * (t - tau))) / (r * lam)
    return smooth, np.sin(lam * (t - tau)) / lam


def Gk(k, t, tau, nl: NonlocalParams):
    smooth, causal = Gk_parts(k, t, tau, nl)
    t, tau = np.asarray(t, dtype=float), np.asarray(tau, dtype=float)
    return np.where(t >= tau, smooth + causal, smooth)


def homogeneous_u0(phi0, psi0, t, nl: NonlocalParams):
    t = np.asarray(t, dtype=float)
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    return phi0 / (1 + d1) + (t - d1 * (T - t)) / ((1 + d1) * (1 + d2)) * psi0


def homogeneous_mode(k, phi, psi, t, nl: NonlocalParams):
    """Free oscillation of mode pair ``k`` meeting the nonlocal conditions."""
    t = np.asarray(t, dtype=float)
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    lam = lambda_k(k)
    return (phi * (np.cos(lam * t) + d2 * np.cos(lam * (T - t)))
            + psi / lam * (np.sin(lam * t) - d1 * np.sin(lam * (T - t)))) / rho_k(k, nl)


def phi_bracket(k, t, nl: NonlocalParams):
    """The brace multiplying ``-phi_{2k-1}``, transcribed literally."""
    t = np.asarray(t, dtype=float)
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    lam = lambda_k(k)
    r = rho_k(k, nl)
    sin, cos = np.sin, np.cos
    inner = (
        d1 * cos(lam * t) * (T / 2 * sin(lam * T) + d2 * (1 / 4) * (1 - cos(2 * lam * T)))
        + d2 * sin(lam * t) * (1 / (2 * lam) * sin(lam * T) + T / 2 * cos(lam * T)
                               + d2 * (T / 2 + 1 / (4 * lam) * sin(2 * lam * T)))
        + d1 * d2 * (1 / (4 * lam) * (cos(lam * (2 * T - t)) - cos(lam * t)) + T / 2 * sin(lam * t)
                     + d2 * (-T / 2 * sin(lam * (T - t))
                             + 1 / (4 * lam) * (cos(lam * (T - t)) - cos(lam * (T + t)))))
    )
    return (-1 / r**2 * (1 / lam) * inner
            + t / 2 * sin(lam * t)
            + d2 * (-t / 2 * sin(lam * (T - t)) + 1 / (4 * lam) * (cos(lam * (T - t)) - cos(lam * (T + t)))))


def psi_bracket(k, t, nl: NonlocalParams):
    """The brace multiplying ``psi_{2k-1}/lambda_k``, transcribed literally."""
    t = np.asarray(t, dtype=float)
    d1, d2, T = nl.delta1, nl.delta2, nl.T
    lam = lambda_k(k)
    r = rho_k(k, nl)
    sin, cos = np.sin, np.cos
    inner = (
        d1 * cos(lam * t) * (1 / (2 * lam) * sin(lam * T) - T / 2 * cos(lam * T))
        - d1 * (T / 2 - 1 / (4 * lam) * sin(2 * lam * T))
        + d2 * sin(lam * t) * (T / 2 * sin(lam * T) - d1 / (4 * lam) * (1 - cos(2 * lam * T)))
        + d1 * d2 * (1 / (4 * lam) * (sin(lam * (2 * T - t)) + sin(lam * t)) - T / 2 * cos(lam * t)
                     - d1 * (T / 2 * cos(lam * (T - t))
                             - 1 / (4 * lam) * (sin(lam * (T - t)) + sin(lam * (T + t)))))
    )
    return (-1 / r**2 * (1 / lam) * inner
            + (1 / (2 * lam) * sin(lam * t) - t / 2 * cos(lam * t)
               - d1 * (t / 2 * cos(lam * (T - t)) + 1 / (4 * lam) * (sin(lam * (T - t)) - sin(lam * (T + t))))))
