"""Efficiency bounds for shaped single-photon emission.

Three numbers bound how much of a requested photon can come out of the cavity:

* ``eta_cav = 2C / (2C + 1)`` depends on the cavity alone.
* ``eta_sup`` is the efficiency at which rho_ee(t_end) = 0 for a shape that
  ends with zero value and slope; it has a closed form in the integral of the
  squared slope of psi0.
* ``eta_max`` is the largest efficiency for which rho_ee stays non-negative on
  the whole grid, found by bisection.

They satisfy eta_max <= eta_sup <= eta_cav.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._numerics import gauss_legendre, panel_edges
from .inverse import CavityParams, min_rho_ee
from .shapes import PhotonShape, check_admissible, ends_smoothly

__all__ = [
    "EfficiencyReport",
    "EfficiencyError",
    "eta_cav",
    "eta_sup",
    "eta_max",
    "report",
    "slope_integral",
]

BISECTION_TOL = 1e-8
ETA_FLOOR = 1e-6
# eta_sup and the grid's rho_ee use different quadratures
ORDER_SLACK = BISECTION_TOL


class EfficiencyError(RuntimeError):
    pass


@dataclass(frozen=True)
class EfficiencyReport:
    cooperativity_2C: float
    eta_cav: float
    eta_sup: Optional[float]
    eta_max: float
    t_m: Optional[float]
    lossless: bool = False

    def as_dict(self) -> dict:
        """Keys used by the ``bounds`` command."""
        two_c = self.cooperativity_2C
        return {
            "two_c": None if math.isinf(two_c) else two_c,
            "eta_cav": self.eta_cav,
            "eta_sup": self.eta_sup,
            "eta_max": self.eta_max,
            "t_m_us": self.t_m,
            "lossless": self.lossless,
        }


def eta_cav(cavity: CavityParams) -> float:
    """Shape-independent ceiling 2C / (2C + 1); exactly 1 for a lossless atom."""
    if cavity.lossless:
        return 1.0
    two_c = cavity.two_c
    return two_c / (two_c + 1.0)


def slope_integral(shape: PhotonShape) -> float:
    """Integral of (dpsi0/dt)^2 over the support, in us^-2."""
    edges = panel_edges(shape.t_start, shape.t_end, 64, shape.breakpoints)
    return gauss_legendre(lambda t: shape.derivative(t) ** 2, edges, 20)


def eta_sup(shape: PhotonShape, cavity: CavityParams) -> float:
    """Closed-form upper bound for shapes that end with zero value and slope.

    Raises:
        ValueError: the shape does not end smoothly; use :func:`eta_max`.
    """
    if not ends_smoothly(shape):
        raise ValueError(
            "eta_sup closed form needs psi0 and its slope to vanish at t_end; use eta_max instead"
        )
    if cavity.lossless:
        return 1.0
    term = 1.0 + slope_integral(shape) / cavity.kappa**2
    return 1.0 / (1.0 + term / cavity.two_c)


def eta_max(
    shape: PhotonShape,
    cavity: CavityParams,
    grid=None,
    *,
    tol: float = BISECTION_TOL,
    check: bool = True,
) -> tuple[float, float]:
    """Largest eta keeping rho_ee >= 0 on the grid, and where rho_ee is smallest.

    rho_ee(t; eta) is non-increasing in eta at every t, so feasibility is
    monotone and bisection on [1e-6, eta_cav] converges to the boundary. The
    returned eta is on the feasible side of the final bracket, so the solver
    never reports depletion for eta <= eta_max.

    Returns:
        ``(eta_max, t_m)`` with t_m the time of the minimum of rho_ee.
    """
    if check:
        check_admissible(shape)

    def margin(eta):
        return min_rho_ee(shape, eta, cavity, grid, check=False)

    lo, hi = ETA_FLOOR, eta_cav(cavity)
    rho_hi, t_hi = margin(hi)
    if rho_hi >= 0.0:
        # cannot exceed the cavity limit
        return hi, t_hi
    rho_lo, _ = margin(lo)
    if rho_lo < 0.0:
        raise EfficiencyError(
            f"rho_ee already negative ({rho_lo:.3g}) at eta={lo:g}; "
            "the shape or grid is inconsistent with the cavity parameters"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid)[0] >= 0.0:
            lo = mid
        else:
            hi = mid
    return lo, margin(lo)[1]


def report(shape: PhotonShape, cavity: CavityParams, grid=None) -> EfficiencyReport:
    """All three bounds, with their ordering enforced."""
    check_admissible(shape)
    cav = eta_cav(cavity)
    sup = eta_sup(shape, cavity) if ends_smoothly(shape) else None
    best, t_m = eta_max(shape, cavity, grid, check=False)

    upper = cav if sup is None else sup
    if best > upper + ORDER_SLACK or (sup is not None and sup > cav + 1e-15) or best <= 0:
        raise EfficiencyError(
            f"efficiency ordering violated: eta_max={best!r}, eta_sup={sup!r}, eta_cav={cav!r}"
        )
    return EfficiencyReport(
        cooperativity_2C=cavity.two_c,
        eta_cav=cav,
        eta_sup=sup,
        eta_max=best,
        t_m=t_m,
        lossless=cavity.lossless,
    )


def feasibility_profile(shape, cavity, etas, grid=None) -> np.ndarray:
    """Minimum rho_ee for each efficiency in ``etas`` (diagnostics, sweeps)."""
    return np.array([min_rho_ee(shape, e, cavity, grid, check=False)[0] for e in etas])

