"""Analytic inverse design of the driving pulse.

Given a target photon amplitude sqrt(eta) psi0(t) leaving a resonant
atom-cavity system, the amplitudes of the three states follow in closed form:

    c_g = sqrt(eta / 2 kappa) psi0
    c_x = i x,  x = -(dc_g/dt + kappa c_g) / g
    rho_ee = 1 - x^2 - c_g^2 - int_0^t (2 gamma x^2 + 2 kappa c_g^2)
    c_e = sqrt(rho_ee)

and the Rabi frequency is Omega = -(d rho_ee/dt) / (x c_e). All rates are
angular frequencies in rad/us and all times in us.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._numerics import (
    count_sign_changes,
    cumulative_simpson,
    quadratic_extrapolate,
    uniform_step,
)
from .shapes import PhotonShape, check_admissible

__all__ = [
    "CavityParams",
    "AmplitudeTrajectory",
    "DrivePulse",
    "DEFAULT_GRID_POINTS",
    "CONSERVATION_TOL",
    "default_grid",
    "compute_trajectory",
    "compute_drive",
    "solve",
]

TWO_PI = 2.0 * math.pi
DEFAULT_GRID_POINTS = 4001
CONSERVATION_TOL = 1e-8


@dataclass(frozen=True)
class CavityParams:
    """Atom-cavity coupling and decay rates in rad/us."""

    g: float
    kappa: float
    gamma: float

    def __post_init__(self):
        for name in ("g", "kappa", "gamma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
        if self.g < 0:
            raise ValueError("coupling g must be non-negative")
        if self.kappa <= 0:
            raise ValueError("cavity decay kappa must be positive")
        if self.gamma < 0:
            raise ValueError("atomic decay gamma must be non-negative")

    @classmethod
    def from_mhz(cls, g_mhz: float, kappa_mhz: float, gamma_mhz: float) -> "CavityParams":
        """Rates quoted as 2 pi x (value) MHz, e.g. ``from_mhz(15, 3, 3)``."""
        return cls(TWO_PI * g_mhz, TWO_PI * kappa_mhz, TWO_PI * gamma_mhz)

    @property
    def lossless(self) -> bool:
        return self.gamma == 0.0

    @property
    def two_c(self) -> float:
        """Twice the cooperativity, g^2 / (kappa gamma); infinite when gamma = 0."""
        if self.lossless:
            return math.inf
        return self.g**2 / (self.kappa * self.gamma)

    @property
    def cooperativity(self) -> float:
        return 0.5 * self.two_c


@dataclass(frozen=True)
class AmplitudeTrajectory:
    """Sampled amplitudes with the accumulated decay losses.

    ``c_x_im`` holds the real function x(t) with c_x = i x(t). ``depleted_at``
    is the time at which rho_ee first dropped below zero, if it did.
    """

    grid: np.ndarray
    c_e: np.ndarray
    c_x_im: np.ndarray
    c_g: np.ndarray
    loss_gamma: np.ndarray
    loss_kappa: np.ndarray
    depleted_at: Optional[float] = None

    @property
    def rho_ee(self) -> np.ndarray:
        return self.c_e**2

    @property
    def rho_xx(self) -> np.ndarray:
        return self.c_x_im**2

    @property
    def rho_gg(self) -> np.ndarray:
        return self.c_g**2

    @property
    def population(self) -> np.ndarray:
        """Probability remaining in the three-level system."""
        return self.rho_ee + self.rho_xx + self.rho_gg

    def conservation_residual(self) -> float:
        """Largest pointwise deviation of populations plus losses from one."""
        total = self.population + self.loss_gamma + self.loss_kappa
        return float(np.max(np.abs(total - 1.0)))


@dataclass(frozen=True)
class DrivePulse:
    """Designed Rabi frequency on a time grid.

    ``omega`` is NaN after ``depleted_at`` when the request was infeasible.
    ``breaks`` are grid indices of phase flips where omega jumps sign; the
    sample stored at a break is the midpoint value and one-sided limits are
    obtained by extrapolation.
    """

    grid: np.ndarray
    omega: np.ndarray
    depleted_at: Optional[float] = None
    breaks: tuple[int, ...] = ()

    @property
    def feasible(self) -> bool:
        return self.depleted_at is None

    @property
    def sign_changes(self) -> int:
        return count_sign_changes(self.omega)


def default_grid(shape: PhotonShape, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.linspace(shape.t_start, shape.t_end, points)


def _shape_terms(shape: PhotonShape, eta: float, cavity: CavityParams, grid: np.ndarray):
    """c_g, x and their time derivatives on the grid."""
    amp = math.sqrt(eta / (2.0 * cavity.kappa))
    cg = amp * shape(grid)
    dcg = amp * shape.derivative(grid)
    d2cg = amp * shape.second_derivative(grid)
    x = -(dcg + cavity.kappa * cg) / cavity.g
    dx = -(d2cg + cavity.kappa * dcg) / cavity.g
    return cg, dcg, x, dx


def _check_inputs(shape, eta, cavity, grid, check):
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError("eta must be positive")
    if cavity.g <= 0:
        raise ValueError("inverse design needs a positive coupling g")
    if check:
        check_admissible(shape)
    if grid is None:
        grid = default_grid(shape)
    grid = np.asarray(grid, dtype=float)
    h = uniform_step(grid)
    if grid[0] > shape.t_start + 1e-12 * h or grid[-1] < shape.t_end - 1e-9 * h:
        raise ValueError(
            f"grid [{grid[0]}, {grid[-1]}] does not cover the shape support "
            f"[{shape.t_start}, {shape.t_end}]"
        )
    return grid, h


def _raw_rho_ee(shape, eta, cavity, grid, h):
    cg, _, x, _ = _shape_terms(shape, eta, cavity, grid)
    loss_gamma = cumulative_simpson(2.0 * cavity.gamma * x**2, h)
    loss_kappa = cumulative_simpson(2.0 * cavity.kappa * cg**2, h)
    rho_ee = 1.0 - x**2 - cg**2 - loss_gamma - loss_kappa
    return rho_ee, cg, x, loss_gamma, loss_kappa


def _first_depletion(grid, rho_ee, tol=CONSERVATION_TOL):
    """Index after which c_e is zeroed and the interpolated zero crossing time."""
    below = np.nonzero(rho_ee < -tol)[0]
    if below.size == 0:
        return None, None
    k = int(below[0])
    nonneg = np.nonzero(rho_ee[:k] >= 0.0)[0]
    if nonneg.size == 0:
        return 0, float(grid[0])
    j = int(nonneg[-1])
    r0, r1 = rho_ee[j], rho_ee[j + 1]
    t_m = grid[j] + (grid[j + 1] - grid[j]) * r0 / (r0 - r1)
    return j, float(t_m)


def min_rho_ee(shape, eta, cavity, grid=None, *, check=True) -> tuple[float, float]:
    """Minimum of the unclamped rho_ee over the grid and the time it occurs."""
    grid, h = _check_inputs(shape, eta, cavity, grid, check)
    rho_ee = _raw_rho_ee(shape, eta, cavity, grid, h)[0]
    i = int(np.argmin(rho_ee))
    return float(rho_ee[i]), float(grid[i])


def compute_trajectory(
    shape: PhotonShape,
    eta: float,
    cavity: CavityParams,
    grid=None,
    *,
    check: bool = True,
) -> AmplitudeTrajectory:
    """Amplitude trajectory that emits ``sqrt(eta) * psi0``.

    Args:
        shape: admissible target shape.
        eta: requested emission probability (> 0; values above the feasible
            maximum are allowed and show up as depletion).
        cavity: rates in rad/us.
        grid: uniform time grid covering the support; defaults to 4001 points.
        check: validate the shape first. Internal callers that already did so
            pass False.

    Returns:
        The trajectory. If rho_ee drops below -1e-8, ``c_e`` is zero from the
        crossing onwards and ``depleted_at`` holds the crossing time.
    """
    grid, h = _check_inputs(shape, eta, cavity, grid, check)
    rho_ee, cg, x, loss_gamma, loss_kappa = _raw_rho_ee(shape, eta, cavity, grid, h)
    j, t_m = _first_depletion(grid, rho_ee)
    rho = np.where(rho_ee > -CONSERVATION_TOL, np.maximum(rho_ee, 0.0), 0.0)
    if j is not None:
        rho[j + 1 :] = 0.0
    return AmplitudeTrajectory(
        grid=grid,
        c_e=np.sqrt(rho),
        c_x_im=x,
        c_g=cg,
        loss_gamma=loss_gamma,
        loss_kappa=loss_kappa,
        depleted_at=t_m,
    )


def rho_ee_rate(shape, eta, cavity, grid) -> np.ndarray:
    """d rho_ee/dt from shape derivatives: -(d/dt)(rho_xx + rho_gg) - 2 gamma rho_xx - 2 kappa rho_gg."""
    grid = np.asarray(grid, dtype=float)
    cg, dcg, x, dx = _shape_terms(shape, eta, cavity, grid)
    return -2.0 * (x * dx + cg * dcg) - 2.0 * cavity.gamma * x**2 - 2.0 * cavity.kappa * cg**2


def compute_drive(
    traj: AmplitudeTrajectory,
    shape: PhotonShape,
    eta: float,
    cavity: CavityParams,
) -> DrivePulse:
    """Rabi frequency realising ``traj``.

    Using x' = Omega c_e / 2 - gamma x + g c_g, the population rate factors as
    d rho_ee/dt = -2 x (x' + gamma x - g c_g), so Omega = 2 (x' + gamma x -
    g c_g) / c_e. This is the same quantity as -(d rho_ee/dt) / (x c_e) with
    the common factor x cancelled, which keeps nodes of x regular. Points
    where c_e vanishes without depletion (and phase-flip nodes, on each side)
    are filled by quadratic extrapolation from the three nearest valid
    samples.
    """
    grid = traj.grid
    n = grid.size
    cg, _, x, dx = _shape_terms(shape, eta, cavity, grid)
    c_e = traj.c_e
    numer = 2.0 * (dx + cavity.gamma * x - cavity.g * cg)

    limit = n
    if traj.depleted_at is not None:
        limit = int(np.searchsorted(grid, traj.depleted_at, side="right"))
    valid = np.zeros(n, dtype=bool)
    valid[:limit] = c_e[:limit] ** 2 > CONSERVATION_TOL

    omega = np.full(n, np.nan)
    omega[valid] = numer[valid] / c_e[valid]

    if traj.depleted_at is None:
        for i in np.nonzero(~valid)[0]:
            omega[i] = _extrapolate_from_valid(grid, omega, valid, int(i))

    breaks = tuple(
        int(np.argmin(np.abs(grid - tf))) for tf in shape.phase_flips if grid[0] < tf < grid[-1]
    )
    return DrivePulse(grid=grid, omega=omega, depleted_at=traj.depleted_at, breaks=breaks)


def _extrapolate_from_valid(grid, omega, valid, i):
    idx = np.nonzero(valid)[0]
    if idx.size < 3:
        return math.nan
    left = idx[idx < i][-3:]
    right = idx[idx > i][:3]
    side = left if left.size == 3 and (right.size < 3 or i - left[-1] <= right[0] - i) else right
    if side.size < 3:
        return math.nan
    return quadratic_extrapolate(grid[side], omega[side], grid[i])


def solve(
    shape: PhotonShape,
    eta: float,
    cavity: CavityParams,
    grid=None,
) -> tuple[AmplitudeTrajectory, DrivePulse]:
    """Trajectory and drive pulse for one design request."""
    traj = compute_trajectory(shape, eta, cavity, grid)
    return traj, compute_drive(traj, shape, eta, cavity)


def one_sided_limits(drive: DrivePulse, index: int) -> tuple[float, float]:
    """Left and right limits of omega at a grid index by quadratic extrapolation."""
    g, w = drive.grid, drive.omega
    left = quadratic_extrapolate(g[index - 3 : index], w[index - 3 : index], g[index])
    right = quadratic_extrapolate(g[index + 1 : index + 4], w[index + 1 : index + 4], g[index])
    return left, right
