"""Forward integration of the driven, damped three-level system.

The amplitudes (c_e, c_x, c_g) of |e,0>, |x,0>, |g,1> obey

    dc_e/dt = (i/2) Omega c_x
    dc_x/dt = (i/2) Omega c_e - gamma c_x + i g c_g
    dc_g/dt = i g c_x - kappa c_g

which is i dc/dt = -(1/2) H c with the decay rates on the diagonal of H as
imaginary entries. The two loss integrals are integrated alongside so that
conservation can be checked independently of the amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from ._numerics import quadratic_extrapolate, simpson, uniform_step
from .inverse import AmplitudeTrajectory, CavityParams, DrivePulse
from .shapes import PhotonShape

__all__ = [
    "ForwardResult",
    "IntegrationError",
    "drive_interpolant",
    "integrate",
    "verify",
    "loss_budget",
]

RTOL = 1e-10
ATOL = 1e-12
IMAG_LEAK_TOL = 1e-9


class IntegrationError(RuntimeError):
    """Raised when the adaptive integrator cannot reach the end of the window."""

    def __init__(self, message: str, t_fail: float | None = None):
        super().__init__(message)
        self.t_fail = t_fail


@dataclass(frozen=True)
class ForwardResult:
    trajectory: AmplitudeTrajectory
    target: np.ndarray
    emitted: np.ndarray
    eta_achieved: float
    shape_error_l2: float
    conservation_residual: float
    zero_area: float
    imag_leakage: float


class _PiecewiseDrive:
    """C^1 cubic Hermite interpolant of omega, split at sign-jump breaks."""

    def __init__(self, drive: DrivePulse):
        grid = np.asarray(drive.grid, dtype=float)
        omega = np.asarray(drive.omega, dtype=float)
        if not np.all(np.isfinite(omega)):
            raise ValueError("drive contains non-finite samples")
        h = uniform_step(grid)
        cuts = sorted({0, grid.size - 1, *[b for b in drive.breaks if 3 <= b <= grid.size - 4]})
        self.edges = grid[cuts]
        self.pieces = []
        for i0, i1 in zip(cuts[:-1], cuts[1:]):
            t = grid[i0 : i1 + 1]
            w = omega[i0 : i1 + 1].copy()
            if i0 in drive.breaks:
                w[0] = quadratic_extrapolate(t[1:4], w[1:4], t[0])
            if i1 in drive.breaks:
                w[-1] = quadratic_extrapolate(t[-4:-1], w[-4:-1], t[-1])
            slope = np.gradient(w, h, edge_order=2)
            self.pieces.append(CubicHermiteSpline(t, w, slope))

    def segments(self):
        return list(zip(self.edges[:-1], self.edges[1:], self.pieces))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, len(self.pieces) - 1)
        out = np.empty_like(t)
        for i, piece in enumerate(self.pieces):
            mask = k == i
            if np.any(mask):
                out[mask] = piece(t[mask])
        return out


def drive_interpolant(drive: DrivePulse):
    """Vectorised Omega(t) used by the integrator."""
    return _PiecewiseDrive(drive)


def _rhs(omega_fn, cavity: CavityParams):
    g, kappa, gamma = cavity.g, cavity.kappa, cavity.gamma

    def f(t, y):
        om = float(omega_fn(t))
        ce, cx, cg = y[0], y[1], y[2]
        return np.array(
            [
                0.5j * om * cx,
                0.5j * om * ce - gamma * cx + 1j * g * cg,
                1j * g * cx - kappa * cg,
                2.0 * gamma * (cx.real**2 + cx.imag**2),
                2.0 * kappa * (cg.real**2 + cg.imag**2),
            ]
        )

    return f


def integrate(
    drive: DrivePulse,
    cavity: CavityParams,
    initial=(1.0, 0.0, 0.0),
    window=None,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> AmplitudeTrajectory:
    """Integrate the three-level system under ``drive`` and resample on its grid.

    Args:
        drive: designed pulse; must not be depleted.
        cavity: rates in rad/us.
        initial: (c_e, x, c_g) at the window start, with c_x = i x.
        window: (t_start, t_end) sub-interval of the drive grid; defaults to
            the full grid.
        rtol, atol: step-size control tolerances of the Dormand-Prince 5(4)
            pair.

    Raises:
        ValueError: depleted drive or initial probability above one.
        IntegrationError: the step size underflowed; ``t_fail`` says where.
    """
    if drive.depleted_at is not None:
        raise ValueError(f"drive is depleted at t={drive.depleted_at:.6g} us and cannot be integrated")
    ce0, x0, cg0 = (float(v) for v in initial)
    if ce0**2 + x0**2 + cg0**2 > 1.0 + 1e-12:
        raise ValueError("initial amplitudes carry more than unit probability")

    grid = np.asarray(drive.grid, dtype=float)
    if window is not None:
        lo, hi = window
        keep = (grid >= lo - 1e-12) & (grid <= hi + 1e-12)
        if keep.sum() < 2:
            raise ValueError("window selects fewer than two grid points")
    else:
        keep = np.ones(grid.size, dtype=bool)
    t_out = grid[keep]

    omega_fn = drive_interpolant(drive)
    y = np.array([ce0, 1j * x0, cg0, 0.0, 0.0], dtype=complex)
    states = np.empty((t_out.size, 5), dtype=complex)
    states[0] = y
    filled = 1

    edges = [t_out[0]] + [e for e in omega_fn.edges[1:-1] if t_out[0] < e < t_out[-1]] + [t_out[-1]]
    for a, b in zip(edges[:-1], edges[1:]):
        # integrate each smooth piece separately so sign jumps fall on segment ends
        sel = (t_out > a) & (t_out <= b)
        # each segment lies inside one Hermite piece; calling it directly is cheaper
        k = int(np.searchsorted(omega_fn.edges, 0.5 * (a + b))) - 1
        piece = omega_fn.pieces[min(max(k, 0), len(omega_fn.pieces) - 1)]
        sol = solve_ivp(_rhs(piece, cavity), (a, b), y, method="RK45", t_eval=t_out[sel], rtol=rtol, atol=atol)
        if sol.status != 0:
            t_fail = float(sol.t[-1]) if sol.t.size else float(a)
            raise IntegrationError(f"integration failed at t={t_fail:.9g} us: {sol.message}", t_fail)
        n = int(sel.sum())
        states[filled : filled + n] = sol.y.T
        filled += n
        y = sol.y[:, -1]

    ce, cx, cg = states[:, 0], states[:, 1], states[:, 2]
    leak = max(
        float(np.max(np.abs(ce.imag))),
        float(np.max(np.abs(cx.real))),
        float(np.max(np.abs(cg.imag))),
    )
    traj = AmplitudeTrajectory(
        grid=t_out,
        c_e=ce.real.copy(),
        c_x_im=cx.imag.copy(),
        c_g=cg.real.copy(),
        loss_gamma=states[:, 3].real.copy(),
        loss_kappa=states[:, 4].real.copy(),
    )
    object.__setattr__(traj, "_imag_leakage", leak)
    return traj


def imag_leakage(traj: AmplitudeTrajectory) -> float:
    """Largest amplitude component outside the real/imaginary/real pattern."""
    return getattr(traj, "_imag_leakage", 0.0)


def verify(
    shape: PhotonShape,
    eta: float,
    cavity: CavityParams,
    drive: DrivePulse,
    **kwargs,
) -> ForwardResult:
    """Integrate under ``drive`` and compare the emitted field with sqrt(eta) psi0.

    Keyword arguments are passed to :func:`integrate`.
    """
    traj = integrate(drive, cavity, **kwargs)
    leak = imag_leakage(traj)
    if leak > IMAG_LEAK_TOL:
        raise IntegrationError(f"amplitudes left the real/imaginary pattern (leakage {leak:.3g})")
    grid = traj.grid
    h = uniform_step(grid)
    emitted = math.sqrt(2.0 * cavity.kappa) * traj.c_g
    target = math.sqrt(eta) * shape(grid)

    err = math.sqrt(simpson((emitted - target) ** 2, h))
    ref = math.sqrt(simpson(target**2, h))
    eta_achieved = simpson(emitted**2, h)
    abs_area = simpson(np.abs(emitted), h)
    zero_area = abs(simpson(emitted, h)) / abs_area if abs_area > 0 else 0.0
    return ForwardResult(
        trajectory=traj,
        target=target,
        emitted=emitted,
        eta_achieved=eta_achieved,
        shape_error_l2=err / ref if ref > 0 else math.inf,
        conservation_residual=traj.conservation_residual(),
        zero_area=zero_area,
        imag_leakage=leak,
    )


def loss_budget(result: ForwardResult) -> tuple[float, float]:
    """Terminal (spontaneous-emission loss, cavity emission) probabilities."""
    traj = result.trajectory
    return float(traj.loss_gamma[-1]), float(traj.loss_kappa[-1])
