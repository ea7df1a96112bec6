import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavityphoton.inverse import (
    CavityParams,
    compute_drive,
    compute_trajectory,
    default_grid,
    min_rho_ee,
    one_sided_limits,
    rho_ee_rate,
    solve,
)
from cavityphoton.shapes import make_catalog_shape

# Frozen mpmath (40 digits) oracles for sin2, T = 3.14 us, cavity 2 pi x (15, 3, 3) MHz:
# c_g(T/2) = sqrt(eta / 2 kappa) sqrt(8 / 3T)
CG_MID_ETA095 = 0.14629038584410676
# Omega(0) = -4 sqrt(eta / 2 kappa) sqrt(8 / 3T) (pi / T)^2 / g, the t -> 0 limit of
# -(d rho_ee/dt) / (x c_e); the direct mpmath evaluation at t = 1e-6 us gives -0.0062152911
OMEGA0_ETA095 = -0.0062150567495457839


def test_cavity_from_mhz(ref_cavity):
    assert ref_cavity.g == pytest.approx(2 * math.pi * 15)
    assert ref_cavity.kappa == pytest.approx(2 * math.pi * 3)
    assert ref_cavity.two_c == pytest.approx(25.0)


def test_cavity_rejects_bad_rates():
    with pytest.raises(ValueError):
        CavityParams(1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        CavityParams(1.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        CavityParams(math.nan, 1.0, 1.0)


def test_trajectory_pointwise(sin2_shape, ref_cavity):
    traj = compute_trajectory(sin2_shape, 0.95, ref_cavity)
    assert traj.rho_ee[0] == pytest.approx(1.0, abs=1e-15)
    mid = traj.grid.size // 2
    assert traj.grid[mid] == pytest.approx(1.57)
    assert traj.c_g[mid] == pytest.approx(CG_MID_ETA095, rel=1e-13)
    assert traj.depleted_at is None


def test_conservation_and_monotone_losses(sin2_shape, ref_cavity):
    traj = compute_trajectory(sin2_shape, 0.95, ref_cavity)
    assert traj.conservation_residual() < 1e-8
    # cumulative Simpson half-steps can dip by a few ulp near t = 0
    assert np.all(np.diff(traj.loss_gamma) >= -1e-15)
    assert np.all(np.diff(traj.loss_kappa) >= -1e-15)
    assert traj.loss_kappa[-1] == pytest.approx(0.95, abs=1e-6)


def test_omega_at_start_matches_series_limit(sin2_shape, ref_cavity):
    _, drive = solve(sin2_shape, 0.95, ref_cavity)
    assert drive.omega[0] == pytest.approx(OMEGA0_ETA095, rel=0.01)


def test_cancelled_form_matches_literal_ratio(ref_cavity):
    shape = make_catalog_shape("tophat", 3.14)
    traj, drive = solve(shape, 0.9, ref_cavity)
    rate = rho_ee_rate(shape, 0.9, ref_cavity, traj.grid)
    x = traj.c_x_im
    ok = (np.abs(x) > 1e-3 * np.max(np.abs(x))) & (traj.c_e > 1e-3)
    literal = -rate[ok] / (x[ok] * traj.c_e[ok])
    np.testing.assert_allclose(drive.omega[ok], literal, rtol=1e-9, atol=1e-9)


def test_rate_matches_numerical_derivative(sin2_shape, ref_cavity):
    traj = compute_trajectory(sin2_shape, 0.95, ref_cavity)
    numeric = np.gradient(traj.rho_ee, traj.grid, edge_order=2)
    analytic = rho_ee_rate(sin2_shape, 0.95, ref_cavity, traj.grid)
    assert np.max(np.abs(numeric - analytic)[1:-1]) < 1e-5


def test_grid_refinement_stable(sin2_shape, ref_cavity):
    _, coarse = solve(sin2_shape, 0.95, ref_cavity, default_grid(sin2_shape, 4001))
    _, fine = solve(sin2_shape, 0.95, ref_cavity, default_grid(sin2_shape, 8001))
    diff = np.max(np.abs(fine.omega[::2] - coarse.omega))
    assert diff / np.max(np.abs(coarse.omega)) < 1e-6


def test_omega_sign_convention(sin2_shape, ref_cavity):
    # the raw formula gives a negative drive throughout for sin2; the sign is kept
    _, drive = solve(sin2_shape, 0.95, ref_cavity)
    assert np.all(drive.omega[1:-1] < 0)
    assert drive.sign_changes == 0


def test_depletion_detected(sin2_shape, ref_cavity):
    traj, drive = solve(sin2_shape, 1.1, ref_cavity)
    assert traj.depleted_at is not None
    assert 0 < traj.depleted_at < sin2_shape.t_end
    after = traj.grid > traj.depleted_at
    assert np.all(traj.c_e[after] == 0.0)
    assert np.all(np.isnan(drive.omega[after]))
    assert not drive.feasible


def test_depletion_time_interpolated(sin2_shape, ref_cavity):
    grid = default_grid(sin2_shape)
    traj = compute_trajectory(sin2_shape, 1.1, ref_cavity, grid)
    rho, _ = min_rho_ee(sin2_shape, 1.1, ref_cavity, grid)
    assert rho < 0
    j = np.searchsorted(grid, traj.depleted_at) - 1
    assert grid[j] <= traj.depleted_at <= grid[j + 1]


def test_twin_peak_needs_stronger_second_drive(ref_cavity):
    T = 6.28
    shape = make_catalog_shape("twinpeak", T)
    _, drive = solve(shape, 0.9, ref_cavity)
    first = np.max(np.abs(drive.omega[drive.grid < T / 2]))
    second = np.max(np.abs(drive.omega[drive.grid > T / 2]))
    assert second > first


def test_phase_flip_single_sign_change(ref_cavity):
    T = 6.28
    shape = make_catalog_shape("twinpeak_pi", T)
    _, drive = solve(shape, 0.9, ref_cavity)
    assert drive.sign_changes == 1
    (b,) = drive.breaks
    assert drive.grid[b] == pytest.approx(T / 2)
    left, right = one_sided_limits(drive, b)
    assert left * right < 0
    assert abs(left + right) < 1e-3 * abs(left)


def test_inverse_invalid_inputs(sin2_shape, ref_cavity):
    with pytest.raises(ValueError, match="eta"):
        compute_trajectory(sin2_shape, 0.0, ref_cavity)
    with pytest.raises(ValueError, match="coupling"):
        compute_trajectory(sin2_shape, 0.5, CavityParams(0.0, 1.0, 1.0))
    with pytest.raises(ValueError, match="cover"):
        compute_trajectory(sin2_shape, 0.5, ref_cavity, np.linspace(0, 2.0, 101))
    with pytest.raises(ValueError, match="uniform"):
        compute_trajectory(sin2_shape, 0.5, ref_cavity, np.geomspace(1e-3, 3.14, 101) - 1e-3)


def test_inadmissible_shape_rejected(ref_cavity):
    from cavityphoton.shapes import from_samples

    t = np.linspace(0, 2.0, 50)
    shape = from_samples(t, np.cos(np.pi * t / 2.0) ** 2, strict=False)
    with pytest.raises(ValueError):
        compute_trajectory(shape, 0.5, ref_cavity)


def test_efficiency_scales_amplitudes(ref_cavity):
    shape = make_catalog_shape("sin2", 3.14)
    a = compute_trajectory(shape, 0.3, ref_cavity)
    b = compute_trajectory(shape, 0.6, ref_cavity)
    np.testing.assert_allclose(b.c_g, math.sqrt(2) * a.c_g, rtol=1e-14, atol=1e-16)
    # rho_ee is affine in eta
    np.testing.assert_allclose(1 - b.rho_ee, 2 * (1 - a.rho_ee), atol=1e-13)


@given(
    kind=st.sampled_from(["sin2", "tophat", "twinpeak", "gaussian"]),
    T=st.floats(1.0, 8.0),
    eta=st.floats(0.05, 1.2),
    g=st.floats(20.0, 200.0),
    kappa=st.floats(5.0, 40.0),
    gamma=st.floats(1.0, 40.0),
)
@settings(max_examples=40, deadline=None)
def test_dichotomy_property(kind, T, eta, g, kappa, gamma):
    cavity = CavityParams(g, kappa, gamma)
    shape = make_catalog_shape(kind, T)
    grid = default_grid(shape, 1001)
    traj, drive = solve(shape, eta, cavity, grid)
    if traj.depleted_at is None:
        assert np.all(np.isfinite(drive.omega))
        assert traj.conservation_residual() < 1e-8
    else:
        assert shape.t_start <= traj.depleted_at <= shape.t_end
        assert np.all(traj.c_e[traj.grid > traj.depleted_at] == 0.0)
    # losses never decrease; the odd-node Simpson half-step may dip slightly
    # where the integrand grows like t^4
    for loss in (traj.loss_gamma, traj.loss_kappa):
        assert np.all(np.diff(loss) > -1e-11 * max(loss[-1], 1e-300))
    # depletion implies a negative rho_ee somewhere
    assert (traj.depleted_at is not None) == (min_rho_ee(shape, eta, cavity, grid)[0] < -1e-8)
