"""Target single-photon waveforms.

A :class:`PhotonShape` is the unit-normalised temporal amplitude psi0(t) of the
photon to be emitted, together with its first (and, where known, second)
derivative. Times are in microseconds and amplitudes in us^-1/2.

Catalog families
----------------
``sin2``         sqrt(8/3T) sin^2(pi t/T)
``tophat``       sin^2(2 pi t/T) + 1.19 sin^7(pi t/T), renormalised
``twinpeak``     sqrt(8/3T) sin^2(2 pi t/T)
``twinpeak_pi``  twinpeak with a sign flip at the node t = T/2
``gaussian``     exp(-(t-t0)^2 / 2 sigma^2) on [0, T], edge-corrected, renormalised

Shapes built from user samples carry ``kind == "sampled"``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from ._numerics import (
    central_difference,
    five_point_derivative,
    gauss_legendre,
    panel_edges,
)

__all__ = [
    "CATALOG_KINDS",
    "PhotonShape",
    "ValidationReport",
    "make_catalog_shape",
    "from_samples",
    "read_samples_csv",
    "validate_shape",
    "normalize",
    "norm_squared",
]

CATALOG_KINDS = ("sin2", "tophat", "twinpeak", "twinpeak_pi", "gaussian")

TOPHAT_COEFF = 1.19
GAUSSIAN_MIN_SIGMAS = 8.0
GAUSSIAN_MAX_DEFICIT = 1e-6

NORM_TOL = 1e-8
START_VALUE_TOL = 1e-6   # |psi0(t_start)| * sqrt(T)
START_SLOPE_TOL = 1e-4   # |dpsi0(t_start)| * T^(3/2)
C1_TOL = 1e-4            # scaled derivative mismatch; a kink scores O(h), smooth shapes O(h^2)
VALIDATION_POINTS = 2001
MIN_SAMPLES = 8

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PhotonShape:
    """Normalised photon amplitude psi0 on the support [t_start, t_end].

    ``value_fn``, ``deriv_fn`` and ``deriv2_fn`` are vectorised and return zero
    outside the support. ``phase_flips`` lists the times where psi0 changes
    sign through a node; ``breakpoints`` are interior times where the shape is
    only piecewise smooth (used to place quadrature panels).
    """

    kind: str
    t_start: float
    t_end: float
    value_fn: ArrayFn
    deriv_fn: ArrayFn
    deriv2_fn: Optional[ArrayFn] = None
    phase_flips: tuple[float, ...] = ()
    breakpoints: tuple[float, ...] = ()
    params: Mapping[str, float] = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def __call__(self, t) -> np.ndarray:
        return self.value_fn(np.asarray(t, dtype=float))

    def derivative(self, t) -> np.ndarray:
        return self.deriv_fn(np.asarray(t, dtype=float))

    def second_derivative(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.deriv2_fn is not None:
            return self.deriv2_fn(t)
        h = 1e-4 * self.duration
        return five_point_derivative(self.deriv_fn, t, h)

    def scaled(self, factor: float) -> "PhotonShape":
        """Same shape multiplied by a constant factor."""
        d2 = self.deriv2_fn
        return PhotonShape(
            kind=self.kind,
            t_start=self.t_start,
            t_end=self.t_end,
            value_fn=_scale_fn(self.value_fn, factor),
            deriv_fn=_scale_fn(self.deriv_fn, factor),
            deriv2_fn=None if d2 is None else _scale_fn(d2, factor),
            phase_flips=self.phase_flips,
            breakpoints=self.breakpoints,
            params=dict(self.params),
        )


@dataclass(frozen=True)
class ValidationReport:
    normalized: bool
    start_conditions_ok: bool
    c1_ok: bool
    max_deriv_mismatch: float
    norm: float
    messages: tuple[str, ...] = ()

    @property
    def admissible(self) -> bool:
        return self.normalized and self.start_conditions_ok and self.c1_ok


def _scale_fn(fn: ArrayFn, factor: float) -> ArrayFn:
    return lambda t: factor * fn(t)


def _on_support(fn: ArrayFn, t_start: float, t_end: float) -> ArrayFn:
    def wrapped(t):
        t = np.asarray(t, dtype=float)
        inside = (t >= t_start) & (t <= t_end)
        return np.where(inside, fn(np.clip(t, t_start, t_end)), 0.0)

    return wrapped


def norm_squared(shape: PhotonShape, panels: int = 64, order: int = 20) -> float:
    """Integral of psi0^2 over the support by composite Gauss-Legendre."""
    edges = panel_edges(shape.t_start, shape.t_end, panels, shape.breakpoints)
    return gauss_legendre(lambda t: shape(t) ** 2, edges, order)


def normalize(shape: PhotonShape) -> PhotonShape:
    """Rescale so that the integral of psi0^2 is one."""
    n2 = norm_squared(shape)
    if not np.isfinite(n2) or n2 <= 0.0:
        raise ValueError("shape has zero norm and cannot be normalised")
    return shape.scaled(1.0 / math.sqrt(n2))


# --- catalog ---------------------------------------------------------------


def _sin2_family(amp: float, rate: float):
    """psi = amp sin^2(rate t) and its first two derivatives."""

    def value(t):
        return amp * np.sin(rate * t) ** 2

    def deriv(t):
        return amp * rate * np.sin(2 * rate * t)

    def deriv2(t):
        return 2 * amp * rate**2 * np.cos(2 * rate * t)

    return value, deriv, deriv2


def _flipped(fn: ArrayFn, node: float) -> ArrayFn:
    return lambda t: np.sign(node - t) * fn(t)


def _tophat(T: float, coeff: float):
    b = math.pi / T

    def value(t):
        return np.sin(2 * b * t) ** 2 + coeff * np.sin(b * t) ** 7

    def deriv(t):
        s, c = np.sin(b * t), np.cos(b * t)
        return 2 * b * np.sin(4 * b * t) + 7 * coeff * b * s**6 * c

    def deriv2(t):
        s, c = np.sin(b * t), np.cos(b * t)
        return 8 * b**2 * np.cos(4 * b * t) + 7 * coeff * b**2 * (6 * s**5 * c**2 - s**7)

    return value, deriv, deriv2


def _gaussian(T: float, t0: float, sigma: float):
    """Gaussian on [0, T] with a cubic correction zeroing value and slope at both ends."""

    def gauss(t):
        return np.exp(-((t - t0) ** 2) / (2 * sigma**2))

    def gauss_d(t):
        return -(t - t0) / sigma**2 * gauss(t)

    def gauss_d2(t):
        return ((t - t0) ** 2 / sigma**4 - 1 / sigma**2) * gauss(t)

    # cubic Hermite polynomial through the Gaussian's edge values and slopes
    y0, y1 = float(gauss(0.0)), float(gauss(T))
    m0, m1 = float(gauss_d(0.0)), float(gauss_d(T))
    c0, c1 = y0, m0
    c2 = (3 * (y1 - y0) / T - 2 * m0 - m1) / T
    c3 = (m0 + m1 - 2 * (y1 - y0) / T) / T**2

    def value(t):
        return gauss(t) - (c0 + t * (c1 + t * (c2 + t * c3)))

    def deriv(t):
        return gauss_d(t) - (c1 + t * (2 * c2 + 3 * c3 * t))

    def deriv2(t):
        return gauss_d2(t) - (2 * c2 + 6 * c3 * t)

    return value, deriv, deriv2


def make_catalog_shape(kind: str, T: float, **extra: float) -> PhotonShape:
    """Build a normalised catalog waveform of duration ``T`` microseconds.

    Args:
        kind: one of :data:`CATALOG_KINDS`.
        T: support length in microseconds; the support is [0, T].
        **extra: family parameters. ``tophat`` accepts ``coeff`` (default
            1.19). ``gaussian`` accepts ``sigma`` (default T/16) and ``t0``
            (default T/2); the window must span at least 8 sigma on each side
            of ``t0``.

    Returns:
        A :class:`PhotonShape` with unit norm and vanishing value and slope at
        t = 0 and t = T.

    Raises:
        ValueError: unknown kind, non-positive T, or a Gaussian window too
            narrow for the requested width.
    """
    if kind not in CATALOG_KINDS:
        raise ValueError(f"unknown shape kind {kind!r}; expected one of {CATALOG_KINDS}")
    if not (T > 0 and math.isfinite(T)):
        raise ValueError(f"pulse duration must be positive, got T={T}")

    flips: tuple[float, ...] = ()
    params: dict[str, float] = {"T": float(T)}
    renormalize = False

    if kind == "sin2":
        value, deriv, deriv2 = _sin2_family(math.sqrt(8 / (3 * T)), math.pi / T)
    elif kind in ("twinpeak", "twinpeak_pi"):
        value, deriv, deriv2 = _sin2_family(math.sqrt(8 / (3 * T)), 2 * math.pi / T)
        if kind == "twinpeak_pi":
            node = 0.5 * T
            value, deriv, deriv2 = (_flipped(f, node) for f in (value, deriv, deriv2))
            flips = (node,)
    elif kind == "tophat":
        coeff = float(extra.get("coeff", TOPHAT_COEFF))
        value, deriv, deriv2 = _tophat(T, coeff)
        params["coeff"] = coeff
        renormalize = True
    else:
        sigma = float(extra.get("sigma", T / (2 * GAUSSIAN_MIN_SIGMAS)))
        t0 = float(extra.get("t0", 0.5 * T))
        if sigma <= 0:
            raise ValueError("gaussian width sigma must be positive")
        # fraction of the untruncated |psi|^2 lying outside [0, T]
        deficit = 0.5 * (math.erfc(t0 / sigma) + math.erfc((T - t0) / sigma))
        reach = min(t0, T - t0) / sigma
        if reach < GAUSSIAN_MIN_SIGMAS or deficit > GAUSSIAN_MAX_DEFICIT:
            raise ValueError(
                f"gaussian window too narrow: covers {reach:.3g} sigma on the short "
                f"side (need {GAUSSIAN_MIN_SIGMAS:g}); normalisation deficit {deficit:.3g}"
            )
        value, deriv, deriv2 = _gaussian(T, t0, sigma)
        params.update(sigma=sigma, t0=t0)
        renormalize = True

    shape = PhotonShape(
        kind=kind,
        t_start=0.0,
        t_end=float(T),
        value_fn=_on_support(value, 0.0, T),
        deriv_fn=_on_support(deriv, 0.0, T),
        deriv2_fn=_on_support(deriv2, 0.0, T),
        phase_flips=flips,
        breakpoints=flips,
        params=params,
    )
    return normalize(shape) if renormalize else shape


# --- sampled shapes ----------------------------------------------------------


def from_samples(times, values, *, strict: bool = True) -> PhotonShape:
    """Interpolate user samples with a clamped cubic spline and renormalise.

    The spline has zero slope at both ends, which makes the result C^1 and
    enforces the vanishing start slope. With ``strict=False`` a non-zero first
    sample is accepted so that :func:`validate_shape` can report it.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != v.shape:
        raise ValueError("times and values must be 1-D arrays of equal length")
    if t.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {t.size}")
    if not np.all(np.isfinite(t)) or not np.all(np.isfinite(v)):
        raise ValueError("samples must be finite")
    if np.any(np.diff(t) <= 0):
        raise ValueError("sample times must be strictly ascending")
    if not np.any(v != 0.0):
        raise ValueError("all samples are zero; cannot normalise")

    spline = CubicSpline(t, v, bc_type=((1, 0.0), (1, 0.0)))
    # s(t)^2 is degree 6 per knot interval: 4-point Gauss-Legendre is exact
    n2 = gauss_legendre(lambda x: spline(x) ** 2, t, order=4)
    scale = 1.0 / math.sqrt(n2)
    duration = t[-1] - t[0]
    if strict and abs(scale * v[0]) * math.sqrt(duration) > START_VALUE_TOL:
        raise ValueError(
            f"first sample must vanish (psi0(t_start) = 0); got {scale * v[0]:.3g} after normalisation"
        )

    d1, d2 = spline.derivative(1), spline.derivative(2)
    t0, t1 = float(t[0]), float(t[-1])
    nz = v != 0.0
    idx = np.nonzero(nz)[0]
    crossings = idx[:-1][np.signbit(v[idx[1:]]) != np.signbit(v[idx[:-1]])]
    flips = []
    for i in crossings:
        j = idx[np.searchsorted(idx, i) + 1]
        # linear estimate of the node between the two opposite-sign samples
        flips.append(float(t[i] - v[i] * (t[j] - t[i]) / (v[j] - v[i])))

    return PhotonShape(
        kind="sampled",
        t_start=t0,
        t_end=t1,
        value_fn=_on_support(lambda x: scale * spline(x), t0, t1),
        deriv_fn=_on_support(lambda x: scale * d1(x), t0, t1),
        deriv2_fn=_on_support(lambda x: scale * d2(x), t0, t1),
        phase_flips=tuple(flips),
        breakpoints=tuple(float(x) for x in t[1:-1]),
        params={"T": float(duration), "samples": float(t.size)},
    )


def read_samples_csv(path, *, strict: bool = True) -> PhotonShape:
    """Load a two-column ``t_us,psi0`` CSV and build a sampled shape."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"t_us", "psi0"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected header 't_us,psi0'")
        rows = [(float(r["t_us"]), float(r["psi0"])) for r in reader]
    if not rows:
        raise ValueError(f"{path}: no samples")
    times, values = zip(*rows)
    return from_samples(times, values, strict=strict)


# --- validation ----------------------------------------------------------------


def validate_shape(shape: PhotonShape, points: int = VALIDATION_POINTS) -> ValidationReport:
    """Check normalisation, start conditions and C^1 consistency on a uniform grid.

    The derivative check compares ``deriv_fn`` with central differences of
    ``value_fn``; the reported mismatch is scaled by grid spacing over peak
    amplitude so that it is dimensionless.
    """
    messages = []
    T = shape.duration
    if not (T > 0):
        return ValidationReport(False, False, False, math.inf, 0.0, ("empty support",))
    grid = np.linspace(shape.t_start, shape.t_end, points)
    h = grid[1] - grid[0]
    psi = shape(grid)
    dpsi = shape.derivative(grid)

    if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(dpsi))):
        return ValidationReport(False, False, False, math.inf, math.nan, ("non-finite samples",))

    norm = norm_squared(shape)
    normalized = bool(abs(norm - 1.0) < NORM_TOL)
    if not normalized:
        messages.append(f"integral of psi0^2 is {norm:.12g}, not 1")

    v0 = abs(psi[0]) * math.sqrt(T)
    s0 = abs(dpsi[0]) * T**1.5
    start_ok = bool(v0 < START_VALUE_TOL and s0 < START_SLOPE_TOL)
    if v0 >= START_VALUE_TOL:
        messages.append(f"psi0(t_start) = {psi[0]:.3g} does not vanish")
    if s0 >= START_SLOPE_TOL:
        messages.append(f"dpsi0/dt(t_start) = {dpsi[0]:.3g} does not vanish")

    peak = float(np.max(np.abs(psi)))
    if peak == 0.0:
        mismatch = math.inf
    else:
        mismatch = float(np.max(np.abs(dpsi[1:-1] - central_difference(psi, h))) * h / peak)
    c1_ok = bool(mismatch < C1_TOL)
    if not c1_ok:
        messages.append(f"derivative inconsistent with values (scaled mismatch {mismatch:.3g})")

    return ValidationReport(normalized, start_ok, c1_ok, mismatch, norm, tuple(messages))


def ends_smoothly(shape: PhotonShape) -> bool:
    """True when psi0 and its slope vanish at t_end within the start tolerances."""
    T = shape.duration
    end = np.array([shape.t_end])
    v = abs(float(shape(end)[0])) * math.sqrt(T)
    s = abs(float(shape.derivative(end)[0])) * T**1.5
    return v < START_VALUE_TOL and s < START_SLOPE_TOL


def check_admissible(shape: PhotonShape) -> ValidationReport:
    report = validate_shape(shape)
    if not report.admissible:
        raise ValueError("inadmissible photon shape: " + "; ".join(report.messages))
    return report
