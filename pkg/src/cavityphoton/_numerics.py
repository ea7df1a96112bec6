"""Small quadrature and interpolation helpers shared by the solver modules."""

from __future__ import annotations

import numpy as np


def uniform_step(grid: np.ndarray, rtol: float = 1e-9) -> float:
    """Return the spacing of a uniform grid, raising if the grid is not uniform."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise ValueError("grid must be one-dimensional with at least 3 points")
    steps = np.diff(grid)
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if h <= 0 or np.max(np.abs(steps - h)) > rtol * abs(h) * 10:
        raise ValueError("grid must be strictly ascending and uniformly spaced")
    return float(h)


def cumulative_simpson(values: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral of uniformly sampled values by composite Simpson.

    Even-indexed nodes get the ordinary composite rule. Odd-indexed nodes add a
    single-interval piece from the quadratic through three neighbouring samples,
    so every node carries an O(h^4) estimate.
    """
    f = np.asarray(values, dtype=float)
    n = f.size
    if n < 3:
        raise ValueError("need at least 3 samples for Simpson quadrature")
    out = np.zeros(n)
    # pairs of intervals [2m, 2m+2]
    pair = h / 3.0 * (f[0:-2:2] + 4.0 * f[1:-1:2] + f[2::2])
    out[2::2] = np.cumsum(pair)
    # odd nodes: forward half-step from the even node below
    odd = np.arange(1, n, 2)
    fwd = odd + 1 < n
    i = odd[fwd]
    out[i] = out[i - 1] + h / 12.0 * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1])
    if not fwd.all():
        # trailing odd node (even number of samples): backward formula
        j = odd[~fwd][0]
        out[j] = out[j - 1] + h / 12.0 * (-f[j - 2] + 8.0 * f[j - 1] + 5.0 * f[j])
    return out


def simpson(values: np.ndarray, h: float) -> float:
    return float(cumulative_simpson(values, h)[-1])


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def gauss_legendre(func, edges, order: int = 20) -> float:
    """Integrate ``func`` over consecutive panels given by ``edges``.

    ``func`` must accept a numpy array of abscissae.
    """
    edges = np.asarray(edges, dtype=float)
    nodes, weights = _gauss_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    x = 0.5 * (hi + lo) + half * nodes[None, :]
    return float(np.sum(half * weights[None, :] * func(x.ravel()).reshape(x.shape)))


def panel_edges(a: float, b: float, panels: int, breakpoints=()) -> np.ndarray:
    """Uniform panel edges on [a, b] merged with interior breakpoints."""
    edges = np.linspace(a, b, panels + 1)
    extra = [p for p in breakpoints if a < p < b]
    if extra:
        edges = np.unique(np.concatenate([edges, extra]))
    return edges


def quadratic_extrapolate(ts, vs, t: float) -> float:
    """Evaluate the parabola through three points at ``t`` (Lagrange form)."""
    t0, t1, t2 = ts
    v0, v1, v2 = vs
    l0 = (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2))
    l1 = (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2))
    l2 = (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1))
    return float(v0 * l0 + v1 * l1 + v2 * l2)


def count_sign_changes(values: np.ndarray) -> int:
    """Number of sign changes, skipping exact zeros and non-finite samples."""
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v) & (v != 0.0)]
    if v.size < 2:
        return 0
    return int(np.count_nonzero(np.signbit(v[1:]) != np.signbit(v[:-1])))


def central_difference(values: np.ndarray, h: float) -> np.ndarray:
    """Second-order central differences at interior points."""
    return (values[2:] - values[:-2]) / (2.0 * h)


def five_point_derivative(func, t: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central finite-difference derivative of a callable."""
    return (
        -func(t + 2 * h) + 8 * func(t + h) - 8 * func(t - h) + func(t - 2 * h)
    ) / (12.0 * h)
