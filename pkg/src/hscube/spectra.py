"""Wavelength-sampled spectral functions and the numerics they need.

A :class:`SampledSpectrum` pairs a strictly increasing wavelength grid with
one value per wavelength (reflectance, observer weight, or illuminant
power).  On top of that this module provides the three numerical workhorses
used by every colorimetric integral in the package:

* shape-preserving piecewise-cubic interpolation (:func:`pchip_fit`),
* piecewise-linear regridding with endpoint clamping
  (:func:`resample_to_grid`),
* composite trapezoidal quadrature (:func:`trapz`).

Cubic interpolation never extrapolates: evaluating outside the node range
raises :class:`OutOfRangeError`, and callers that need totality must clamp
or zero-pad explicitly.  Linear regridding, by contrast, clamps to the
endpoint values so that band resampling is total.

All arithmetic is double precision throughout; all types are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class OutOfRangeError(ValueError):
    """Evaluation requested outside the interpolant's node range."""


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SampledSpectrum:
    """A real function sampled on a strictly increasing wavelength grid (nm)."""

    wavelengths_nm: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = _as_float_array(self.wavelengths_nm, "wavelengths_nm")
        v = _as_float_array(self.values, "values")
        if w.size == 0:
            raise ValueError("spectrum must contain at least one sample")
        if v.shape != w.shape:
            raise ValueError(
                f"values length {v.size} does not match wavelengths length {w.size}"
            )
        if not np.all(np.isfinite(w)):
            raise ValueError("wavelengths_nm must be finite")
        if not np.all(np.isfinite(v)):
            raise ValueError("values must be finite")
        if w.size > 1 and not np.all(np.diff(w) > 0):
            raise ValueError("wavelengths_nm must be strictly increasing")
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "wavelengths_nm", w)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.wavelengths_nm.size)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.wavelengths_nm[0]), float(self.wavelengths_nm[-1])


@dataclass(frozen=True)
class Interpolant:
    """Piecewise-cubic interpolant through the nodes of a spectrum.

    ``coefficients[i]`` holds ``(c3, c2, c1, c0)`` for interval ``i``; the
    value at wavelength ``w`` inside that interval is the cubic in the local
    coordinate ``t = w - wavelengths[i]``.  Construct via :func:`pchip_fit`.
    """

    nodes: SampledSpectrum
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        coef = np.asarray(self.coefficients, dtype=np.float64)
        n = len(self.nodes)
        if coef.shape != (n - 1, 4):
            raise ValueError(f"expected coefficient shape {(n - 1, 4)}, got {coef.shape}")
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)

    def __call__(self, wavelength_nm):
        return evaluate(self, wavelength_nm)


def _pchip_slopes(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Shape-preserving node derivatives.

    Interior nodes use the weighted harmonic mean of adjacent secants and a
    zero slope wherever the data has a local extremum; the endpoints use the
    one-sided three-point formula, pulled back to zero or ``3*secant`` when
    it would break shape preservation.
    """
    h = np.diff(x)
    delta = np.diff(y) / h
    d = np.zeros_like(y)

    if len(y) == 2:
        d[:] = delta[0]
        return d

    # Interior: harmonic mean weighted by interval lengths; zero at extrema.
    dl, dr = delta[:-1], delta[1:]
    hl, hr = h[:-1], h[1:]
    mask = (dl * dr) > 0
    w1 = 2.0 * hr + hl
    w2 = hr + 2.0 * hl
    with np.errstate(divide="ignore", invalid="ignore"):
        harmonic = (w1 + w2) / (w1 / dl + w2 / dr)
    d[1:-1] = np.where(mask, harmonic, 0.0)

    d[0] = _edge_slope(h[0], h[1], delta[0], delta[1])
    d[-1] = _edge_slope(h[-1], h[-2], delta[-1], delta[-2])
    return d


def _edge_slope(h0: float, h1: float, d0: float, d1: float) -> float:
    slope = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1)
    if np.sign(slope) != np.sign(d0):
        return 0.0
    if np.sign(d0) != np.sign(d1) and abs(slope) > 3.0 * abs(d0):
        return 3.0 * d0
    return slope


def pchip_fit(samples: SampledSpectrum) -> Interpolant:
    """Fit a monotonicity-preserving cubic Hermite interpolant.

    The interpolant reproduces the node values exactly, is C1 at interior
    nodes, and never overshoots locally monotone data.

    Raises:
        ValueError: fewer than 2 samples (non-increasing grids are already
            rejected by :class:`SampledSpectrum`).
    """
    if len(samples) < 2:
        raise ValueError("pchip_fit requires at least 2 samples")
    x = samples.wavelengths_nm
    y = samples.values
    h = np.diff(x)
    delta = np.diff(y) / h
    d = _pchip_slopes(x, y)

    # Hermite-to-power-basis per interval, local coordinate t = w - x[i].
    c0 = y[:-1]
    c1 = d[:-1]
    c2 = (3.0 * delta - 2.0 * d[:-1] - d[1:]) / h
    c3 = (d[:-1] + d[1:] - 2.0 * delta) / (h * h)
    coefficients = np.stack([c3, c2, c1, c0], axis=1)
    return Interpolant(nodes=samples, coefficients=coefficients)


def evaluate(interp: Interpolant, wavelength_nm):
    """Evaluate the interpolant at one wavelength or an array of them.

    Raises:
        OutOfRangeError: any requested wavelength lies outside the node
            range.  No extrapolation is ever performed.
    """
    x = interp.nodes.wavelengths_nm
    pts = np.asarray(wavelength_nm, dtype=np.float64)
    scalar = pts.ndim == 0
    pts = np.atleast_1d(pts)
    if pts.size and (pts.min() < x[0] or pts.max() > x[-1]):
        raise OutOfRangeError(
            f"wavelength outside interpolation range [{x[0]:g}, {x[-1]:g}] nm"
        )
    idx = np.clip(np.searchsorted(x, pts, side="right") - 1, 0, x.size - 2)
    t = pts - x[idx]
    c3, c2, c1, c0 = interp.coefficients[idx].T
    out = ((c3 * t + c2) * t + c1) * t + c0
    return float(out[0]) if scalar else out


def trapz(samples: SampledSpectrum) -> float:
    """Composite trapezoidal integral over the sampled range."""
    return float(
        trapz_values(samples.wavelengths_nm, samples.values)
    )


def trapz_values(wavelengths_nm: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Trapezoidal rule along the last axis of ``values``.

    Shared by the scalar and whole-cube integration paths so that both
    accumulate in exactly the same floating-point order.
    """
    dx = np.diff(wavelengths_nm)
    return np.sum(0.5 * (values[..., 1:] + values[..., :-1]) * dx, axis=-1)


def resample_to_grid(samples: SampledSpectrum, grid_nm) -> SampledSpectrum:
    """Piecewise-linear resampling onto a new wavelength grid.

    Grid points outside the sampled range take the nearest endpoint value
    (no linear extrapolation), which keeps band resampling total and
    range-preserving.

    Raises:
        ValueError: empty or non-increasing grid.
    """
    grid = _as_float_array(grid_nm, "grid_nm")
    if grid.size == 0:
        raise ValueError("resample grid must not be empty")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("resample grid must be strictly increasing")
    values = linear_resample(samples.wavelengths_nm, samples.values, grid)
    return SampledSpectrum(wavelengths_nm=grid, values=values)


def linear_resample(x: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Linear interpolation of ``values`` (last axis on ``x``) at ``grid``.

    Endpoint-clamped; vectorized over any leading axes, so a whole cube can
    be regridded in one call.
    """
    if x.size == 1:
        shape = values.shape[:-1] + (grid.size,)
        return np.broadcast_to(values[..., :1], shape).copy()
    idx = np.clip(np.searchsorted(x, grid, side="right") - 1, 0, x.size - 2)
    t = np.clip((grid - x[idx]) / (x[idx + 1] - x[idx]), 0.0, 1.0)
    return values[..., idx] * (1.0 - t) + values[..., idx + 1] * t
