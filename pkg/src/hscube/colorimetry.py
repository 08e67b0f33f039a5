"""Spectral-to-sRGB colorimetry with compensation for missing camera bands.

The conversion chain is:

1. *Observer correction* — cameras whose captured range starts above the
   380 nm observer-table start lose tristimulus weight, which tints their
   reconstructions (most visibly a yellow cast from lost blue weight).
   :func:`fold_correct_cmf` compensates by mirroring each matching function
   over the capture boundary ``L`` and adding the reflected lobe:
   ``c_n(w) = c(w) + c(2L - w)`` for ``L <= w <= 2L - 380``, unchanged
   elsewhere.

2. *Tristimulus integration* — ``X = (1/N) integral(x_n * f * g)`` and
   likewise Y, Z, with ``f`` the per-pixel reflectance, ``g`` the D65
   illuminant, and ``N = integral(y * g)`` taken with the *original*
   luminance curve.  All integrals use the trapezoidal rule with the image
   band wavelengths as sample points; tabulated curves are interpolated to
   those points with the shape-preserving cubic from :mod:`hscube.spectra`
   and treated as zero outside their tabulated support.

3. *Linear sRGB* — fixed 3x3 matrix, channels clipped to [0, 1] (the count
   of clipped channels is reported to the caller).

4. *Gamma* — ``12.92 x`` below the 0.0031308 knee, else
   ``1.055 x**0.416 - 0.055``.  Note the 0.416 exponent: the two branches
   meet only within 5e-4 at the knee, and that mismatch is asserted as a
   bound, not removed.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from . import ciedata
from .spectra import Interpolant, SampledSpectrum, pchip_fit, trapz_values

LABEL_ORIGINAL = "original"
LABEL_CORRECTED_NUANCE_EX = "corrected-nuance-ex"
LABEL_CORRECTED_SPECIM_IQ = "corrected-specim-iq"

# CMF support start; the fold mirrors the missing [380, L) range.
REFERENCE_MIN_NM = 380.0

# XYZ -> linear sRGB.
XYZ_TO_LINEAR_RGB = np.array([
    [+3.2406255, -1.5372080, -0.4986286],
    [-0.9689307, +1.8757561, +0.0415175],
    [+0.0557101, -0.2040211, +1.0569959],
])
XYZ_TO_LINEAR_RGB.setflags(write=False)

GAMMA_KNEE = 0.0031308
GAMMA_EXPONENT = 0.416


@dataclass(frozen=True)
class CmfSet:
    """The three color-matching channels on one shared wavelength grid."""

    x_bar: SampledSpectrum
    y_bar: SampledSpectrum
    z_bar: SampledSpectrum
    label: str = LABEL_ORIGINAL

    def __post_init__(self):
        grids = [self.x_bar.wavelengths_nm, self.y_bar.wavelengths_nm,
                 self.z_bar.wavelengths_nm]
        if not (np.array_equal(grids[0], grids[1]) and np.array_equal(grids[0], grids[2])):
            raise ValueError("CMF channels must share one wavelength grid")
        for name, ch in (("x_bar", self.x_bar), ("y_bar", self.y_bar),
                         ("z_bar", self.z_bar)):
            if np.any(ch.values < 0):
                raise ValueError(f"{name} values must be non-negative")

    @property
    def wavelengths_nm(self) -> np.ndarray:
        return self.x_bar.wavelengths_nm


@dataclass(frozen=True)
class Illuminant:
    """Relative spectral power distribution of a light source."""

    spd: SampledSpectrum
    name: str = "D65"

    def __post_init__(self):
        if np.any(self.spd.values < 0):
            raise ValueError("illuminant power must be non-negative")


@dataclass(frozen=True)
class XyzColor:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


@dataclass(frozen=True)
class RgbColor:
    """An RGB triplet; ``linear`` distinguishes pre- from post-gamma values."""

    r: float
    g: float
    b: float
    linear: bool

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.g, self.b])


@dataclass(frozen=True)
class CameraRangeSpec:
    """Captured wavelength range of a camera, against the observer start."""

    captured_min_nm: float
    captured_max_nm: float
    reference_min_nm: float = REFERENCE_MIN_NM

    def __post_init__(self):
        if self.captured_max_nm <= self.captured_min_nm:
            raise ValueError("captured_max_nm must exceed captured_min_nm")

    @property
    def missing_low_range(self) -> bool:
        return self.captured_min_nm > self.reference_min_nm


@functools.lru_cache(maxsize=1)
def builtin_cmf() -> CmfSet:
    """The embedded CIE 1931 2-degree observer (380-830 nm, 5 nm)."""
    w = ciedata.CIE_WAVELENGTHS_NM
    return CmfSet(
        x_bar=SampledSpectrum(w, ciedata.CIE1931_XBAR),
        y_bar=SampledSpectrum(w, ciedata.CIE1931_YBAR),
        z_bar=SampledSpectrum(w, ciedata.CIE1931_ZBAR),
        label=LABEL_ORIGINAL,
    )


@functools.lru_cache(maxsize=1)
def builtin_d65() -> Illuminant:
    """The embedded D65 daylight illuminant (380-830 nm, 100.0 at 560 nm)."""
    return Illuminant(
        spd=SampledSpectrum(ciedata.CIE_WAVELENGTHS_NM, ciedata.D65_SPD),
        name="D65",
    )


def _corrected_label(camera: CameraRangeSpec) -> str:
    if camera.captured_min_nm == 450.0:
        return LABEL_CORRECTED_NUANCE_EX
    if camera.captured_min_nm == 400.0:
        return LABEL_CORRECTED_SPECIM_IQ
    return f"corrected-from-{camera.captured_min_nm:g}nm"


def fold_correct_cmf(cmf: CmfSet, camera: CameraRangeSpec) -> CmfSet:
    """Mirror each matching function over the capture boundary and add it.

    With ``L = camera.captured_min_nm``, every channel becomes
    ``c(w) + c(2L - w)`` inside the fold window ``[L, 2L - 380]`` and stays
    unchanged outside it.  Grid points below ``L`` are retained; cubes that
    lack those bands simply never sample them.  A camera whose range starts
    at or below the observer start needs no compensation and is returned
    unchanged.
    """
    if cmf.label != LABEL_ORIGINAL:
        raise ValueError("fold correction must start from the original CMF set")
    if not camera.missing_low_range:
        return cmf

    low = camera.captured_min_nm
    high = 2.0 * low - camera.reference_min_nm
    grid = cmf.wavelengths_nm
    window = (grid >= low) & (grid <= high)
    mirrored = 2.0 * low - grid[window]

    def correct(channel: SampledSpectrum) -> SampledSpectrum:
        values = channel.values.copy()
        interp = pchip_fit(channel)
        values[window] += interp(mirrored)
        return SampledSpectrum(grid, values)

    return CmfSet(
        x_bar=correct(cmf.x_bar),
        y_bar=correct(cmf.y_bar),
        z_bar=correct(cmf.z_bar),
        label=_corrected_label(camera),
    )


def _interp_zero_padded(interp: Interpolant, points: np.ndarray) -> np.ndarray:
    """Evaluate a tabulated curve at ``points``, zero outside its support."""
    lo, hi = interp.nodes.support
    out = np.zeros(points.shape, dtype=np.float64)
    inside = (points >= lo) & (points <= hi)
    if np.any(inside):
        out[inside] = interp(points[inside])
    return out


def xyz_weights(
    band_wavelengths_nm: np.ndarray,
    cmf: CmfSet,
    illuminant: Illuminant,
    normalize_with_corrected: bool = False,
) -> np.ndarray:
    """Per-band integrand weights ``c_n(w) * g(w) / N`` for X, Y, Z.

    Returns a (3, C) array; the tristimulus of a reflectance row ``f`` is
    the trapezoidal integral of ``weights * f`` over the band wavelengths.
    The normalizer ``N`` integrates the *original* luminance curve against
    the illuminant on the same sample points (``normalize_with_corrected``
    switches it to the corrected curve for sensitivity experiments).
    """
    bands = np.asarray(band_wavelengths_nm, dtype=np.float64)
    g = _interp_zero_padded(pchip_fit(illuminant.spd), bands)
    original_y = builtin_cmf().y_bar
    norm_channel = cmf.y_bar if normalize_with_corrected else original_y
    n = float(trapz_values(bands, _interp_zero_padded(pchip_fit(norm_channel), bands) * g))
    if n <= 0.0:
        raise ValueError("normalizer integral is not positive on these bands")
    rows = [
        _interp_zero_padded(pchip_fit(channel), bands) * g / n
        for channel in (cmf.x_bar, cmf.y_bar, cmf.z_bar)
    ]
    return np.stack(rows)


def spectra_to_xyz_array(
    band_wavelengths_nm: np.ndarray,
    reflectances: np.ndarray,
    cmf: CmfSet,
    illuminant: Illuminant,
    normalize_with_corrected: bool = False,
) -> np.ndarray:
    """Tristimulus values for a batch of reflectance rows (..., C) -> (..., 3)."""
    bands = np.asarray(band_wavelengths_nm, dtype=np.float64)
    refl = np.asarray(reflectances, dtype=np.float64)
    if refl.shape[-1] != bands.size:
        raise ValueError(
            f"reflectance rows have {refl.shape[-1]} bands, expected {bands.size}"
        )
    if bands.size < 2:
        raise ValueError("tristimulus integration needs at least 2 bands")
    weights = xyz_weights(bands, cmf, illuminant, normalize_with_corrected)
    out = np.empty(refl.shape[:-1] + (3,), dtype=np.float64)
    for k in range(3):
        out[..., k] = trapz_values(bands, refl * weights[k])
    return out


def spectrum_to_xyz(
    reflectance: SampledSpectrum,
    cmf: CmfSet,
    illuminant: Illuminant,
    normalize_with_corrected: bool = False,
) -> XyzColor:
    """Tristimulus integration of one reflectance spectrum."""
    xyz = spectra_to_xyz_array(
        reflectance.wavelengths_nm,
        reflectance.values[np.newaxis, :],
        cmf,
        illuminant,
        normalize_with_corrected,
    )[0]
    return XyzColor(x=float(xyz[0]), y=float(xyz[1]), z=float(xyz[2]))


def linear_rgb_array(xyz: np.ndarray) -> tuple[np.ndarray, int]:
    """Apply the sRGB matrix and clip to [0, 1]; returns (rgb, clipped count)."""
    rgb = np.asarray(xyz, dtype=np.float64) @ XYZ_TO_LINEAR_RGB.T
    clipped = int(np.count_nonzero((rgb < 0.0) | (rgb > 1.0)))
    return np.clip(rgb, 0.0, 1.0), clipped


def xyz_to_linear_rgb(xyz: XyzColor) -> tuple[RgbColor, int]:
    """Convert one XYZ color to clipped linear sRGB, reporting clipped channels."""
    rgb, clipped = linear_rgb_array(xyz.as_array())
    return RgbColor(r=float(rgb[0]), g=float(rgb[1]), b=float(rgb[2]), linear=True), clipped


def gamma_encode_array(channels: np.ndarray) -> np.ndarray:
    """Gamma transfer applied elementwise to values already in [0, 1]."""
    x = np.asarray(channels, dtype=np.float64)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ValueError("gamma_encode input must lie in [0, 1]")
    return np.where(
        x <= GAMMA_KNEE,
        12.92 * x,
        1.055 * np.power(x, GAMMA_EXPONENT) - 0.055,
    )


def gamma_encode(channel: float) -> float:
    """Gamma transfer for one linear channel value in [0, 1]."""
    return float(gamma_encode_array(np.asarray(channel, dtype=np.float64)))


def reconstruct_rgb_pixel(
    reflectance: SampledSpectrum,
    camera: CameraRangeSpec,
    correct: bool = True,
) -> tuple[RgbColor, int]:
    """Full reflectance-to-display pipeline for a single pixel.

    Fold-corrects the observer for the camera's missing range (unless
    ``correct`` is False, the uncorrected baseline), integrates to XYZ under
    D65, converts to clipped linear sRGB, and gamma-encodes.  Returns the
    encoded color and the number of clipped channels.
    """
    cmf = builtin_cmf()
    if correct:
        cmf = fold_correct_cmf(cmf, camera)
    xyz = spectrum_to_xyz(reflectance, cmf, builtin_d65())
    linear, clipped = xyz_to_linear_rgb(xyz)
    encoded = gamma_encode_array(linear.as_array())
    return (
        RgbColor(r=float(encoded[0]), g=float(encoded[1]), b=float(encoded[2]), linear=False),
        clipped,
    )
