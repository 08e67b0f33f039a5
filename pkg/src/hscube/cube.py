"""Hyperspectral cube model, camera profiles, regridding, and RGB rendering.

Two camera profiles are built in:

* ``NuanceEX`` — 51 bands, 450-950 nm in 10 nm steps.
* ``SpecimIQ`` — 204 bands, 400-1000 nm, evenly spaced (about 2.96 nm).

Cubes from either camera can be resampled onto the shared 170-band grid
covering 450-950 nm (inclusive endpoints, step 500/169 nm), which is what
spectral classifiers consume.  RGB rendering always runs on camera-native
bands, because the observer fold correction is defined relative to the
native captured range; resample after rendering, never before.

Per-pixel work (rendering) is embarrassingly parallel; the worker count is
capped by the ``HSCB_THREADS`` environment variable (0 or unset = auto).
Partitioning never changes results: each pixel's arithmetic is independent
and outputs are written to disjoint slices.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import colorimetry
from .colorimetry import CameraRangeSpec
from .spectra import linear_resample, trapz_values

log = logging.getLogger(__name__)

COMMON_GRID_SIZE = 170
COMMON_GRID_MIN_NM = 450.0
COMMON_GRID_MAX_NM = 950.0

# Pixel chunk below which threading is pure overhead.
_MIN_PIXELS_PER_WORKER = 4096


@dataclass(frozen=True)
class CameraProfile:
    """A camera's band layout plus its captured-range description."""

    name: str
    band_wavelengths_nm: np.ndarray
    range_spec: CameraRangeSpec

    def __post_init__(self):
        bands = np.asarray(self.band_wavelengths_nm, dtype=np.float64)
        if bands.ndim != 1 or bands.size < 2 or not np.all(np.diff(bands) > 0):
            raise ValueError("band wavelengths must be a strictly increasing 1-D grid")
        bands.setflags(write=False)
        object.__setattr__(self, "band_wavelengths_nm", bands)

    @property
    def band_count(self) -> int:
        return int(self.band_wavelengths_nm.size)


NUANCE_EX = CameraProfile(
    name="NuanceEX",
    band_wavelengths_nm=np.arange(450.0, 951.0, 10.0),
    range_spec=CameraRangeSpec(captured_min_nm=450.0, captured_max_nm=950.0),
)

SPECIM_IQ = CameraProfile(
    name="SpecimIQ",
    band_wavelengths_nm=np.linspace(400.0, 1000.0, 204),
    range_spec=CameraRangeSpec(captured_min_nm=400.0, captured_max_nm=1000.0),
)

CAMERA_PROFILES = {p.name: p for p in (NUANCE_EX, SPECIM_IQ)}


def camera_by_name(name: str) -> CameraProfile:
    try:
        return CAMERA_PROFILES[name]
    except KeyError:
        raise ValueError(
            f"unknown camera {name!r}; known: {sorted(CAMERA_PROFILES)}"
        ) from None


def common_grid() -> np.ndarray:
    """The shared 170-band wavelength grid, 450-950 nm inclusive."""
    grid = np.linspace(COMMON_GRID_MIN_NM, COMMON_GRID_MAX_NM, COMMON_GRID_SIZE)
    grid.setflags(write=False)
    return grid


@dataclass(frozen=True, eq=False)
class SpectralCube:
    """An H x W x C reflectance cube with per-band wavelengths.

    Reflectances live in [0, 1]; construction rejects values outside that
    range (ingest paths clamp first and count what they clamped).  Band
    wavelengths are either the camera's native grid or the common grid.
    """

    data: np.ndarray
    band_wavelengths_nm: np.ndarray
    camera: CameraProfile
    clamped_values: int = field(default=0, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        bands = np.asarray(self.band_wavelengths_nm, dtype=np.float64)
        if data.ndim != 3:
            raise ValueError(f"cube data must be H x W x C, got shape {data.shape}")
        if bands.ndim != 1 or bands.size != data.shape[2]:
            raise ValueError(
                f"band count {bands.size} does not match data depth {data.shape[2]}"
            )
        if bands.size < 2 or not np.all(np.diff(bands) > 0):
            raise ValueError("band wavelengths must be strictly increasing")
        if not np.all(np.isfinite(data)):
            raise ValueError("cube data must be finite")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("reflectance values must lie in [0, 1]; clamp on ingest")
        data.setflags(write=False)
        bands.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "band_wavelengths_nm", bands)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def band_count(self) -> int:
        return self.data.shape[2]


def clamp_reflectance(raw: np.ndarray) -> tuple[np.ndarray, int]:
    """Clamp raw reflectances into [0, 1], returning the clamped-entry count."""
    clamped = int(np.count_nonzero((raw < 0.0) | (raw > 1.0)))
    if clamped:
        log.warning("clamped %d reflectance values into [0, 1]", clamped)
    return np.clip(raw, 0.0, 1.0), clamped


def make_cube(raw: np.ndarray, camera: CameraProfile,
              band_wavelengths_nm: np.ndarray | None = None) -> SpectralCube:
    """Build a cube from raw data, clamping out-of-range reflectances."""
    bands = camera.band_wavelengths_nm if band_wavelengths_nm is None else band_wavelengths_nm
    data, clamped = clamp_reflectance(np.asarray(raw, dtype=np.float64))
    return SpectralCube(data=data, band_wavelengths_nm=bands, camera=camera,
                        clamped_values=clamped)


def resample_cube(cube: SpectralCube, grid_nm: np.ndarray | None = None) -> SpectralCube:
    """Linearly resample every pixel spectrum onto ``grid_nm``.

    Defaults to the common 170-band grid.  The cube's bands must cover the
    grid range (no extrapolation at cube level); camera provenance is kept.
    """
    grid = common_grid() if grid_nm is None else np.asarray(grid_nm, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("resample grid must not be empty")
    bands = cube.band_wavelengths_nm
    if grid[0] < bands[0] or grid[-1] > bands[-1]:
        raise ValueError(
            f"cube bands [{bands[0]:g}, {bands[-1]:g}] nm do not cover "
            f"grid [{grid[0]:g}, {grid[-1]:g}] nm"
        )
    values = linear_resample(bands, cube.data, grid)
    # Convex combinations of in-range values can poke past the bounds by an
    # ulp; clip so the [0, 1] cube invariant survives round-off.
    values = np.clip(values, 0.0, 1.0)
    return SpectralCube(data=values, band_wavelengths_nm=grid, camera=cube.camera,
                        clamped_values=cube.clamped_values)


def resolve_workers(pixel_count: int) -> int:
    """Worker count for per-pixel work, honoring the HSCB_THREADS cap."""
    raw = os.environ.get("HSCB_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"HSCB_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise ValueError(f"HSCB_THREADS must be >= 0, got {cap}")
    if cap == 0:
        cap = os.cpu_count() or 1
    by_size = max(1, pixel_count // _MIN_PIXELS_PER_WORKER)
    return max(1, min(cap, by_size))


def render_rgb(cube: SpectralCube, correct: bool = True) -> tuple[np.ndarray, int]:
    """Render an H x W x 3 gamma-encoded image from a camera-native cube.

    Applies the per-pixel reconstruction pipeline (fold-corrected observer
    unless ``correct`` is False) to every pixel.  Returns the image in
    [0, 1] plus the total count of clipped linear channels.
    """
    cmf = colorimetry.builtin_cmf()
    if correct:
        cmf = colorimetry.fold_correct_cmf(cmf, cube.camera.range_spec)
    illuminant = colorimetry.builtin_d65()
    bands = cube.band_wavelengths_nm
    weights = colorimetry.xyz_weights(bands, cmf, illuminant)

    h, w = cube.height, cube.width
    flat = cube.data.reshape(h * w, cube.band_count)
    out = np.empty((h * w, 3), dtype=np.float64)
    clipped_per_chunk: dict[int, int] = {}

    def run_chunk(chunk_id: int, start: int, stop: int) -> None:
        rows = flat[start:stop]
        xyz = np.empty((rows.shape[0], 3), dtype=np.float64)
        for k in range(3):
            xyz[:, k] = trapz_values(bands, rows * weights[k])
        rgb, clipped = colorimetry.linear_rgb_array(xyz)
        out[start:stop] = colorimetry.gamma_encode_array(rgb)
        clipped_per_chunk[chunk_id] = clipped

    workers = resolve_workers(h * w)
    bounds = np.linspace(0, h * w, workers + 1).astype(int)
    chunks = [(i, int(bounds[i]), int(bounds[i + 1])) for i in range(workers)]
    if workers == 1:
        run_chunk(*chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda args: run_chunk(*args), chunks))
    return out.reshape(h, w, 3), sum(clipped_per_chunk.values())


@dataclass(frozen=True)
class PixelDataset:
    """Flat table of annotated pixels: one feature row and class id per pixel."""

    features: np.ndarray
    class_ids: np.ndarray
    image_ids: tuple[str, ...]
    image_index: np.ndarray

    def __post_init__(self):
        rows = self.features.shape[0]
        if not (rows == self.class_ids.shape[0] == self.image_index.shape[0]):
            raise ValueError("features, class_ids, and image_index must align")

    @property
    def feature_width(self) -> int:
        return int(self.features.shape[1])


PIXEL_MODES = ("rgbpixel", "spixel")


def pixel_features_for_cube(cube: SpectralCube, mode: str) -> np.ndarray:
    """Per-pixel feature matrix (H*W, F) for one cube in the given mode.

    ``rgbpixel`` renders the camera-native cube to gamma-encoded RGB
    (3 features); ``spixel`` resamples onto the common grid (170 features).
    """
    if mode == "rgbpixel":
        rgb, _ = render_rgb(cube)
        return rgb.reshape(-1, 3)
    if mode == "spixel":
        resampled = resample_cube(cube)
        return resampled.data.reshape(-1, resampled.band_count)
    raise ValueError(f"unknown pixel mode {mode!r}; expected one of {PIXEL_MODES}")


def extract_pixel_dataset(images, mode: str) -> PixelDataset:
    """Gather every annotated pixel of every image into one labeled table.

    ``images`` is an iterable of annotated-image descriptors (see
    :mod:`hscube.dataio`); their cubes are loaded from disk.  Images with no
    annotated pixels are skipped with a warning.  Row order is deterministic:
    images in input order, pixels by flat index.
    """
    from . import dataio  # deferred: dataio builds on this module

    if mode not in PIXEL_MODES:
        raise ValueError(f"unknown pixel mode {mode!r}; expected one of {PIXEL_MODES}")
    feature_blocks = []
    class_blocks = []
    index_blocks = []
    image_ids = []
    for image in images:
        if not image.labels:
            log.warning("image %s has no annotated pixels; skipped", image.image_id)
            continue
        cube = dataio.read_cube(image.cube_path)
        features = pixel_features_for_cube(cube, mode)
        pixel_idx = np.fromiter(sorted(image.labels), dtype=np.int64)
        if pixel_idx[-1] >= features.shape[0]:
            raise ValueError(
                f"image {image.image_id}: label index {int(pixel_idx[-1])} "
                f"outside {features.shape[0]} pixels"
            )
        feature_blocks.append(features[pixel_idx])
        class_blocks.append(
            np.array([image.labels[int(i)] for i in pixel_idx], dtype=np.int64)
        )
        index_blocks.append(np.full(pixel_idx.size, len(image_ids), dtype=np.int64))
        image_ids.append(image.image_id)
    if not feature_blocks:
        raise ValueError("no annotated pixels in any image")
    return PixelDataset(
        features=np.concatenate(feature_blocks),
        class_ids=np.concatenate(class_blocks),
        image_ids=tuple(image_ids),
        image_index=np.concatenate(index_blocks),
    )
