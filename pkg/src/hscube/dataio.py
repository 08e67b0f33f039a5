"""File formats: the HSCB cube container, annotations, manifests, registry.

HSCB container (all little-endian)::

    magic   4 bytes  b"HSCB"
    version u16      currently 1
    camera  u16 length + that many UTF-8 bytes (profile name)
    height  u32
    width   u32
    bands   u32
    wavelengths  bands x float64
    payload      height*width*bands x float32, band-interleaved by pixel
                 (i.e. C-order H x W x C)

The payload is float32: values that are not float32-representable are
rounded on write, so bit-exact round-trips hold for float32-valued data.
Reads fail with :class:`FormatError` on a bad magic/version and with
:class:`CorruptionError` (naming expected vs actual byte counts) on
truncation.

Annotations are sparse text, one ``row,col,class_id`` record per line —
the datasets this serves are partially labelled, and sparse text mirrors
that.  Manifests are tab-separated lines
``image_id<TAB>cube_path<TAB>annotation_path<TAB>camera[<TAB>split]``
with paths resolved relative to the manifest file.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cube import CameraProfile, SpectralCube, camera_by_name, clamp_reflectance

log = logging.getLogger(__name__)

HSCB_MAGIC = b"HSCB"
HSCB_VERSION = 1

SPLIT_TAGS = ("train", "test", "none")


class FormatError(ValueError):
    """The file is not an HSCB container (or an unsupported version)."""


class CorruptionError(ValueError):
    """The file is an HSCB container but its payload is damaged."""


# Class registry: 35 classes, ordered by annotated-pixel count (descending).
CLASS_NAMES = (
    "Skin",
    "Out of focus area",
    "Oral mucosa",
    "Enamel",
    "Tongue",
    "Lip",
    "Hard palate",
    "Specular reflection",
    "Attached gingiva",
    "Soft palate",
    "Hair",
    "Marginal gingiva",
    "Prosthetics",
    "Shadow/Noise",
    "Plastic",
    "Metal",
    "Gingivitis",
    "Attrition/Erosion",
    "Inflammation",
    "Pigmentation",
    "Calculus",
    "Initial caries",
    "Stain",
    "Fluorosis",
    "Microfracture",
    "Root",
    "Plaque",
    "Dentine caries",
    "Ulcer",
    "Leukoplakia",
    "Blood vessel",
    "Mole",
    "Malignant lesion",
    "Fibroma",
    "Makeup",
)

# The tissue classes with at least 1M annotated pixels; all reported
# metrics restrict to these.
REPORTING_CLASS_NAMES = (
    "Skin",
    "Oral mucosa",
    "Enamel",
    "Tongue",
    "Lip",
    "Hard palate",
    "Attached gingiva",
    "Soft palate",
    "Hair",
)


@dataclass(frozen=True)
class ClassRegistry:
    """Ordered class-id/name mapping plus the metric reporting subset."""

    names: tuple[str, ...] = CLASS_NAMES
    reporting_names: tuple[str, ...] = REPORTING_CLASS_NAMES

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("class names must be unique")
        missing = [n for n in self.reporting_names if n not in self.names]
        if missing:
            raise ValueError(f"reporting classes not in registry: {missing}")

    def __len__(self) -> int:
        return len(self.names)

    @property
    def class_ids(self) -> range:
        return range(len(self.names))

    def name_of(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.names):
            raise ValueError(f"class id {class_id} outside registry (0..{len(self) - 1})")
        return self.names[class_id]

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValueError(f"unknown class name {name!r}") from None

    @property
    def reporting_ids(self) -> tuple[int, ...]:
        return tuple(self.names.index(n) for n in self.reporting_names)


DEFAULT_REGISTRY = ClassRegistry()


@dataclass(frozen=True)
class AnnotatedImage:
    """A cube on disk plus its sparse per-pixel class labels."""

    image_id: str
    cube_path: Path
    annotation_path: Path
    camera: CameraProfile
    labels: dict[int, int] = field(default_factory=dict)
    split: str = "none"

    def __post_init__(self):
        if self.split not in SPLIT_TAGS:
            raise ValueError(f"split must be one of {SPLIT_TAGS}, got {self.split!r}")

    def with_split(self, split: str) -> "AnnotatedImage":
        return replace(self, split=split)

    @property
    def class_ids_present(self) -> frozenset[int]:
        return frozenset(self.labels.values())


# ---------------------------------------------------------------------------
# HSCB container
# ---------------------------------------------------------------------------

def write_cube(path, cube: SpectralCube) -> None:
    """Serialize a cube; the payload is stored as float32."""
    name = cube.camera.name.encode("utf-8")
    header = struct.pack("<4sH", HSCB_MAGIC, HSCB_VERSION)
    header += struct.pack("<H", len(name)) + name
    header += struct.pack("<III", cube.height, cube.width, cube.band_count)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(cube.band_wavelengths_nm, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(cube.data, dtype="<f4").tobytes())


class _Cursor:
    """File cursor that reports truncation with exact byte counts."""

    def __init__(self, fh):
        self.fh = fh
        self.offset = 0

    def take(self, count: int, what: str) -> bytes:
        chunk = self.fh.read(count)
        if len(chunk) != count:
            raise CorruptionError(
                f"truncated while reading {what}: expected {self.offset + count} "
                f"bytes (offset {self.offset} + {count}), file ends after "
                f"{self.offset + len(chunk)}"
            )
        self.offset += count
        return chunk

    def expect_eof(self) -> None:
        extra = self.fh.read()
        if extra:
            raise CorruptionError(
                f"{len(extra)} trailing bytes after payload "
                f"(expected file size {self.offset})"
            )


@dataclass(frozen=True)
class CubeHeader:
    camera_name: str
    height: int
    width: int
    band_count: int
    wavelengths_nm: np.ndarray


def _read_header(cursor: _Cursor) -> CubeHeader:
    magic, version = struct.unpack("<4sH", cursor.take(6, "magic/version"))
    if magic != HSCB_MAGIC:
        raise FormatError(f"bad magic {magic!r}; not an HSCB container")
    if version != HSCB_VERSION:
        raise FormatError(f"unsupported HSCB version {version}")
    (name_len,) = struct.unpack("<H", cursor.take(2, "camera name length"))
    try:
        name = cursor.take(name_len, "camera name").decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"camera name is not valid UTF-8: {exc}") from None
    height, width, bands = struct.unpack("<III", cursor.take(12, "dimensions"))
    if height == 0 or width == 0 or bands == 0:
        raise FormatError(f"degenerate dimensions {height}x{width}x{bands}")
    wavelengths = np.frombuffer(
        cursor.take(8 * bands, f"{bands} wavelengths"), dtype="<f8"
    )
    return CubeHeader(name, height, width, bands, wavelengths)


def read_cube_header(path) -> CubeHeader:
    """Parse just the container header (cheap; payload is not read)."""
    with open(path, "rb") as fh:
        return _read_header(_Cursor(fh))


def read_cube(path) -> SpectralCube:
    """Read a cube, clamping any out-of-range reflectances on ingest."""
    with open(path, "rb") as fh:
        cursor = _Cursor(fh)
        header = _read_header(cursor)
        count = header.height * header.width * header.band_count
        payload = np.frombuffer(
            cursor.take(4 * count, f"{count} reflectances"), dtype="<f4"
        )
        cursor.expect_eof()
    try:
        camera = camera_by_name(header.camera_name)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    data = payload.astype(np.float64).reshape(
        header.height, header.width, header.band_count
    )
    data, clamped = clamp_reflectance(data)
    return SpectralCube(
        data=data,
        band_wavelengths_nm=header.wavelengths_nm.astype(np.float64),
        camera=camera,
        clamped_values=clamped,
    )


# ---------------------------------------------------------------------------
# Annotations
# ---------------------------------------------------------------------------

def read_annotation(path, registry: ClassRegistry, height: int, width: int) -> dict[int, int]:
    """Parse a sparse ``row,col,class_id`` annotation file.

    Returns a flat-pixel-index -> class-id map.  Duplicate pixels keep the
    last record (logged); malformed lines and unknown classes raise with
    the offending line number.
    """
    labels: dict[int, int] = {}
    duplicates = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'row,col,class_id', got {line!r}")
            try:
                row, col, class_id = (int(p) for p in parts)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer field in {line!r}") from None
            if not (0 <= row < height and 0 <= col < width):
                raise ValueError(
                    f"{path}:{lineno}: pixel ({row}, {col}) outside {height}x{width} image"
                )
            if not 0 <= class_id < len(registry):
                raise ValueError(
                    f"{path}:{lineno}: class id {class_id} not in the "
                    f"{len(registry)}-class registry"
                )
            index = row * width + col
            if index in labels:
                duplicates += 1
            labels[index] = class_id
    if duplicates:
        log.warning("%s: %d duplicate pixel records (last record wins)", path, duplicates)
    return labels


def write_annotation(path, labels: dict[int, int], width: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for index in sorted(labels):
            fh.write(f"{index // width},{index % width},{labels[index]}\n")


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------

def load_manifest(path, registry: ClassRegistry = DEFAULT_REGISTRY,
                  load_labels: bool = True) -> list[AnnotatedImage]:
    """Load a manifest file into annotated-image descriptors.

    With ``load_labels`` the annotation files are parsed (and validated
    against each cube's header dimensions); otherwise ``labels`` is empty.
    """
    base = Path(path).parent
    images: list[AnnotatedImage] = []
    seen_ids: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in (4, 5):
                raise ValueError(
                    f"{path}:{lineno}: expected 4 or 5 tab-separated fields, got {len(parts)}"
                )
            image_id, cube_rel, ann_rel, camera_name = parts[:4]
            split = parts[4] if len(parts) == 5 else "none"
            if split not in SPLIT_TAGS:
                raise ValueError(f"{path}:{lineno}: unknown split tag {split!r}")
            if image_id in seen_ids:
                raise ValueError(f"{path}:{lineno}: duplicate image id {image_id!r}")
            seen_ids.add(image_id)
            cube_path = (base / cube_rel).resolve()
            ann_path = (base / ann_rel).resolve()
            camera = camera_by_name(camera_name)
            labels: dict[int, int] = {}
            if load_labels:
                header = read_cube_header(cube_path)
                labels = read_annotation(ann_path, registry, header.height, header.width)
            images.append(AnnotatedImage(
                image_id=image_id, cube_path=cube_path, annotation_path=ann_path,
                camera=camera, labels=labels, split=split,
            ))
    return images


def save_manifest(path, images: list[AnnotatedImage]) -> None:
    """Write a manifest (always with the split column)."""
    base = Path(path).resolve().parent
    with open(path, "w", encoding="utf-8") as fh:
        for image in images:
            cube_rel = _relative_if_possible(image.cube_path, base)
            ann_rel = _relative_if_possible(image.annotation_path, base)
            fh.write(
                f"{image.image_id}\t{cube_rel}\t{ann_rel}\t{image.camera.name}\t{image.split}\n"
            )


def _relative_if_possible(target: Path, base: Path) -> str:
    try:
        return str(Path(target).resolve().relative_to(base))
    except ValueError:
        return str(target)


# ---------------------------------------------------------------------------
# Census
# ---------------------------------------------------------------------------

def class_pixel_census(
    images: list[AnnotatedImage], registry: ClassRegistry = DEFAULT_REGISTRY,
) -> dict[int, tuple[int, int]]:
    """Per-class (pixel_count, image_count) over every annotated pixel."""
    pixel_counts = {cid: 0 for cid in registry.class_ids}
    image_counts = {cid: 0 for cid in registry.class_ids}
    for image in images:
        present: set[int] = set()
        for class_id in image.labels.values():
            if class_id not in pixel_counts:
                raise ValueError(
                    f"image {image.image_id}: class id {class_id} not in registry"
                )
            pixel_counts[class_id] += 1
            present.add(class_id)
        for class_id in present:
            image_counts[class_id] += 1
    return {cid: (pixel_counts[cid], image_counts[cid]) for cid in registry.class_ids}
