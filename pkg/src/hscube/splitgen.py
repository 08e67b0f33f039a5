"""Seeded train/test split generation with a per-class validity guarantee.

A split is *valid* when every class that appears anywhere in the manifest
has at least one training image, so that inference can be run on images
containing any class.  Generation works in two phases:

1. For each class, in registry order, uniformly pick one image containing
   that class and tag it ``train``.  A class already covered by a tagged
   image keeps its coverage without picking.  One random draw is consumed
   per registry class regardless (even for absent or already-covered
   classes), so a given seed stays comparable across manifests.
2. Every remaining image is tagged ``test`` with probability ``p`` and
   ``train`` otherwise, in manifest order, one draw per image.

Randomness comes from NumPy's PCG64 stream seeded with ``SplitConfig.seed``;
each draw is one ``Generator.random()`` double in [0, 1).  Identical seeds
and manifests therefore reproduce identical splits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dataio import AnnotatedImage, ClassRegistry

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitConfig:
    seed: int = 0
    test_probability: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.test_probability < 1.0:
            raise ValueError(
                f"test_probability must lie in (0, 1), got {self.test_probability}"
            )


@dataclass(frozen=True)
class SplitReport:
    """Outcome of validating a tagged manifest."""

    train_count: int
    test_count: int
    untagged_count: int
    violations: tuple[int, ...]          # classes present somewhere but with no train image
    unrepresentable: tuple[int, ...]     # classes absent from the whole manifest
    absent_from_test: tuple[int, ...]    # represented classes with no test image
    test_fraction: float

    @property
    def valid(self) -> bool:
        return not self.violations


def generate_split(
    images: list[AnnotatedImage],
    registry: ClassRegistry,
    cfg: SplitConfig,
) -> list[AnnotatedImage]:
    """Tag every image ``train`` or ``test`` per the two-phase procedure."""
    if not images:
        raise ValueError("cannot split an empty manifest")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    tags: dict[str, str] = {}

    containing: dict[int, list[AnnotatedImage]] = {cid: [] for cid in registry.class_ids}
    for image in images:
        for class_id in image.class_ids_present:
            containing[class_id].append(image)

    for class_id in registry.class_ids:
        draw = rng.random()
        candidates = containing[class_id]
        if not candidates:
            log.warning(
                "class %r appears in no image; split cannot cover it",
                registry.name_of(class_id),
            )
            continue
        if any(tags.get(c.image_id) == "train" for c in candidates):
            continue
        pick = candidates[min(int(draw * len(candidates)), len(candidates) - 1)]
        tags[pick.image_id] = "train"

    for image in images:
        if image.image_id not in tags:
            tags[image.image_id] = "test" if rng.random() < cfg.test_probability else "train"

    tagged = [image.with_split(tags[image.image_id]) for image in images]
    if not any(t.split == "test" for t in tagged):
        log.warning("split produced an empty test set (%d images, all train)", len(tagged))
    return tagged


def validate_split(
    images: list[AnnotatedImage],
    registry: ClassRegistry,
) -> SplitReport:
    """Check the validity condition and summarize coverage (report only)."""
    train_classes: set[int] = set()
    test_classes: set[int] = set()
    present_classes: set[int] = set()
    train = test = untagged = 0
    for image in images:
        present_classes |= image.class_ids_present
        if image.split == "train":
            train += 1
            train_classes |= image.class_ids_present
        elif image.split == "test":
            test += 1
            test_classes |= image.class_ids_present
        else:
            untagged += 1
    violations = tuple(sorted(present_classes - train_classes))
    unrepresentable = tuple(sorted(set(registry.class_ids) - present_classes))
    absent_from_test = tuple(sorted(present_classes - test_classes))
    tagged = train + test
    return SplitReport(
        train_count=train,
        test_count=test,
        untagged_count=untagged,
        violations=violations,
        unrepresentable=unrepresentable,
        absent_from_test=absent_from_test,
        test_fraction=(test / tagged) if tagged else 0.0,
    )


def format_report(report: SplitReport, registry: ClassRegistry) -> str:
    """Human-readable split report."""
    lines = [
        f"train images:  {report.train_count}",
        f"test images:   {report.test_count}",
        f"untagged:      {report.untagged_count}",
        f"test fraction: {report.test_fraction:.4f}",
        f"valid:         {'yes' if report.valid else 'NO'}",
    ]
    if report.violations:
        names = ", ".join(registry.name_of(c) for c in report.violations)
        lines.append(f"classes with no train image: {names}")
    if report.unrepresentable:
        names = ", ".join(registry.name_of(c) for c in report.unrepresentable)
        lines.append(f"classes absent from manifest: {names}")
    if report.absent_from_test:
        names = ", ".join(registry.name_of(c) for c in report.absent_from_test)
        lines.append(f"classes absent from test set: {names}")
    return "\n".join(lines) + "\n"
