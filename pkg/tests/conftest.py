import numpy as np
import pytest

from hscube.cube import NUANCE_EX, SPECIM_IQ, make_cube
from hscube.dataio import DEFAULT_REGISTRY, write_annotation, write_cube


def synthetic_dataset(root, n_images=8, height=6, width=5, seed=0):
    """A small mixed-camera dataset with spectrally separable classes.

    Class k's pixels get flat reflectance 0.15*(k+1) plus a little noise, so
    a spectral classifier can actually learn them.  Uses three reporting
    classes plus one non-reporting class to exercise the exclusion rules.
    Returns the manifest path.
    """
    rng = np.random.default_rng(seed)
    skin = DEFAULT_REGISTRY.id_of("Skin")
    enamel = DEFAULT_REGISTRY.id_of("Enamel")
    tongue = DEFAULT_REGISTRY.id_of("Tongue")
    specular = DEFAULT_REGISTRY.id_of("Specular reflection")  # non-reporting
    class_levels = {skin: 0.15, enamel: 0.30, tongue: 0.45, specular: 0.60}

    lines = []
    for i in range(n_images):
        camera = SPECIM_IQ if i % 2 else NUANCE_EX
        image_id = f"img{i:02d}"
        data = rng.uniform(0.7, 0.8, (height, width, camera.band_count))
        labels = {}
        pixels = rng.choice(height * width, size=12, replace=False)
        for j, pixel in enumerate(pixels):
            class_id = list(class_levels)[j % len(class_levels)]
            level = class_levels[class_id]
            spectrum = np.clip(
                level + rng.normal(0.0, 0.01, camera.band_count), 0.0, 1.0)
            data[pixel // width, pixel % width] = spectrum
            labels[int(pixel)] = class_id
        write_cube(root / f"{image_id}.hscb", make_cube(data, camera))
        write_annotation(root / f"{image_id}.csv", labels, width)
        lines.append(f"{image_id}\t{image_id}.hscb\t{image_id}.csv\t{camera.name}")
    manifest = root / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


@pytest.fixture
def dataset_manifest(tmp_path):
    return synthetic_dataset(tmp_path)


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, on every run."""
    lines = []
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "test_acceptance.py" not in str(report.nodeid):
                continue
            name = report.nodeid.split("::")[-1]
            lines.append((name, outcome.upper()))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, outcome in sorted(lines):
        terminalreporter.write_line(f"{outcome:<7} {name}")
