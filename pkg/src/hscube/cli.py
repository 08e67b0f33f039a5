"""Command-line pipeline over the HSCB container and manifest formats.

Subcommands::

    convert        render a cube to a binary PPM (P6) image
    resample       resample a cube onto the common 170-band grid
    census         per-class pixel and image counts over a manifest
    split          generate a seeded, valid train/test split
    train-pixel    train the per-pixel classifier on train-tagged images
    predict-pixel  write per-image predictions for test-tagged images
    eval           class-based and image-based metric reports
    selftest       sanity checks of the embedded observer/illuminant tables

Exit codes: 0 success, 1 runtime or data error, 2 usage error.  All
randomness flows from explicit ``--seed`` flags (default 0, never the
clock), so identical invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, colorimetry, cube, dataio, metrics, pixelnet, splitgen
from .spectra import trapz_values


def write_ppm(path, image: np.ndarray) -> None:
    """Write an H x W x 3 image in [0, 1] as binary PPM, maxval 255.

    Channel bytes round half-up, so output bytes are deterministic.
    """
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"PPM image must be H x W x 3, got {image.shape}")
    h, w = image.shape[:2]
    quantized = np.floor(image * 255.0 + 0.5).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(quantized.tobytes())


def _cmd_convert(args) -> int:
    spectral = dataio.read_cube(args.in_path)
    rgb, clipped = cube.render_rgb(spectral, correct=not args.no_cmf_correction)
    write_ppm(args.out_path, rgb)
    print(f"wrote {args.out_path} ({spectral.width}x{spectral.height}), "
          f"clipped channels: {clipped}")
    return 0


def _cmd_resample(args) -> int:
    spectral = dataio.read_cube(args.in_path)
    resampled = cube.resample_cube(spectral)
    dataio.write_cube(args.out_path, resampled)
    print(f"wrote {args.out_path}: {resampled.band_count} bands "
          f"[{resampled.band_wavelengths_nm[0]:g}, {resampled.band_wavelengths_nm[-1]:g}] nm")
    return 0


def _cmd_census(args) -> int:
    registry = dataio.DEFAULT_REGISTRY
    images = dataio.load_manifest(args.manifest, registry)
    counts = dataio.class_pixel_census(images, registry)
    name_width = max(len(n) for n in registry.names)
    print(f"{'Class'.ljust(name_width)} {'Pixels':>12} {'Images':>8}")
    for cid in registry.class_ids:
        pixels, n_images = counts[cid]
        print(f"{registry.name_of(cid).ljust(name_width)} {pixels:>12} {n_images:>8}")
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as fh:
            fh.write("class,pixels,images\n")
            for cid in registry.class_ids:
                pixels, n_images = counts[cid]
                fh.write(f'"{registry.name_of(cid)}",{pixels},{n_images}\n')
    return 0


def _cmd_split(args) -> int:
    registry = dataio.DEFAULT_REGISTRY
    images = dataio.load_manifest(args.manifest, registry)
    cfg = splitgen.SplitConfig(seed=args.seed, test_probability=args.test_probability)
    tagged = splitgen.generate_split(images, registry, cfg)
    dataio.save_manifest(args.out_path, tagged)
    report = splitgen.validate_split(tagged, registry)
    text = splitgen.format_report(report, registry)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    print(text, end="")
    return 0 if report.valid else 1


def _train_feature_table(manifest_path, mode: str, registry):
    """Pixel table of the manifest's train-tagged images, restricted and
    relabeled to the reporting classes (0..8 in reporting order)."""
    images = dataio.load_manifest(manifest_path, registry)
    train_images = [im for im in images if im.split == "train"]
    if not train_images:
        raise ValueError("manifest has no train-tagged images; run `split` first")
    table = cube.extract_pixel_dataset(train_images, mode)
    reporting = np.array(registry.reporting_ids)
    keep = np.isin(table.class_ids, reporting)
    if not np.any(keep):
        raise ValueError("train images contain no reporting-class pixels")
    remap = {cid: k for k, cid in enumerate(registry.reporting_ids)}
    labels = np.array([remap[int(c)] for c in table.class_ids[keep]], dtype=np.int64)
    return table.features[keep], labels


def _cmd_train_pixel(args) -> int:
    registry = dataio.DEFAULT_REGISTRY
    features, labels = _train_feature_table(args.manifest, args.mode, registry)
    cfg = pixelnet.TrainConfig(
        learning_rate=args.learning_rate, batch_size=args.batch_size,
        epochs=args.epochs, seed=args.seed, momentum=args.momentum,
    )
    model, history = pixelnet.train(features, labels, cfg)
    pixelnet.save_model(args.out_path, model)
    if args.history:
        pixelnet.save_history(args.history, history)
    print(f"trained on {features.shape[0]} pixels ({args.mode}), "
          f"final epoch loss {history[-1]:.6f}; wrote {args.out_path}")
    return 0


def _mode_for_model(model: pixelnet.PixelClassifierModel) -> str:
    if model.input_dim == 3:
        return "rgbpixel"
    if model.input_dim == cube.COMMON_GRID_SIZE:
        return "spixel"
    raise ValueError(
        f"model input width {model.input_dim} matches no pixel mode "
        f"(3 = rgbpixel, {cube.COMMON_GRID_SIZE} = spixel)"
    )


def _cmd_predict_pixel(args) -> int:
    registry = dataio.DEFAULT_REGISTRY
    model = pixelnet.load_model(args.model)
    mode = _mode_for_model(model)
    images = dataio.load_manifest(args.manifest, registry)
    test_images = [im for im in images if im.split == "test"]
    if not test_images:
        raise ValueError("manifest has no test-tagged images")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reporting = registry.reporting_ids
    for image in test_images:
        if not image.labels:
            continue
        spectral = dataio.read_cube(image.cube_path)
        features = cube.pixel_features_for_cube(spectral, mode)
        pixel_idx = sorted(image.labels)
        predicted = pixelnet.predict(model, features[np.array(pixel_idx)])
        labels = {idx: reporting[int(k)] for idx, k in zip(pixel_idx, predicted)}
        dataio.write_annotation(out_dir / f"{image.image_id}.csv", labels, spectral.width)
    print(f"wrote predictions for {len(test_images)} test images to {out_dir}")
    return 0


def _load_predictions(image, registry, predictions_dir: Path) -> dict[int, int]:
    path = predictions_dir / f"{image.image_id}.csv"
    if not path.exists():
        raise ValueError(f"missing prediction file for image {image.image_id}: {path}")
    header = dataio.read_cube_header(image.cube_path)
    return dataio.read_annotation(path, registry, header.height, header.width)


def _cmd_eval(args) -> int:
    registry = dataio.DEFAULT_REGISTRY
    images = dataio.load_manifest(args.manifest, registry)
    test_images = [im for im in images if im.split == "test"]
    if not test_images:
        raise ValueError("manifest has no test-tagged images")
    predictions_dir = Path(args.predictions)
    per_image = []
    for image in test_images:
        if not image.labels:
            continue
        predicted = _load_predictions(image, registry, predictions_dir)
        truth = []
        pred = []
        for idx in sorted(image.labels):
            if idx not in predicted:
                raise ValueError(
                    f"image {image.image_id}: no prediction for annotated pixel {idx}"
                )
            truth.append(image.labels[idx])
            pred.append(predicted[idx])
        per_image.append((np.array(truth), np.array(pred)))
    if not per_image:
        raise ValueError("no annotated pixels in any test image")

    reporting = registry.reporting_ids
    pooled_true = np.concatenate([t for t, _ in per_image])
    pooled_pred = np.concatenate([p for _, p in per_image])
    confusions = metrics.pool_confusions(pooled_true, pooled_pred, reporting)
    report = metrics.build_class_report(confusions, registry)
    image_acc = metrics.image_based_accuracy(per_image, reporting)

    text = metrics.class_report_text(report)
    text += f"\nImage-based accuracy: {metrics.percent(image_acc)}\n"
    csv = metrics.class_report_csv(report)
    base = Path(args.report)
    base.with_suffix(".txt").write_text(text, encoding="utf-8")
    base.with_suffix(".csv").write_text(csv, encoding="utf-8")
    print(text, end="")
    return 0


def _selftest_checks():
    cmf = colorimetry.builtin_cmf()
    d65 = colorimetry.builtin_d65()
    w = cmf.wavelengths_nm
    yield ("luminance curve peaks at 555 nm",
           float(cmf.y_bar.values[w == 555.0][0]) == 1.0)
    yield ("D65 is 100.0 at 560 nm",
           float(d65.spd.values[w == 560.0][0]) == 100.0)
    yield ("red curve vanishes at 830 nm", float(cmf.x_bar.values[-1]) < 1e-4)
    knee = colorimetry.GAMMA_KNEE
    gap = abs(12.92 * knee - (1.055 * knee ** colorimetry.GAMMA_EXPONENT - 0.055))
    yield ("gamma branches agree at the knee within 5e-4", gap < 5e-4)
    for camera in (cube.NUANCE_EX, cube.SPECIM_IQ):
        corrected = colorimetry.fold_correct_cmf(cmf, camera.range_spec)
        tail = w >= camera.range_spec.captured_min_nm
        for name, orig, corr in (
            ("x", cmf.x_bar, corrected.x_bar),
            ("y", cmf.y_bar, corrected.y_bar),
            ("z", cmf.z_bar, corrected.z_bar),
        ):
            full = float(trapz_values(w, orig.values))
            folded = float(trapz_values(w[tail], corr.values[tail]))
            ok = abs(folded - full) / full < 0.01
            yield (f"fold conserves {name} weight for {camera.name}", ok)


def _cmd_selftest(args) -> int:
    failures = 0
    for name, ok in _selftest_checks():
        print(f"{'ok' if ok else 'FAIL'}  {name}")
        failures += 0 if ok else 1
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hscube",
        description="Hyperspectral cube pipeline: rendering, resampling, "
                    "splits, training, and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"hscube {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="render a cube to a binary PPM image")
    p.add_argument("--in", dest="in_path", required=True, metavar="CUBE.hscb")
    p.add_argument("--out", dest="out_path", required=True, metavar="IMAGE.ppm")
    p.add_argument("--no-cmf-correction", action="store_true",
                   help="disable the missing-band observer correction")
    p.set_defaults(func=_cmd_convert)

    p = sub.add_parser("resample", help="resample a cube onto the common grid")
    p.add_argument("--in", dest="in_path", required=True, metavar="CUBE.hscb")
    p.add_argument("--out", dest="out_path", required=True, metavar="CUBE.hscb")
    p.set_defaults(func=_cmd_resample)

    p = sub.add_parser("census", help="per-class pixel/image counts")
    p.add_argument("--manifest", required=True)
    p.add_argument("--csv", help="also write the counts as CSV")
    p.set_defaults(func=_cmd_census)

    p = sub.add_parser("split", help="generate a valid train/test split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", dest="out_path", required=True,
                   metavar="TAGGED_MANIFEST")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-probability", type=float, default=0.5)
    p.add_argument("--report", help="also write the split report to a file")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train-pixel", help="train the per-pixel classifier")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=cube.PIXEL_MODES, required=True)
    p.add_argument("--out", dest="out_path", required=True, metavar="MODEL.pxnt")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", help="write per-epoch loss CSV")
    p.set_defaults(func=_cmd_train_pixel)

    p = sub.add_parser("predict-pixel", help="predict test images' annotated pixels")
    p.add_argument("--model", required=True, metavar="MODEL.pxnt")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_predict_pixel)

    p = sub.add_parser("eval", help="class-based and image-based metric reports")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True, metavar="DIR")
    p.add_argument("--report", required=True,
                   help="report base path; writes <base>.txt and <base>.csv")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("selftest", help="embedded-table sanity checks")
    p.set_defaults(func=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
