"""Hyperspectral reflectance-cube toolkit.

Spectral-to-sRGB reconstruction with missing-band compensation, band
resampling across camera profiles, dataset split generation, segmentation
metric protocols, and a per-pixel spectral classifier.
"""

__version__ = "0.1.0"

from .colorimetry import (
    CameraRangeSpec,
    CmfSet,
    Illuminant,
    RgbColor,
    XyzColor,
    builtin_cmf,
    builtin_d65,
    fold_correct_cmf,
    gamma_encode,
    reconstruct_rgb_pixel,
    spectrum_to_xyz,
    xyz_to_linear_rgb,
)
from .cube import (
    CAMERA_PROFILES,
    NUANCE_EX,
    SPECIM_IQ,
    CameraProfile,
    PixelDataset,
    SpectralCube,
    common_grid,
    extract_pixel_dataset,
    make_cube,
    render_rgb,
    resample_cube,
)
from .dataio import (
    DEFAULT_REGISTRY,
    AnnotatedImage,
    ClassRegistry,
    CorruptionError,
    FormatError,
    class_pixel_census,
    load_manifest,
    read_annotation,
    read_cube,
    save_manifest,
    write_cube,
)
from .metrics import (
    ClassConfusion,
    ClassMetrics,
    average_class_metrics,
    class_metrics,
    image_based_accuracy,
    pool_confusions,
)
from .pixelnet import (
    PixelClassifierModel,
    TrainConfig,
    forward,
    load_model,
    loss_and_gradient,
    predict,
    save_model,
    train,
)
from .spectra import (
    Interpolant,
    OutOfRangeError,
    SampledSpectrum,
    evaluate,
    pchip_fit,
    resample_to_grid,
    trapz,
)
from .splitgen import SplitConfig, SplitReport, generate_split, validate_split

__all__ = [
    "__version__",
    "CameraRangeSpec", "CmfSet", "Illuminant", "RgbColor", "XyzColor",
    "builtin_cmf", "builtin_d65", "fold_correct_cmf", "gamma_encode",
    "reconstruct_rgb_pixel", "spectrum_to_xyz", "xyz_to_linear_rgb",
    "CAMERA_PROFILES", "NUANCE_EX", "SPECIM_IQ", "CameraProfile",
    "PixelDataset", "SpectralCube", "common_grid", "extract_pixel_dataset",
    "make_cube", "render_rgb", "resample_cube",
    "DEFAULT_REGISTRY", "AnnotatedImage", "ClassRegistry",
    "CorruptionError", "FormatError", "class_pixel_census", "load_manifest",
    "read_annotation", "read_cube", "save_manifest", "write_cube",
    "ClassConfusion", "ClassMetrics", "average_class_metrics",
    "class_metrics", "image_based_accuracy", "pool_confusions",
    "PixelClassifierModel", "TrainConfig", "forward", "load_model",
    "loss_and_gradient", "predict", "save_model", "train",
    "Interpolant", "OutOfRangeError", "SampledSpectrum", "evaluate",
    "pchip_fit", "resample_to_grid", "trapz",
    "SplitConfig", "SplitReport", "generate_split", "validate_split",
]
