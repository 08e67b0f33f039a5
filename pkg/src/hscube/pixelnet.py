"""Per-pixel spectral classifier: a small dense network of 1x1 stages.

Pixels are classified independently, so the network is a plain MLP applied
row-wise: each hidden stage is ``relu(W h + b)``, optionally with an
identity skip that adds the stage input where widths match (the default
architecture is input -> 64 -> 64 with skip -> 64 -> 9 classes).  The
output stage is a softmax over the 9 reporting classes.

Per-feature standardization constants are part of the model and are applied
inside :func:`forward`, so train- and predict-time scaling can never drift
apart.  Training is plain mini-batch gradient descent (optional momentum)
with an analytic reverse-mode gradient — no adaptive optimizer, so the
gradient contract stays exactly testable against finite differences.
Training is single-threaded and fully seeded: the same seed reproduces the
same shuffles, the same updates, and a bit-identical loss history.

Model files use the ``PXNT`` container (little-endian): magic, version u16,
input_dim u32, class_count u32, hidden-layer count u32, hidden sizes u32
each, skip flags u8 each, then float64 mean and std vectors, then per layer
the row-major float64 weight matrix and bias vector.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

PXNT_MAGIC = b"PXNT"
PXNT_VERSION = 1

DEFAULT_HIDDEN = (64, 64, 64)
DEFAULT_SKIPS = (1,)
DEFAULT_CLASS_COUNT = 9

_STD_FLOOR = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; ``init_scale`` multiplies He-style init std."""

    learning_rate: float
    batch_size: int
    epochs: int
    seed: int = 0
    momentum: float = 0.0
    init_scale: float = 1.0

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size <= 0 or self.epochs <= 0:
            raise ValueError("batch_size and epochs must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be positive")


@dataclass(frozen=True)
class PixelClassifierModel:
    """Weights, skip layout, and the feature normalization baked in."""

    input_dim: int
    class_count: int
    weights: tuple[np.ndarray, ...]      # per layer, shape (out, in)
    biases: tuple[np.ndarray, ...]       # per layer, shape (out,)
    skip_layers: tuple[int, ...]         # hidden stages with identity add
    feature_mean: np.ndarray
    feature_std: np.ndarray
    hidden_sizes: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or len(self.weights) < 1:
            raise ValueError("need one bias per weight matrix, at least one layer")
        widths = [self.input_dim]
        for w, b in zip(self.weights, self.biases):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError("layer weight/bias shapes are inconsistent")
            if w.shape[1] != widths[-1]:
                raise ValueError(
                    f"layer expects input width {w.shape[1]}, chain gives {widths[-1]}"
                )
            widths.append(w.shape[0])
        if widths[-1] != self.class_count:
            raise ValueError(f"final layer width {widths[-1]} != class_count")
        hidden = tuple(widths[1:-1])
        for idx in self.skip_layers:
            if not 0 <= idx < len(hidden):
                raise ValueError(f"skip index {idx} outside hidden stages")
            if widths[idx] != widths[idx + 1]:
                raise ValueError(
                    f"skip at stage {idx} needs matching widths, "
                    f"got {widths[idx]} -> {widths[idx + 1]}"
                )
        for arr in (self.feature_mean, self.feature_std):
            if arr.shape != (self.input_dim,):
                raise ValueError("normalization vectors must have input_dim entries")
        if np.any(self.feature_std <= 0):
            raise ValueError("feature_std must be positive")
        if not all(np.all(np.isfinite(a)) for a in
                   (*self.weights, *self.biases, self.feature_mean, self.feature_std)):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "hidden_sizes", hidden)


def init_model(
    input_dim: int,
    hidden: tuple[int, ...] = DEFAULT_HIDDEN,
    skip_layers: tuple[int, ...] = DEFAULT_SKIPS,
    class_count: int = DEFAULT_CLASS_COUNT,
    seed: int = 0,
    init_scale: float = 1.0,
) -> PixelClassifierModel:
    """He-initialized model with identity normalization."""
    rng = np.random.Generator(np.random.PCG64(seed))
    widths = (input_dim, *hidden, class_count)
    weights = []
    biases = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        std = init_scale * np.sqrt(2.0 / fan_in)
        weights.append(rng.standard_normal((fan_out, fan_in)) * std)
        biases.append(np.zeros(fan_out))
    return PixelClassifierModel(
        input_dim=input_dim,
        class_count=class_count,
        weights=tuple(weights),
        biases=tuple(biases),
        skip_layers=tuple(skip_layers),
        feature_mean=np.zeros(input_dim),
        feature_std=np.ones(input_dim),
    )


def _standardize(model: PixelClassifierModel, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise ValueError(
            f"features must be (n, {model.input_dim}), got {x.shape}"
        )
    return (x - model.feature_mean) / model.feature_std


def _forward_pass(model: PixelClassifierModel, x: np.ndarray):
    """Returns (probabilities, per-stage cache for backprop)."""
    cache = []
    h = x
    n_hidden = len(model.weights) - 1
    for i in range(n_hidden):
        z = h @ model.weights[i].T + model.biases[i]
        r = np.maximum(z, 0.0)
        out = r + h if i in model.skip_layers else r
        cache.append((h, z))
        h = out
    logits = h @ model.weights[-1].T + model.biases[-1]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    probs = exp / exp.sum(axis=1, keepdims=True)
    log_probs = shifted - np.log(exp.sum(axis=1, keepdims=True))
    cache.append((h, None))
    return probs, log_probs, cache


def forward(model: PixelClassifierModel, features: np.ndarray) -> np.ndarray:
    """Class probabilities, one row per pixel; rows sum to 1."""
    probs, _, _ = _forward_pass(model, _standardize(model, features))
    return probs


def loss_and_gradient(
    model: PixelClassifierModel,
    features: np.ndarray,
    labels: np.ndarray,
):
    """Mean cross-entropy and its analytic gradient.

    Returns ``(loss, grad_weights, grad_biases)`` with gradients shaped
    exactly like the model parameters.
    """
    x = _standardize(model, features)
    y = np.asarray(labels)
    if x.shape[0] == 0:
        raise ValueError("batch must not be empty")
    if y.shape != (x.shape[0],) or y.dtype.kind not in "iu":
        raise ValueError("labels must be one integer per feature row")
    if y.min() < 0 or y.max() >= model.class_count:
        raise ValueError(f"labels must lie in [0, {model.class_count})")

    probs, log_probs, cache = _forward_pass(model, x)
    n = x.shape[0]
    loss = float(-log_probs[np.arange(n), y].mean())

    grad_w = [np.empty_like(w) for w in model.weights]
    grad_b = [np.empty_like(b) for b in model.biases]

    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n

    h_last = cache[-1][0]
    grad_w[-1] = dlogits.T @ h_last
    grad_b[-1] = dlogits.sum(axis=0)
    dh = dlogits @ model.weights[-1]

    for i in range(len(model.weights) - 2, -1, -1):
        h_in, z = cache[i]
        dz = dh * (z > 0.0)
        grad_w[i] = dz.T @ h_in
        grad_b[i] = dz.sum(axis=0)
        dh_prev = dz @ model.weights[i]
        if i in model.skip_layers:
            dh_prev = dh_prev + dh
        dh = dh_prev

    return loss, grad_w, grad_b


def train(
    features: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    hidden: tuple[int, ...] = DEFAULT_HIDDEN,
    skip_layers: tuple[int, ...] = DEFAULT_SKIPS,
    class_count: int = DEFAULT_CLASS_COUNT,
) -> tuple[PixelClassifierModel, list[float]]:
    """Seeded mini-batch gradient descent; returns the model and per-epoch loss.

    Standardization constants come from the training features and are
    stored in the returned model.  Aborts with a diagnostic if the loss
    stops being finite.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("features must be (n, d) with one label per row")
    if np.unique(y).size < 2:
        raise ValueError("training needs at least 2 classes present")

    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), _STD_FLOOR)
    base = init_model(x.shape[1], hidden, skip_layers, class_count,
                      seed=cfg.seed, init_scale=cfg.init_scale)
    model = PixelClassifierModel(
        input_dim=base.input_dim, class_count=base.class_count,
        weights=base.weights, biases=base.biases, skip_layers=base.skip_layers,
        feature_mean=mean, feature_std=std,
    )

    weights = [w.copy() for w in model.weights]
    biases = [b.copy() for b in model.biases]
    vel_w = [np.zeros_like(w) for w in weights]
    vel_b = [np.zeros_like(b) for b in biases]
    rng = np.random.Generator(np.random.PCG64(cfg.seed))

    # The tuples below alias the arrays mutated by the update loop, so
    # `current` always sees the latest parameters.
    current = PixelClassifierModel(
        input_dim=model.input_dim, class_count=model.class_count,
        weights=tuple(weights), biases=tuple(biases),
        skip_layers=model.skip_layers,
        feature_mean=model.feature_mean, feature_std=model.feature_std,
    )

    history: list[float] = []
    n = x.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            loss, grad_w, grad_b = loss_and_gradient(current, x[batch], y[batch])
            if not np.isfinite(loss):
                raise RuntimeError(
                    f"non-finite loss {loss} at epoch {epoch}, "
                    f"batch offset {start}; lower the learning rate"
                )
            epoch_loss += loss * batch.size
            for i in range(len(weights)):
                vel_w[i] = cfg.momentum * vel_w[i] + grad_w[i]
                vel_b[i] = cfg.momentum * vel_b[i] + grad_b[i]
                weights[i] -= cfg.learning_rate * vel_w[i]
                biases[i] -= cfg.learning_rate * vel_b[i]
        history.append(epoch_loss / n)

    final = PixelClassifierModel(
        input_dim=model.input_dim, class_count=model.class_count,
        weights=tuple(w.copy() for w in weights),
        biases=tuple(b.copy() for b in biases),
        skip_layers=model.skip_layers,
        feature_mean=model.feature_mean, feature_std=model.feature_std,
    )
    return final, history


def predict(model: PixelClassifierModel, features: np.ndarray) -> np.ndarray:
    """Most probable class per pixel; ties resolve to the lowest class id."""
    return np.argmax(forward(model, features), axis=1)


def save_model(path, model: PixelClassifierModel) -> None:
    hidden = model.hidden_sizes
    blob = struct.pack("<4sH", PXNT_MAGIC, PXNT_VERSION)
    blob += struct.pack("<III", model.input_dim, model.class_count, len(hidden))
    blob += struct.pack(f"<{len(hidden)}I", *hidden) if hidden else b""
    flags = bytes(1 if i in model.skip_layers else 0 for i in range(len(hidden)))
    blob += flags
    blob += np.ascontiguousarray(model.feature_mean, dtype="<f8").tobytes()
    blob += np.ascontiguousarray(model.feature_std, dtype="<f8").tobytes()
    for w, b in zip(model.weights, model.biases):
        blob += np.ascontiguousarray(w, dtype="<f8").tobytes()
        blob += np.ascontiguousarray(b, dtype="<f8").tobytes()
    Path(path).write_bytes(blob)


def load_model(path) -> PixelClassifierModel:
    blob = Path(path).read_bytes()
    offset = 0

    def take(count: int, what: str) -> bytes:
        nonlocal offset
        if offset + count > len(blob):
            raise ValueError(
                f"truncated model file while reading {what}: "
                f"need {offset + count} bytes, have {len(blob)}"
            )
        chunk = blob[offset:offset + count]
        offset += count
        return chunk

    magic, version = struct.unpack("<4sH", take(6, "magic/version"))
    if magic != PXNT_MAGIC:
        raise ValueError(f"bad magic {magic!r}; not a PXNT model file")
    if version != PXNT_VERSION:
        raise ValueError(f"unsupported PXNT version {version}")
    input_dim, class_count, n_hidden = struct.unpack("<III", take(12, "dimensions"))
    hidden = struct.unpack(f"<{n_hidden}I", take(4 * n_hidden, "hidden sizes"))
    flags = take(n_hidden, "skip flags")
    skip_layers = tuple(i for i, f in enumerate(flags) if f)
    mean = np.frombuffer(take(8 * input_dim, "feature mean"), dtype="<f8").copy()
    std = np.frombuffer(take(8 * input_dim, "feature std"), dtype="<f8").copy()
    widths = (input_dim, *hidden, class_count)
    weights = []
    biases = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        w = np.frombuffer(take(8 * fan_in * fan_out, "weights"), dtype="<f8")
        weights.append(w.reshape(fan_out, fan_in).copy())
        biases.append(np.frombuffer(take(8 * fan_out, "biases"), dtype="<f8").copy())
    if offset != len(blob):
        raise ValueError(f"{len(blob) - offset} trailing bytes in model file")
    return PixelClassifierModel(
        input_dim=input_dim, class_count=class_count,
        weights=tuple(weights), biases=tuple(biases), skip_layers=skip_layers,
        feature_mean=mean, feature_std=std,
    )


def save_history(path, history: list[float]) -> None:
    """Training loss history as ``epoch,loss`` CSV."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,loss\n")
        for epoch, loss in enumerate(history):
            fh.write(f"{epoch},{loss!r}\n")
