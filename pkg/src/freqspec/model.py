"""Shallow detectors over spectral features, trained by full-batch gradient descent.

Two kinds are supported: ``linear`` (logistic regression) and ``mlp1`` (one
tanh hidden layer). Both minimise mean binary cross-entropy plus an L2 penalty
on weight matrices (biases are not penalised).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, InvalidInput, IoFailure, NonFiniteLoss, SchemaMismatch, SingleClass

KINDS = ("linear", "mlp1")
STD_FLOOR = 1e-6
MAGIC = "freqspec-model"
VERSION = "v1"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 500
    l2: float = 1e-4
    seed: int = 0
    kind: str = "linear"
    hidden: int = 16

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise InvalidInput("learning_rate must be positive")
        if self.epochs < 1:
            raise InvalidInput("epochs must be >= 1")
        if self.l2 < 0:
            raise InvalidInput("l2 must be >= 0")
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown model kind {self.kind!r}")
        if self.kind == "mlp1" and self.hidden < 1:
            raise InvalidInput("hidden must be >= 1")


def param_shapes(kind: str, dim: int, hidden: int = 16):
    if kind == "linear":
        return [("weights", (dim,)), ("bias", (1,))]
    return [("w1", (dim, hidden)), ("b1", (hidden,)), ("w2", (hidden,)), ("b2", (1,))]


_PENALISED = {"weights", "w1", "w2"}


@dataclass(eq=False)
class ClassifierModel:
    kind: str
    feature_mean: np.ndarray
    feature_std: np.ndarray
    params: dict
    hidden: int = 0
    loss_history: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.feature_std = np.maximum(np.asarray(self.feature_std, dtype=np.float64), STD_FLOOR)
        self.feature_mean = np.asarray(self.feature_mean, dtype=np.float64)
        for name, shape in param_shapes(self.kind, self.dim, self.hidden):
            if name not in self.params or np.shape(self.params[name]) != shape:
                raise SchemaMismatch(f"parameter {name} must have shape {shape}")

    @property
    def dim(self) -> int:
        return self.feature_mean.size

    def standardize(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"model expects {self.dim} features, got {x.shape[-1]}")
        return (x - self.feature_mean) / self.feature_std

    def flat_params(self) -> np.ndarray:
        return pack(self.params, self.kind, self.dim, self.hidden)


def pack(params, kind, dim, hidden):
    return np.concatenate([np.ravel(params[n]) for n, _ in param_shapes(kind, dim, hidden)])


def unpack(theta, kind, dim, hidden):
    out, i = {}, 0
    for name, shape in param_shapes(kind, dim, hidden):
        size = int(np.prod(shape))
        out[name] = theta[i:i + size].reshape(shape)
        i += size
    return out


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _forward(params, kind, xs):
    if kind == "linear":
        return xs @ params["weights"] + params["bias"][0], None
    hid = np.tanh(xs @ params["w1"] + params["b1"])
    return hid @ params["w2"] + params["b2"][0], hid


def loss_and_grad(theta, xs, y, kind, hidden, l2):
    """Mean BCE + l2 * ||weights||^2 and its gradient w.r.t. the packed parameters."""
    dim = xs.shape[1]
    p = unpack(theta, kind, dim, hidden)
    z, hid = _forward(p, kind, xs)
    n = xs.shape[0]
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    loss += l2 * sum(float(np.sum(p[k] ** 2)) for k in p if k in _PENALISED)
    dz = (sigmoid(z) - y) / n
    if kind == "linear":
        grads = {"weights": xs.T @ dz + 2 * l2 * p["weights"], "bias": np.array([dz.sum()])}
    else:
        dh = np.outer(dz, p["w2"]) * (1.0 - hid * hid)
        grads = {
            "w1": xs.T @ dh + 2 * l2 * p["w1"],
            "b1": dh.sum(axis=0),
            "w2": hid.T @ dz + 2 * l2 * p["w2"],
            "b2": np.array([dz.sum()]),
        }
    return loss, pack(grads, kind, dim, hidden)


def balance_indices(y) -> np.ndarray:
    """Indices with the minority class repeated round-robin up to the majority count."""
    y = np.asarray(y)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise SingleClass("training needs both real and fake samples")
    small, large = (pos, neg) if len(pos) < len(neg) else (neg, pos)
    extra = small[np.arange(len(large) - len(small)) % len(small)]
    return np.concatenate([np.arange(len(y)), extra])


def _init_params(cfg: TrainConfig, dim: int):
    if cfg.kind == "linear":
        return {"weights": np.zeros(dim), "bias": np.zeros(1)}
    rng = np.random.default_rng(cfg.seed)
    return {
        "w1": rng.standard_normal((dim, cfg.hidden)) / np.sqrt(dim),
        "b1": np.zeros(cfg.hidden),
        "w2": rng.standard_normal(cfg.hidden) / np.sqrt(cfg.hidden),
        "b2": np.zeros(1),
    }


def train(features, labels, cfg: TrainConfig = TrainConfig()) -> ClassifierModel:
    """Fit a detector on raw (unstandardised) features; label 1 = fake."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise DimensionMismatch("features must be (n, d) with one label per row")
    idx = balance_indices(y)
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), STD_FLOOR)
    xs = ((x - mean) / std)[idx]
    yb = y[idx]
    dim = x.shape[1]
    hidden = cfg.hidden if cfg.kind == "mlp1" else 0
    theta = pack(_init_params(cfg, dim), cfg.kind, dim, hidden)
    history = []
    for _ in range(cfg.epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grad = loss_and_grad(theta, xs, yb, cfg.kind, hidden, cfg.l2)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise NonFiniteLoss(f"loss diverged at epoch {len(history)} (lr={cfg.learning_rate})")
        history.append(loss)
        theta = theta - cfg.learning_rate * grad
    final, _ = loss_and_grad(theta, xs, yb, cfg.kind, hidden, cfg.l2)
    if not np.isfinite(final):
        raise NonFiniteLoss(f"loss diverged after training (lr={cfg.learning_rate})")
    history.append(final)
    return ClassifierModel(cfg.kind, mean, std, unpack(theta, cfg.kind, dim, hidden),
                           hidden, history)


def logits(model: ClassifierModel, x) -> np.ndarray:
    z, _ = _forward(model.params, model.kind, model.standardize(x))
    return z


def score_batch(model: ClassifierModel, x) -> np.ndarray:
    """Fake-probabilities for an (n, d) feature matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("score_batch expects an (n, d) matrix")
    return sigmoid(logits(model, x))


def score(model: ClassifierModel, f) -> float:
    arr = f.to_array() if hasattr(f, "to_array") else np.asarray(f, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch("score expects a single feature vector")
    return float(score_batch(model, arr[None, :])[0])


# --- persistence ------------------------------------------------------------

def _blocks(model):
    yield "feature_mean", model.feature_mean
    yield "feature_std", model.feature_std
    for name, _ in param_shapes(model.kind, model.dim, model.hidden):
        yield name, np.ravel(model.params[name])


def dumps_model(model: ClassifierModel) -> str:
    head = f"{MAGIC} {VERSION} {model.kind} {model.dim}"
    if model.kind == "mlp1":
        head += f" {model.hidden}"
    lines = [head]
    for name, values in _blocks(model):
        lines.append(f"{name} {values.size}")
        lines.extend(format(float(v), ".17g") for v in values)
    return "\n".join(lines) + "\n"


def save_model(model: ClassifierModel, path) -> None:
    try:
        Path(path).write_text(dumps_model(model))
    except OSError as exc:
        raise IoFailure(f"cannot write model to {path}: {exc}") from exc


def loads_model(text: str) -> ClassifierModel:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SchemaMismatch("empty model file")
    head = lines[0].split()
    if len(head) < 4 or head[0] != MAGIC or head[1] != VERSION or head[2] not in KINDS:
        raise SchemaMismatch(f"bad model header {lines[0]!r}")
    kind = head[2]
    try:
        dim = int(head[3])
        hidden = int(head[4]) if kind == "mlp1" else 0
    except (ValueError, IndexError) as exc:
        raise SchemaMismatch(f"bad model header {lines[0]!r}") from exc
    expected = [("feature_mean", (dim,)), ("feature_std", (dim,))] + param_shapes(kind, dim, hidden)
    blocks, pos = {}, 1
    for name, shape in expected:
        size = int(np.prod(shape))
        if pos >= len(lines):
            raise SchemaMismatch(f"missing block {name}")
        tag = lines[pos].split()
        if len(tag) != 2 or tag[0] != name or tag[1] != str(size):
            raise SchemaMismatch(f"expected block '{name} {size}', got {lines[pos]!r}")
        chunk = lines[pos + 1:pos + 1 + size]
        if len(chunk) != size:
            raise SchemaMismatch(f"block {name} is truncated")
        try:
            blocks[name] = np.array([float(v) for v in chunk]).reshape(shape)
        except ValueError as exc:
            raise SchemaMismatch(f"non-numeric value in block {name}") from exc
        pos += 1 + size
    if pos != len(lines):
        raise SchemaMismatch("trailing data after last block")
    mean = blocks.pop("feature_mean")
    std = blocks.pop("feature_std")
    if np.any(std < STD_FLOOR):
        raise SchemaMismatch("feature_std below floor")
    return ClassifierModel(kind, mean, std, blocks, hidden)


def load_model(path) -> ClassifierModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read model {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise SchemaMismatch(f"{path} is not a text model file") from exc
    return loads_model(text)
