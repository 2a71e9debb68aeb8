"""Surrogate stroke classifier: a frozen random feature map with a small
trainable head.

The network is split in two on purpose.  The first affine layer is drawn
once from a seeded generator and never trained; it plays the role of a
fixed front end whose output statistics stay put across tasks.  Everything
task-specific lives in the head (two affine layers with a tanh between
them), which is the only part the meta-learner adapts.  Heads are plain
lists of graph tensors so the inner loop can replace them functionally
without mutating anything.

Class imbalance is handled in the loss, not the sampler: each class gets
weight total / (n_classes * count), so rare strokes pull as hard as common
ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .autodiff import Tensor, ensure_tensor, log_softmax

MODEL_FORMAT = "taalkit-surrogate"
MODEL_VERSION = 1
PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class FrozenFeatureMap:
    """Seeded affine layer with tanh, excluded from all gradients."""

    weight: np.ndarray
    bias: np.ndarray

    @classmethod
    def create(cls, rng: np.random.Generator, n_features: int, hidden: int) -> "FrozenFeatureMap":
        scale = 1.0 / np.sqrt(n_features)
        return cls(
            weight=rng.normal(0.0, scale, size=(n_features, hidden)),
            bias=rng.normal(0.0, scale, size=(hidden,)),
        )

    @property
    def n_features(self) -> int:
        return self.weight.shape[0]

    @property
    def hidden(self) -> int:
        return self.weight.shape[1]

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_features:
            raise ValueError(f"expected (T, {self.n_features}) input, got {x.shape}")
        return np.tanh(x @ self.weight + self.bias)


def init_head(rng: np.random.Generator, hidden: int, n_classes: int) -> list[Tensor]:
    """Fresh trainable head parameters [W1, b1, W2, b2]."""
    s1 = 1.0 / np.sqrt(hidden)
    return [
        Tensor(rng.normal(0.0, s1, size=(hidden, hidden)), requires_grad=True),
        Tensor(np.zeros(hidden), requires_grad=True),
        Tensor(rng.normal(0.0, s1, size=(hidden, n_classes)), requires_grad=True),
        Tensor(np.zeros(n_classes), requires_grad=True),
    ]


def head_logits(features, params: Sequence[Tensor]) -> Tensor:
    """Head forward pass on (T, hidden) features (array or tensor)."""
    h = ensure_tensor(features)
    w1, b1, w2, b2 = params
    z = (h @ w1 + b1).tanh()
    return z @ w2 + b2


def head_n_classes(params: Sequence[Tensor]) -> int:
    return params[2].shape[1]


def clone_head(params: Sequence[Tensor]) -> list[Tensor]:
    """Detached leaf copies, ready to be adapted independently."""
    return [Tensor(p.data.copy(), requires_grad=True) for p in params]


def with_new_head_output(
    params: Sequence[Tensor], rng: np.random.Generator, n_classes: int
) -> list[Tensor]:
    """Keep the first head layer, redraw the output layer for a new class count."""
    w1, b1 = params[0], params[1]
    hidden = w1.shape[1]
    s = 1.0 / np.sqrt(hidden)
    return [
        Tensor(w1.data.copy(), requires_grad=True),
        Tensor(b1.data.copy(), requires_grad=True),
        Tensor(rng.normal(0.0, s, size=(hidden, n_classes)), requires_grad=True),
        Tensor(np.zeros(n_classes), requires_grad=True),
    ]


def class_weights(counts: np.ndarray) -> np.ndarray:
    """Inverse-frequency weights from per-class frame counts.

    w_c = total / (n_classes * count_c) for counted classes; classes with a
    zero count inherit the largest computed weight so an unseen stroke is
    never silently dropped from the loss.  The vector is then normalized to
    mean 1, which keeps the loss scale, and with it the effective learning
    rates, independent of how skewed the class profile is; the weight
    ratios (e.g. 1:9 for a 9:1 profile) are unchanged by it.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.ndim != 1 or counts.size == 0:
        raise ValueError("counts must be a non-empty 1-D vector")
    if (counts < 0).any():
        raise ValueError("counts must be non-negative")
    present = counts > 0
    if not present.any():
        raise ValueError("all class counts are zero")
    weights = np.empty(counts.size)
    weights[present] = counts.sum() / (counts.size * counts[present])
    weights[~present] = weights[present].max()
    return weights / weights.mean()


def class_weights_from_labels(labels: np.ndarray, n_classes: int) -> np.ndarray:
    """`class_weights` over the label histogram of an integer label vector."""
    labels = np.asarray(labels, dtype=np.int64)
    return class_weights(np.bincount(labels, minlength=n_classes))


def wce_loss(logits, labels: np.ndarray, weights: np.ndarray) -> Tensor:
    """Weighted cross-entropy from raw scores, averaged over frames.

    The per-frame term is w_{y_t} * (-log p_t[y_t]) with log-probabilities
    taken through a stabilized log-softmax and floored at log(1e-12); the
    result is the mean of those terms over the T frames.
    """
    logits = ensure_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    t, c = logits.shape
    if t == 0:
        raise ValueError("wce_loss needs at least one frame")
    if labels.shape != (t,):
        raise ValueError(f"labels shape {labels.shape} does not match logits rows {t}")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"labels must lie in [0, {c}), got range [{labels.min()}, {labels.max()}]")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (c,):
        raise ValueError(f"weights shape {weights.shape} does not match {c} classes")
    if not np.isfinite(logits.data).all():
        raise ValueError("non-finite values in logits")
    if not np.isfinite(weights).all():
        raise ValueError("non-finite values in class weights")
    onehot = np.zeros((t, c))
    onehot[np.arange(t), labels] = 1.0
    logp = log_softmax(logits, axis=1).clip_min_const(float(np.log(PROB_FLOOR)))
    picked = (logp * Tensor(onehot)).sum(axis=1)
    return -(picked * Tensor(weights[labels])).sum() / t


def wce_loss_probs(predictions: np.ndarray, targets: np.ndarray, weights: np.ndarray) -> float:
    """Weighted cross-entropy on ready-made distributions.

    `predictions` and `targets` are (n_classes, n_frames): each prediction
    column a probability distribution, each target column one-hot.  Same
    value as `wce_loss` on the corresponding logits, for callers that only
    have probabilities.
    """
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if p.ndim != 2 or p.shape != y.shape:
        raise ValueError(f"predictions {p.shape} and targets {y.shape} must match as (C, T)")
    if w.shape != (p.shape[0],):
        raise ValueError(f"weights shape {w.shape} does not match {p.shape[0]} classes")
    if not (np.isfinite(p).all() and np.isfinite(y).all() and np.isfinite(w).all()):
        raise ValueError("non-finite values in inputs")
    if np.abs(p.sum(axis=0) - 1.0).max() > 1e-6 or (p < 0).any():
        raise ValueError("prediction columns must be probability distributions")
    logp = np.log(np.clip(p, PROB_FLOOR, None))
    return float(-(w[:, None] * y * logp).sum() / p.shape[1])


def sgd_step(params: Sequence[Tensor], grads: Sequence[Tensor], lr: float) -> list[Tensor]:
    """One functional gradient step; stays differentiable if the grads are."""
    for g in grads:
        if not np.isfinite(g.data).all():
            raise ValueError("non-finite gradient")
    return [p - float(lr) * g for p, g in zip(params, grads)]


def param_shapes(params: Sequence[Tensor]) -> list[tuple[int, ...]]:
    """Layout descriptor of a parameter list (one shape per layer)."""
    return [tuple(p.shape) for p in params]


def flatten_params(params: Sequence[Tensor]) -> np.ndarray:
    """Concatenate parameter values into one flat float64 vector."""
    return np.concatenate([np.asarray(p.data, dtype=np.float64).ravel() for p in params])


def unflatten_params(vec: np.ndarray, shapes: Sequence[tuple[int, ...]]) -> list[Tensor]:
    """Rebuild fresh leaf tensors from a flat vector and a layout."""
    vec = np.asarray(vec, dtype=np.float64)
    sizes = [int(np.prod(s)) if len(s) else 1 for s in shapes]
    if vec.size != sum(sizes):
        raise ValueError(f"vector of size {vec.size} does not fit layout {list(shapes)}")
    out, start = [], 0
    for shape, size in zip(shapes, sizes):
        out.append(Tensor(vec[start : start + size].reshape(shape).copy(), requires_grad=True))
        start += size
    return out


@dataclass
class SurrogateModel:
    """Feature map plus current head, with convenience inference methods."""

    feature_map: FrozenFeatureMap
    head: list[Tensor]

    @classmethod
    def create(
        cls,
        n_features: int,
        hidden: int,
        n_classes: int,
        rng: np.random.Generator,
    ) -> "SurrogateModel":
        fmap = FrozenFeatureMap.create(rng, n_features, hidden)
        return cls(feature_map=fmap, head=init_head(rng, hidden, n_classes))

    @property
    def n_classes(self) -> int:
        return head_n_classes(self.head)

    @property
    def hidden(self) -> int:
        return self.feature_map.hidden

    @property
    def n_features(self) -> int:
        return self.feature_map.n_features

    def logits(self, x: np.ndarray, head: Sequence[Tensor] | None = None) -> Tensor:
        return head_logits(self.feature_map.apply(x), self.head if head is None else head)

    def predict(self, x: np.ndarray, head: Sequence[Tensor] | None = None) -> np.ndarray:
        return np.argmax(self.logits(x, head).data, axis=1)

    def accuracy(
        self, x: np.ndarray, labels: np.ndarray, head: Sequence[Tensor] | None = None
    ) -> float:
        pred = self.predict(x, head)
        return float(np.mean(pred == np.asarray(labels, dtype=np.int64)))


# --- serialization ----------------------------------------------------------

_ARRAY_NAMES = ("feat_weight", "feat_bias", "w1", "b1", "w2", "b2")


def save_model(path: str, model: SurrogateModel) -> None:
    """Write a model as a JSON header line followed by little-endian float64."""
    arrays = [model.feature_map.weight, model.feature_map.bias] + [p.data for p in model.head]
    header = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "n_features": model.n_features,
        "hidden": model.hidden,
        "n_classes": model.n_classes,
        "arrays": [
            {"name": name, "shape": list(a.shape)} for name, a in zip(_ARRAY_NAMES, arrays)
        ],
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_model(path: str) -> SurrogateModel:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a {MODEL_FORMAT} file: {path}")
        arrays = []
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * count)
            if len(buf) != 8 * count:
                raise ValueError(f"truncated model file: {path}")
            arrays.append(np.frombuffer(buf, dtype="<f8").astype(np.float64).reshape(shape))
    fmap = FrozenFeatureMap(weight=arrays[0], bias=arrays[1])
    head = [Tensor(a, requires_grad=True) for a in arrays[2:]]
    return SurrogateModel(feature_map=fmap, head=head)
