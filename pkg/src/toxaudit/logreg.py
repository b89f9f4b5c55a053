"""Binary logistic regression on sparse features.

The model is the logistic sigmoid applied to a linear function of the
feature vector: p(toxic | x) = sigmoid(w . x + b).  Training minimizes
class-weighted cross-entropy with minibatch Adam; the "balanced" weighting
assigns each class the multiplier N / (2 * n_class) so both classes
contribute equally to the aggregate loss despite imbalance.

Everything is deterministic given the config seed.  Models are immutable
after training and safe to share; conversions and training itself are
single-threaded.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import fairmetrics
from .errors import DataError, SchemaError, TrainingDivergedError
from .tfidf import SparseVector

# Keeps sigmoid output strictly inside (0, 1) even for saturating inputs.
_SIGMOID_CLAMP = 1e-15
# Probability clamp applied before logs in the loss.
LOSS_EPS = 1e-12

_MODEL_FILE_VERSION = "logreg-model v1"


@dataclass
class AdamHyper:
    """Adam moment-decay rates and denominator offset (published defaults)."""

    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


@dataclass
class AdamState:
    """First/second moment estimates plus the bias-correction step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), step=0)


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    class_weights is None (uniform), the string "balanced", or an explicit
    (nontoxic, toxic) pair of positive multipliers.
    """

    learning_rate: float = 1e-4
    batch_size: int = 100
    epochs: int = 5
    class_weights: tuple[float, float] | str | None = None
    seed: int = 0
    adam: AdamHyper = field(default_factory=AdamHyper)
    l2: float = 0.0


@dataclass(eq=False)
class LogRegModel:
    weights: np.ndarray
    bias: float
    trained_config: TrainConfig | None = None
    loss_trace: list[float] = field(default_factory=list)

    @property
    def dimension(self) -> int:
        return len(self.weights)


def sigmoid(z):
    """Numerically stable logistic function, clamped strictly inside (0, 1).

    Accepts scalars or arrays; never overflows for large |z|.
    """
    scalar = np.ndim(z) == 0
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.empty_like(arr)
    pos = arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-arr[pos]))
    ez = np.exp(arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    out = np.clip(out, _SIGMOID_CLAMP, 1.0 - _SIGMOID_CLAMP)
    return float(out[0]) if scalar else out


class _FlatFeatures:
    """Row-major concatenation of sparse vectors for fast repeated passes."""

    __slots__ = ("starts", "ends", "cols", "vals", "dimension", "n_rows")

    def __init__(self, vectors: Sequence[SparseVector], expected_dim: int | None = None):
        self.n_rows = len(vectors)
        dims = {v.dimension for v in vectors}
        if len(dims) > 1:
            raise ValueError(f"inconsistent feature dimensions: {sorted(dims)}")
        self.dimension = dims.pop() if dims else (expected_dim or 0)
        if expected_dim is not None and self.dimension != expected_dim:
            raise ValueError(
                f"feature dimension {self.dimension} does not match model dimension {expected_dim}"
            )
        counts = np.array([len(v.entries) for v in vectors], dtype=np.int64)
        self.ends = np.cumsum(counts)
        self.starts = self.ends - counts
        total = int(self.ends[-1]) if self.n_rows else 0
        self.cols = np.empty(total, dtype=np.int64)
        self.vals = np.empty(total, dtype=np.float64)
        pos = 0
        for v in vectors:
            for col, val in v.entries:
                self.cols[pos] = col
                self.vals[pos] = val
                pos += 1

    def raw_scores(self, params: np.ndarray, rows: Sequence[int] | None = None) -> np.ndarray:
        w = params[: self.dimension]
        b = params[self.dimension]
        row_ids = range(self.n_rows) if rows is None else rows
        z = np.empty(len(row_ids))
        for k, r in enumerate(row_ids):
            s, e = self.starts[r], self.ends[r]
            z[k] = (self.vals[s:e] @ w[self.cols[s:e]]) + b if e > s else b
        return z


def predict_proba(model: LogRegModel, x: SparseVector) -> float:
    """Probability of the toxic class for one feature vector."""
    if x.dimension != model.dimension:
        raise ValueError(
            f"feature dimension {x.dimension} does not match model dimension {model.dimension}"
        )
    z = model.bias
    for col, val in x.entries:
        z += model.weights[col] * val
    return sigmoid(z)


def predict_many(model: LogRegModel, features: Sequence[SparseVector]) -> np.ndarray:
    """Vector of toxic-class probabilities for a batch of feature vectors."""
    flat = _FlatFeatures(features, expected_dim=model.dimension)
    params = np.append(model.weights, model.bias)
    if flat.n_rows == 0:
        return np.empty(0)
    return sigmoid(flat.raw_scores(params))


def balanced_class_weights(n_nontoxic: int, n_toxic: int) -> tuple[float, float]:
    """Per-class multipliers N / (2 * n_class); w0*n0 + w1*n1 = N."""
    if n_nontoxic < 1 or n_toxic < 1:
        raise DataError(
            f"both classes need at least one sample, got {n_nontoxic} non-toxic / {n_toxic} toxic"
        )
    total = n_nontoxic + n_toxic
    return total / (2.0 * n_nontoxic), total / (2.0 * n_toxic)


def resolve_class_weights(
    setting: tuple[float, float] | str | None, n_nontoxic: int, n_toxic: int
) -> tuple[float, float]:
    if setting is None or setting == "none":
        return 1.0, 1.0
    if setting == "balanced":
        return balanced_class_weights(n_nontoxic, n_toxic)
    if isinstance(setting, str):
        raise ValueError(f"unknown class_weights setting {setting!r}")
    w0, w1 = float(setting[0]), float(setting[1])
    if w0 <= 0 or w1 <= 0:
        raise ValueError("class weights must be positive")
    return w0, w1


def weighted_cross_entropy(labels, probs, sample_weights) -> float:
    """Mean over samples of weight_i * per-sample cross-entropy.

    Probabilities are clamped into [1e-12, 1 - 1e-12] before the logs so a
    confident wrong prediction yields a large but finite penalty.
    """
    t = np.asarray(labels, dtype=float)
    p = np.asarray(probs, dtype=float)
    w = np.asarray(sample_weights, dtype=float)
    if not (t.shape == p.shape == w.shape):
        raise ValueError(f"length mismatch: {t.shape}, {p.shape}, {w.shape}")
    p = np.clip(p, LOSS_EPS, 1.0 - LOSS_EPS)
    per_sample = -(t * np.log(p) + (1.0 - t) * np.log(1.0 - p))
    return float(np.mean(w * per_sample))


def gradient(
    batch: tuple[Sequence[SparseVector], Sequence[float], Sequence[float]],
    model: LogRegModel,
) -> tuple[np.ndarray, float]:
    """Gradient of the weighted cross-entropy over a batch.

    grad_w = (1/B) sum_i weight_i * (p_i - t_i) * x_i, and the matching
    scalar for the bias, with p_i = predict_proba(model, x_i).
    """
    features, labels, sample_weights = batch
    if len(features) == 0:
        raise ValueError("empty batch")
    t = np.asarray(labels, dtype=float)
    w = np.asarray(sample_weights, dtype=float)
    if len(features) != len(t) or len(features) != len(w):
        raise ValueError("batch components have mismatched lengths")
    flat = _FlatFeatures(features, expected_dim=model.dimension)
    params = np.append(model.weights, model.bias)
    grad = _batch_gradient(flat, np.arange(flat.n_rows), t, w, params)
    return grad[:-1], float(grad[-1])


def _batch_gradient(
    flat: _FlatFeatures,
    rows: Sequence[int],
    labels: np.ndarray,
    sample_weights: np.ndarray,
    params: np.ndarray,
) -> np.ndarray:
    probs = sigmoid(flat.raw_scores(params, rows))
    grad = np.zeros(flat.dimension + 1)
    for k, r in enumerate(rows):
        coef = sample_weights[r] * (probs[k] - labels[r])
        s, e = flat.starts[r], flat.ends[r]
        if e > s:
            # Column indices within one vector are unique, so += is safe.
            grad[flat.cols[s:e]] += coef * flat.vals[s:e]
        grad[-1] += coef
    grad /= len(rows)
    return grad


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    hyper: AdamHyper,
    lr: float,
) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam update; returns new params and state."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("params, grads and state must have identical shapes")
    if not np.all(np.isfinite(grads)):
        raise TrainingDivergedError("non-finite gradient component")
    step = state.step + 1
    m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grads
    v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grads**2
    m_hat = m / (1.0 - hyper.beta1**step)
    v_hat = v / (1.0 - hyper.beta2**step)
    new_params = params - lr * m_hat / (np.sqrt(v_hat) + hyper.epsilon)
    return new_params, AdamState(m=m, v=v, step=step)


def train(
    train_data: tuple[Sequence[SparseVector], Sequence[int]],
    cfg: TrainConfig,
) -> LogRegModel:
    """Train a model from zero-initialized weights.

    Each epoch reshuffles sample order with the seeded RNG, walks minibatches
    of cfg.batch_size, applies class weights as per-sample weights, and
    records the full-data weighted loss into the model's loss_trace.  The
    objective is convex, so zero initialization affects only the trajectory.
    """
    if cfg.learning_rate <= 0:
        raise ValueError(f"learning_rate must be positive, got {cfg.learning_rate}")
    if cfg.epochs < 1 or cfg.batch_size < 1:
        raise ValueError("epochs and batch_size must be at least 1")
    features, labels = train_data
    t = np.asarray(labels, dtype=float)
    n = len(features)
    if n == 0 or len(t) != n:
        raise ValueError("training data empty or mismatched")
    n_toxic = int(t.sum())
    n_nontoxic = n - n_toxic
    if n_toxic == 0 or n_nontoxic == 0:
        raise DataError("training data contains a single class")

    w0, w1 = resolve_class_weights(cfg.class_weights, n_nontoxic, n_toxic)
    sample_weights = np.where(t == 1.0, w1, w0)

    flat = _FlatFeatures(features)
    dim = flat.dimension
    params = np.zeros(dim + 1)
    state = AdamState.zeros(dim + 1)
    rng = random.Random(cfg.seed)
    order = list(range(n))
    trace: list[float] = []

    for epoch in range(cfg.epochs):
        rng.shuffle(order)
        for batch_no, start in enumerate(range(0, n, cfg.batch_size)):
            rows = order[start : start + cfg.batch_size]
            grad = _batch_gradient(flat, rows, t, sample_weights, params)
            if cfg.l2:
                grad[:dim] += cfg.l2 * params[:dim]
            try:
                params, state = adam_step(params, grad, state, cfg.adam, cfg.learning_rate)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(f"epoch {epoch}, batch {batch_no}: {exc}") from None
        loss = weighted_cross_entropy(t, sigmoid(flat.raw_scores(params)), sample_weights)
        if not math.isfinite(loss):
            raise TrainingDivergedError(f"non-finite loss after epoch {epoch}")
        trace.append(loss)

    return LogRegModel(
        weights=params[:dim].copy(),
        bias=float(params[dim]),
        trained_config=cfg,
        loss_trace=trace,
    )


def grid_search(
    train_data: tuple[Sequence[SparseVector], Sequence[int]],
    validation_data: tuple[Sequence[SparseVector], Sequence[int]],
    grid: Sequence[TrainConfig],
) -> tuple[TrainConfig, list[tuple[TrainConfig, float]]]:
    """Train one model per config and pick the best validation overall-AUC.

    Diverging configurations score NaN and never win; ties keep the earliest
    grid entry.  The returned table has one (config, auc) row per grid entry
    in grid order.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("empty grid")
    val_features, val_labels = validation_data
    val_examples_labels = [int(v) for v in val_labels]

    table: list[tuple[TrainConfig, float]] = []
    best: TrainConfig | None = None
    best_auc = -math.inf
    for cfg in grid:
        try:
            model = train(train_data, cfg)
        except TrainingDivergedError:
            table.append((cfg, float("nan")))
            continue
        scores = predict_many(model, val_features)
        examples = [
            fairmetrics.ScoredExample(id=str(i), label=lab, score=float(sc), subgroups=frozenset())
            for i, (lab, sc) in enumerate(zip(val_examples_labels, scores))
        ]
        auc = fairmetrics.roc_auc(examples)
        table.append((cfg, auc))
        if auc > best_auc:
            best, best_auc = cfg, auc
    if best is None:
        raise TrainingDivergedError("every grid configuration diverged")
    return best, table


def format_class_weights(setting: tuple[float, float] | str | None) -> str:
    if setting is None or setting == "none":
        return "none"
    if setting == "balanced":
        return "balanced"
    return f"{setting[0]!r},{setting[1]!r}"


def parse_class_weights(text: str) -> tuple[float, float] | str | None:
    text = text.strip()
    if text == "none":
        return None
    if text == "balanced":
        return "balanced"
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"class weights must be 'balanced', 'none' or 'w0,w1', got {text!r}")
    return float(parts[0]), float(parts[1])


def save_model(model: LogRegModel, path: str | Path) -> None:
    """Write a model to a versioned flat file, one weight per line.

    Floats are written with repr so loading reproduces them exactly; the
    training config is recorded in the header for provenance.
    """
    cfg = model.trained_config
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(f"# {_MODEL_FILE_VERSION}\n")
        stream.write(f"# dimension={model.dimension}\n")
        stream.write(f"# bias={model.bias!r}\n")
        if cfg is not None:
            stream.write(f"# config.learning_rate={cfg.learning_rate!r}\n")
            stream.write(f"# config.batch_size={cfg.batch_size}\n")
            stream.write(f"# config.epochs={cfg.epochs}\n")
            stream.write(f"# config.class_weights={format_class_weights(cfg.class_weights)}\n")
            stream.write(f"# config.seed={cfg.seed}\n")
            stream.write(f"# config.l2={cfg.l2!r}\n")
            stream.write(
                f"# config.adam={cfg.adam.beta1!r},{cfg.adam.beta2!r},{cfg.adam.epsilon!r}\n"
            )
        for w in model.weights:
            stream.write(f"{float(w)!r}\n")


def load_model(path: str | Path) -> LogRegModel:
    with open(path, "r", encoding="utf-8") as stream:
        version = stream.readline().strip()
        if version != f"# {_MODEL_FILE_VERSION}":
            raise SchemaError(f"unsupported model file version: {version!r}")
        header: dict[str, str] = {}
        pos = stream.tell()
        line = stream.readline()
        while line.startswith("# "):
            key, _, value = line[2:].rstrip("\n").partition("=")
            header[key] = value
            pos = stream.tell()
            line = stream.readline()
        stream.seek(pos)
        weights = np.array([float(l) for l in stream], dtype=float)

    dimension = int(header["dimension"])
    if len(weights) != dimension:
        raise SchemaError(f"model file has {len(weights)} weights, header says {dimension}")
    cfg = None
    if "config.learning_rate" in header:
        b1, b2, eps = (float(x) for x in header["config.adam"].split(","))
        cfg = TrainConfig(
            learning_rate=float(header["config.learning_rate"]),
            batch_size=int(header["config.batch_size"]),
            epochs=int(header["config.epochs"]),
            class_weights=parse_class_weights(header["config.class_weights"]),
            seed=int(header["config.seed"]),
            adam=AdamHyper(beta1=b1, beta2=b2, epsilon=eps),
            l2=float(header["config.l2"]),
        )
    return LogRegModel(weights=weights, bias=float(header["bias"]), trained_config=cfg)
