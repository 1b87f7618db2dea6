"""A small dense binary classifier trained from scratch.

The network maps the 14-component feature vector (four skill scores followed
by a ten-slot one-hot university block) through two rectified hidden layers
of 16 units to a single logistic output.  Forward, loss, and backward passes
are written out explicitly so gradients can be audited against finite
differences, and training is bit-deterministic for a given (dataset, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .datagen import (
    SKILLS,
    UNIVERSITIES,
    Applicant,
    Dataset,
    Decision,
)
from .seeding import check_seed, substream
from .serialization import SCHEMA_VERSION, check_schema_version, read_json, write_json

RELU = "relu"
SIGMOID = "sigmoid"
ACTIVATIONS = (RELU, SIGMOID)

DEFAULT_LAYER_SIZES = (14, 16, 16, 1)
FEATURE_DIM = DEFAULT_LAYER_SIZES[0]
PROBABILITY_CLAMP = 1e-7
PREDICTION_THRESHOLD = 0.5

# Adaptive-moment coefficients are fixed; only the step size is configurable.
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_UNIVERSITY_INDEX = {name: i for i, name in enumerate(UNIVERSITIES)}


class ModelError(ValueError):
    pass


class DimensionMismatchError(ModelError):
    pass


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ModelError("weights must be a matrix and bias a vector")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise DimensionMismatchError(
                f"bias length {self.bias.shape[0]} does not match rows {self.weights.shape[0]}"
            )
        if self.activation not in ACTIVATIONS:
            raise ModelError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ModelError("parameters must be finite")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass
class NetworkParams:
    layers: list[Layer]

    def __post_init__(self) -> None:
        if not self.layers:
            raise ModelError("network needs at least one layer")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise DimensionMismatchError(
                    f"layer output {prev.out_dim} does not chain into input {nxt.in_dim}"
                )
        if self.layers[-1].activation != SIGMOID or self.layers[-1].out_dim != 1:
            raise ModelError("output layer must be a single logistic unit")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            [Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers]
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ModelError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 1:
            raise ModelError(f"epochs must be at least 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ModelError(f"batch_size must be at least 1, got {self.batch_size}")
        check_seed(self.seed)


@dataclass
class TrainReport:
    epoch_losses: list[float]
    train_accuracy: float
    holdout_accuracy: float | None


@dataclass
class ForwardTrace:
    probability: float
    logit: float
    pre_activations: list[np.ndarray]  # one (out,) vector per layer
    activations: list[np.ndarray]  # input first, then one (out,) vector per layer


@dataclass
class EvalMetrics:
    accuracy: float
    mean_invite_probability: float
    predicted_invite_fraction: float


def encode(applicant: Applicant) -> np.ndarray:
    """Fixed-order skills followed by the one-hot university block."""
    x = np.zeros(FEATURE_DIM)
    x[0:4] = applicant.skill_scores()
    x[4 + _UNIVERSITY_INDEX[applicant.university]] = 1.0
    return x


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return np.maximum(z, 0.0) if activation == RELU else _sigmoid(z)


def _forward_arrays(
    params: NetworkParams, X: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    if X.ndim != 2 or X.shape[1] != params.in_dim:
        raise DimensionMismatchError(
            f"input has {X.shape[-1] if X.ndim else 0} features, network expects {params.in_dim}"
        )
    a = X
    pre_activations: list[np.ndarray] = []
    activations: list[np.ndarray] = [X]
    for layer in params.layers:
        z = a @ layer.weights.T + layer.bias
        pre_activations.append(z)
        a = _activate(z, layer.activation)
        activations.append(a)
    return pre_activations, activations


def forward(params: NetworkParams, x: np.ndarray) -> ForwardTrace:
    """Probability plus the per-layer tensors training and relevance reuse."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DimensionMismatchError(f"expected a single feature vector, got shape {x.shape}")
    pres, acts = _forward_arrays(params, x[None, :])
    return ForwardTrace(
        probability=float(acts[-1][0, 0]),
        logit=float(pres[-1][0, 0]),
        pre_activations=[z[0] for z in pres],
        activations=[a[0] for a in acts],
    )


def predict_batch(params: NetworkParams, X: np.ndarray) -> np.ndarray:
    _, acts = _forward_arrays(params, np.asarray(X, dtype=float))
    return acts[-1][:, 0]


def _label_value(label: Decision | int | float) -> float:
    if isinstance(label, Decision):
        return 1.0 if label is Decision.INVITE else 0.0
    return float(label)


def _bce(p: np.ndarray, y: np.ndarray) -> np.ndarray:
    p = np.clip(p, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
    return -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))


def loss(probability: float, label: Decision | int | float) -> float:
    """Binary cross-entropy with the probability clamped away from 0 and 1."""
    y = _label_value(label)
    return float(_bce(np.array([probability]), np.array([y]))[0])


def _backward_arrays(
    params: NetworkParams,
    pres: list[np.ndarray],
    acts: list[np.ndarray],
    y: np.ndarray,
    reduction: str,
) -> list[tuple[np.ndarray, np.ndarray]]:
    p = acts[-1][:, 0]
    delta = (p - y)[:, None]  # dL/dz at the logistic output, per example
    if reduction == "mean":
        delta = delta / len(y)
    elif reduction != "sum":
        raise ModelError(f"unknown reduction {reduction!r}")
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params.layers)  # type: ignore[list-item]
    for l in reversed(range(len(params.layers))):
        grads[l] = (delta.T @ acts[l], delta.sum(axis=0))
        if l > 0:
            delta = (delta @ params.layers[l].weights) * (pres[l - 1] > 0)
    return grads


def backward(
    params: NetworkParams,
    x: np.ndarray,
    label: Decision | int | float | Sequence,
    reduction: str = "mean",
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Analytic loss gradients, one (dW, db) pair per layer.

    Accepts a single feature vector or a (batch, features) matrix; batches
    reduce with ``mean`` (training semantics) or ``sum``.
    """
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
        labels = np.array([_label_value(label)])  # type: ignore[arg-type]
    else:
        labels = np.array([_label_value(l) for l in label])  # type: ignore[union-attr]
    pres, acts = _forward_arrays(params, X)
    return _backward_arrays(params, pres, acts, labels, reduction)


def init_params(seed: int, layer_sizes: Sequence[int] = DEFAULT_LAYER_SIZES) -> NetworkParams:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights and biases."""
    rng = substream(seed, "model-init")
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(layer_sizes, layer_sizes[1:])):
        limit = 1.0 / math.sqrt(fan_in)
        activation = SIGMOID if i == len(layer_sizes) - 2 else RELU
        layers.append(
            Layer(
                weights=rng.uniform(-limit, limit, size=(fan_out, fan_in)),
                bias=rng.uniform(-limit, limit, size=fan_out),
                activation=activation,
            )
        )
    return NetworkParams(layers)


def dataset_features(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and 0/1 label vector for a dataset."""
    X = np.stack([encode(ex.applicant) for ex in dataset.examples])
    y = np.array([1.0 if ex.label is Decision.INVITE else 0.0 for ex in dataset.examples])
    return X, y


def _accuracy(params: NetworkParams, X: np.ndarray, y: np.ndarray) -> float:
    p = predict_batch(params, X)
    return float(np.mean((p > PREDICTION_THRESHOLD) == (y == 1.0)))


def train(
    dataset: Dataset, config: TrainConfig, holdout: Dataset | None = None
) -> tuple[NetworkParams, TrainReport]:
    """Mini-batch adaptive-moment training; deterministic for equal inputs."""
    if not dataset.examples:
        raise ModelError("training dataset is empty")
    X, y = dataset_features(dataset)
    n = len(y)
    params = init_params(config.seed)
    shuffle_rng = substream(config.seed, "model-shuffle")

    m = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in params.layers]
    v = [(np.zeros_like(l.weights), np.zeros_like(l.bias)) for l in params.layers]
    step = 0
    epoch_losses: list[float] = []

    for epoch in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        batch_losses: list[float] = []
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            pres, acts = _forward_arrays(params, X[idx])
            p = acts[-1][:, 0]
            batch_loss = float(np.mean(_bce(p, y[idx])))
            if not math.isfinite(batch_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch + 1}, batch {start // config.batch_size + 1}"
                )
            batch_losses.append(batch_loss)
            grads = _backward_arrays(params, pres, acts, y[idx], reduction="mean")
            step += 1
            bc1 = 1.0 - ADAM_BETA1**step
            bc2 = 1.0 - ADAM_BETA2**step
            for l, (gw, gb) in enumerate(grads):
                mw, mb = m[l]
                vw, vb = v[l]
                mw *= ADAM_BETA1
                mw += (1 - ADAM_BETA1) * gw
                mb *= ADAM_BETA1
                mb += (1 - ADAM_BETA1) * gb
                vw *= ADAM_BETA2
                vw += (1 - ADAM_BETA2) * gw**2
                vb *= ADAM_BETA2
                vb += (1 - ADAM_BETA2) * gb**2
                layer = params.layers[l]
                layer.weights -= config.learning_rate * (mw / bc1) / (np.sqrt(vw / bc2) + ADAM_EPS)
                layer.bias -= config.learning_rate * (mb / bc1) / (np.sqrt(vb / bc2) + ADAM_EPS)
        epoch_losses.append(float(np.mean(batch_losses)))

    holdout_accuracy = None
    if holdout is not None:
        Xh, yh = dataset_features(holdout)
        holdout_accuracy = _accuracy(params, Xh, yh)
    report = TrainReport(
        epoch_losses=epoch_losses,
        train_accuracy=_accuracy(params, X, y),
        holdout_accuracy=holdout_accuracy,
    )
    return params, report


def evaluate(params: NetworkParams, dataset: Dataset) -> EvalMetrics:
    """Accuracy, mean invite probability, and invite fraction at the 0.5 threshold."""
    if not dataset.examples:
        raise ModelError("evaluation dataset is empty")
    X, y = dataset_features(dataset)
    p = predict_batch(params, X)
    predicted_invite = p > PREDICTION_THRESHOLD
    return EvalMetrics(
        accuracy=float(np.mean(predicted_invite == (y == 1.0))),
        mean_invite_probability=float(np.mean(p)),
        predicted_invite_fraction=float(np.mean(predicted_invite)),
    )


def train_config_to_json(config: TrainConfig) -> dict:
    return {
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "seed": config.seed,
    }


def train_config_from_json(doc: Mapping) -> TrainConfig:
    return TrainConfig(
        learning_rate=doc["learning_rate"],
        epochs=doc["epochs"],
        batch_size=doc["batch_size"],
        seed=doc["seed"],
    )


def train_report_to_json(report: TrainReport) -> dict:
    return {
        "epoch_losses": report.epoch_losses,
        "train_accuracy": report.train_accuracy,
        "holdout_accuracy": report.holdout_accuracy,
    }


def model_to_json(params: NetworkParams, config: TrainConfig, report: TrainReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": train_config_to_json(config),
        "layers": [
            {
                "rows": layer.out_dim,
                "cols": layer.in_dim,
                "weights": [float(w) for w in layer.weights.ravel()],
                "bias": [float(b) for b in layer.bias],
                "activation": layer.activation,
            }
            for layer in params.layers
        ],
        "train_report": train_report_to_json(report),
    }


def model_from_json(doc: Mapping, source: str = "model") -> tuple[NetworkParams, TrainConfig, TrainReport]:
    check_schema_version(doc, source)
    layers = [
        Layer(
            weights=np.array(l["weights"], dtype=float).reshape(l["rows"], l["cols"]),
            bias=np.array(l["bias"], dtype=float),
            activation=l["activation"],
        )
        for l in doc["layers"]
    ]
    report = TrainReport(
        epoch_losses=list(doc["train_report"]["epoch_losses"]),
        train_accuracy=doc["train_report"]["train_accuracy"],
        holdout_accuracy=doc["train_report"]["holdout_accuracy"],
    )
    return NetworkParams(layers), train_config_from_json(doc["config"]), report


def save_model(
    params: NetworkParams, config: TrainConfig, report: TrainReport, path: str | Path
) -> None:
    write_json(model_to_json(params, config, report), path)


def load_model(path: str | Path) -> tuple[NetworkParams, TrainConfig, TrainReport]:
    return model_from_json(read_json(path), source=str(path))
