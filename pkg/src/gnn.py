# Copyright 2026 ropf-toolkit contributors.
# See LICENSE file for licensing details.

"""Graph convolutional classifiers with hand-written backpropagation.

A model is a stack of ``relu(A_hat H W + b)`` layers over standardized node
features followed by one of two heads:

- the line head scores line k from its endpoint embeddings as
  ``sigmoid(w . [h_f + h_t, |h_f - h_t|] + b)``, which is symmetric in the
  endpoint order;
- the generator head scores generator g from its virtual-node embedding.

Training is full-batch with Adam on a class-weighted loss. The line model is
stage one; the generator model (stage two) reads stage-one probabilities
through the congestion feature columns.
"""

import copy
import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from config import TrainConfig
from datagen import Dataset
from events import RunEvent, log_run_event
from graph import (
    N_FEATURES,
    ExpandedGraph,
    build_features,
    expand,
    feature_batch,
    gen_nodes,
    has_congestion_features,
    line_endpoints,
    normalize_adjacency,
)
from grid import LoadVector, Network
from utils import thread_environment

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
GRAD_CHECK_STEP = 1e-4
STD_FLOOR = 1e-12

# Line heads read (from_nodes, to_nodes); generator heads read virtual nodes.
Targets = Union[Tuple[np.ndarray, np.ndarray], np.ndarray]


class ModelError(ValueError):
    """Base class for model artifact errors."""


class ModelMismatchError(ModelError):
    """A model does not fit the network, features or head it is used with."""


class ModelFormatError(ModelError):
    """A model file could not be read."""


class TrainingError(RuntimeError):
    """Training cannot proceed on the given data."""


class HeadKind(str, Enum):
    """What a model predicts."""

    LINE = "line"
    GEN = "gen"


@dataclass
class GnnModel:
    """Weights and metadata of one classifier.

    params holds ``W1..WL`` (fan_in x hidden), ``b1..bL``, ``head_w`` and a
    one-element ``head_b``.
    """

    kind: HeadKind
    in_dim: int
    hidden_dim: int
    n_layers: int
    params: Dict[str, np.ndarray]
    feature_mean: np.ndarray
    feature_std: np.ndarray
    decision_threshold: float = 0.5
    seed: int = 0
    case_name: str = ""
    line_ids: List[int] = field(default_factory=list)
    gen_ids: List[int] = field(default_factory=list)
    config: Dict[str, Any] = field(default_factory=dict)
    training: Dict[str, Any] = field(default_factory=dict)

    @property
    def head_dim(self) -> int:
        """Length of the head weight vector."""
        return 2 * self.hidden_dim if self.kind == HeadKind.LINE else self.hidden_dim

    def layer(self, index: int) -> Tuple[np.ndarray, np.ndarray]:
        """Weights and bias of layer index (1-based)."""
        return self.params[f"W{index}"], self.params[f"b{index}"]


@dataclass
class TrainHistory:
    """Per-epoch curves plus the settings they were produced under."""

    train_loss: List[float] = field(default_factory=list)
    val_loss: List[float] = field(default_factory=list)
    train_accuracy: List[float] = field(default_factory=list)
    val_accuracy: List[float] = field(default_factory=list)
    pos_weight: float = 1.0
    n_train_pairs: int = 0
    n_val_pairs: int = 0
    thread_env: Dict[str, str] = field(default_factory=dict)

    def record(self, train: Tuple[float, float], val: Tuple[float, float]) -> None:
        """Append one epoch of (loss, accuracy) for both splits."""
        self.train_loss.append(train[0])
        self.train_accuracy.append(train[1])
        self.val_loss.append(val[0])
        self.val_accuracy.append(val[1])

    def to_frame(self) -> pd.DataFrame:
        """The curves as a pandas DataFrame, one row per epoch."""
        return pd.DataFrame(
            {
                "epoch": range(1, len(self.train_loss) + 1),
                "train_loss": self.train_loss,
                "val_loss": self.val_loss,
                "train_accuracy": self.train_accuracy,
                "val_accuracy": self.val_accuracy,
            }
        )


def init_model(
    kind: HeadKind, in_dim: int, hidden_dim: int = 64, n_layers: int = 3, seed: int = 0
) -> GnnModel:
    """Fresh model with uniform(+-1/sqrt(fan_in)) weights and zero biases."""
    rng = np.random.default_rng(seed)
    params: Dict[str, np.ndarray] = {}
    fan_in = in_dim
    for index in range(1, n_layers + 1):
        bound = 1.0 / np.sqrt(fan_in)
        params[f"W{index}"] = rng.uniform(-bound, bound, size=(fan_in, hidden_dim))
        params[f"b{index}"] = np.zeros(hidden_dim)
        fan_in = hidden_dim
    head_dim = 2 * hidden_dim if kind == HeadKind.LINE else hidden_dim
    bound = 1.0 / np.sqrt(head_dim)
    params["head_w"] = rng.uniform(-bound, bound, size=head_dim)
    params["head_b"] = np.zeros(1)
    return GnnModel(
        kind=kind,
        in_dim=in_dim,
        hidden_dim=hidden_dim,
        n_layers=n_layers,
        params=params,
        feature_mean=np.zeros(in_dim),
        feature_std=np.ones(in_dim),
        seed=seed,
    )


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Logistic function without overflow warnings."""
    return np.exp(-np.logaddexp(0.0, -z))


def _check_inputs(model: GnnModel, a_hat: np.ndarray, features: np.ndarray) -> None:
    if features.shape[-1] != model.in_dim:
        raise ModelMismatchError(
            f"Features have {features.shape[-1]} columns; the model expects {model.in_dim}"
        )
    n_nodes = features.shape[-2]
    if a_hat.shape != (n_nodes, n_nodes):
        raise ModelMismatchError(
            f"Adjacency has shape {a_hat.shape}; features describe {n_nodes} nodes"
        )


def _propagate(
    model: GnnModel, a_hat: np.ndarray, features: np.ndarray
) -> Tuple[np.ndarray, List[Tuple[np.ndarray, np.ndarray]]]:
    """Message passing over a (samples, nodes, features) batch; keeps the backprop cache."""
    h = (features - model.feature_mean) / model.feature_std
    cache = []
    for index in range(1, model.n_layers + 1):
        weights, bias = model.layer(index)
        aggregated = a_hat @ h
        pre = aggregated @ weights + bias
        h = np.maximum(pre, 0.0)
        cache.append((aggregated, pre))
    return h, cache


def forward(model: GnnModel, a_hat: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Node embeddings for one feature matrix (nodes x in_dim) or a batch of them.

    Raises:
        ModelMismatchError: On feature or adjacency dimension mismatch.
    """
    _check_inputs(model, a_hat, features)
    embeddings, _ = _propagate(model, a_hat, features)
    return embeddings


def _readout(
    model: GnnModel, embeddings: np.ndarray, targets: Targets
) -> Tuple[np.ndarray, np.ndarray]:
    """Head logits and the head inputs they were computed from."""
    if model.kind == HeadKind.LINE:
        from_nodes, to_nodes = targets
        h_from = embeddings[..., from_nodes, :]
        h_to = embeddings[..., to_nodes, :]
        head_input = np.concatenate([h_from + h_to, np.abs(h_from - h_to)], axis=-1)
    else:
        head_input = embeddings[..., targets, :]
    logits = head_input @ model.params["head_w"] + model.params["head_b"][0]
    return logits, head_input


def _loss_terms(
    logits: np.ndarray, labels: np.ndarray, pos_weight: float, loss: str
) -> Tuple[float, np.ndarray]:
    """Mean weighted loss over all pairs and its gradient w.r.t. the logits."""
    weights = np.where(labels > 0.5, pos_weight, 1.0)
    probs = sigmoid(logits)
    count = labels.size
    if loss == "mse":
        residual = probs - labels
        value = np.sum(weights * residual**2) / count
        d_logits = weights * 2.0 * residual * probs * (1.0 - probs) / count
    else:
        per_pair = labels * np.logaddexp(0.0, -logits) + (1.0 - labels) * np.logaddexp(
            0.0, logits
        )
        value = np.sum(weights * per_pair) / count
        d_logits = weights * (probs - labels) / count
    return float(value), d_logits


def _backward(
    model: GnnModel,
    a_hat: np.ndarray,
    embeddings: np.ndarray,
    cache: List[Tuple[np.ndarray, np.ndarray]],
    head_input: np.ndarray,
    d_logits: np.ndarray,
    targets: Targets,
) -> Dict[str, np.ndarray]:
    grads: Dict[str, np.ndarray] = {}
    flat_input = head_input.reshape(-1, head_input.shape[-1])
    grads["head_w"] = flat_input.T @ d_logits.reshape(-1)
    grads["head_b"] = np.array([d_logits.sum()])

    d_head = d_logits[..., None] * model.params["head_w"]
    d_embeddings = np.zeros_like(embeddings)
    if model.kind == HeadKind.LINE:
        from_nodes, to_nodes = targets
        hidden = model.hidden_dim
        sign = np.sign(embeddings[:, from_nodes, :] - embeddings[:, to_nodes, :])
        d_sum, d_abs = d_head[..., :hidden], d_head[..., hidden:]
        np.add.at(d_embeddings, (slice(None), from_nodes), d_sum + d_abs * sign)
        np.add.at(d_embeddings, (slice(None), to_nodes), d_sum - d_abs * sign)
    else:
        np.add.at(d_embeddings, (slice(None), targets), d_head)

    d_h = d_embeddings
    for index in range(model.n_layers, 0, -1):
        aggregated, pre = cache[index - 1]
        weights, _ = model.layer(index)
        d_pre = d_h * (pre > 0.0)
        grads[f"W{index}"] = (
            aggregated.reshape(-1, aggregated.shape[-1]).T @ d_pre.reshape(-1, d_pre.shape[-1])
        )
        grads[f"b{index}"] = d_pre.sum(axis=(0, 1))
        if index > 1:
            d_h = a_hat.T @ (d_pre @ weights.T)
    return grads


def _evaluate(
    model: GnnModel,
    a_hat: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    targets: Targets,
    pos_weight: float,
    loss: str,
    with_gradients: bool,
) -> Tuple[float, np.ndarray, Optional[Dict[str, np.ndarray]]]:
    batch = features[None] if features.ndim == 2 else features
    labels = labels[None] if labels.ndim == 1 else labels
    _check_inputs(model, a_hat, batch)
    embeddings, cache = _propagate(model, a_hat, batch)
    logits, head_input = _readout(model, embeddings, targets)
    value, d_logits = _loss_terms(logits, labels, pos_weight, loss)
    grads = None
    if with_gradients:
        grads = _backward(model, a_hat, embeddings, cache, head_input, d_logits, targets)
    return value, sigmoid(logits), grads


def gradients(
    model: GnnModel,
    a_hat: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    targets: Targets,
    pos_weight: float = 1.0,
    loss: str = "bce",
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss and its analytic gradient with respect to every parameter.

    Args:
        model: The model to differentiate.
        a_hat: Normalized adjacency.
        features: Raw features, (nodes, in_dim) or (samples, nodes, in_dim).
        labels: 0/1 targets, (targets,) or (samples, targets).
        targets: Line endpoint node arrays or generator virtual-node indices.
        pos_weight: Weight of positive pairs.
        loss: "bce" or "mse".
    """
    value, _, grads = _evaluate(model, a_hat, features, labels, targets, pos_weight, loss, True)
    return value, grads  # type: ignore[return-value]


def grad_check(
    model: GnnModel,
    a_hat: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
    targets: Targets,
    pos_weight: float = 1.0,
    loss: str = "bce",
) -> float:
    """Largest relative gap between analytic and central-difference gradients.

    The relative error of one parameter is |g_a - g_n| / max(1e-8, |g_a| + |g_n|).
    """
    _, analytic = gradients(model, a_hat, features, labels, targets, pos_weight, loss)
    probe = copy.deepcopy(model)

    def loss_at() -> float:
        value, _, _ = _evaluate(probe, a_hat, features, labels, targets, pos_weight, loss, False)
        return value

    worst = 0.0
    for name in sorted(probe.params):
        values = probe.params[name]
        for position in np.ndindex(values.shape):
            original = values[position]
            values[position] = original + GRAD_CHECK_STEP
            plus = loss_at()
            values[position] = original - GRAD_CHECK_STEP
            minus = loss_at()
            values[position] = original
            numeric = (plus - minus) / (2.0 * GRAD_CHECK_STEP)
            exact = analytic[name][position]
            error = abs(exact - numeric) / max(1e-8, abs(exact) + abs(numeric))
            worst = max(worst, error)
    return worst


def classify(probabilities: Mapping[int, float], threshold: float) -> Dict[int, int]:
    """Label 1 exactly when the probability reaches the threshold."""
    return {key: int(p >= threshold) for key, p in probabilities.items()}


def _require_kind(model: GnnModel, kind: HeadKind) -> None:
    if model.kind != kind:
        raise ModelMismatchError(f"Expected a {kind.value} model, got a {model.kind.value} model")


def predict_lines(
    model: GnnModel, graph: ExpandedGraph, a_hat: np.ndarray, features: np.ndarray, net: Network
) -> Dict[int, float]:
    """Congestion probability per line id.

    Raises:
        ModelMismatchError: If the model is not a line model or dimensions differ.
    """
    _require_kind(model, HeadKind.LINE)
    embeddings = forward(model, a_hat, features)
    logits, _ = _readout(model, embeddings, line_endpoints(graph, net))
    return {k: float(p) for k, p in zip(net.line_ids, sigmoid(logits))}


def predict_max_gens(
    model: GnnModel,
    graph: ExpandedGraph,
    a_hat: np.ndarray,
    features: np.ndarray,
    net: Network,
    allow_stage1_features: bool = False,
) -> Dict[int, float]:
    """Probability per generator id of being dispatched at P_max.

    Raises:
        ModelMismatchError: If the model is not a generator model, dimensions
            differ, or the congestion columns are empty and the caller did not
            allow stage-one features.
    """
    _require_kind(model, HeadKind.GEN)
    if not allow_stage1_features and not has_congestion_features(features):
        raise ModelMismatchError(
            "Generator model needs stage-two features with line probabilities injected"
        )
    embeddings = forward(model, a_hat, features)
    logits, _ = _readout(model, embeddings, gen_nodes(graph, net))
    return {g: float(p) for g, p in zip(net.gen_ids, sigmoid(logits))}


def check_compatible(model: GnnModel, net: Network, kind: Optional[HeadKind] = None) -> None:
    """Ensure a model was trained on this network's ids and feature layout.

    Raises:
        ModelMismatchError: On any mismatch.
    """
    if kind is not None:
        _require_kind(model, kind)
    if model.in_dim != N_FEATURES:
        raise ModelMismatchError(f"Model expects {model.in_dim} features, not {N_FEATURES}")
    if model.line_ids != net.line_ids or model.gen_ids != net.gen_ids:
        raise ModelMismatchError(
            f"Model was trained on case '{model.case_name}' whose line/generator ids "
            f"differ from case '{net.name}'"
        )
    if model.case_name != net.name:
        logger.warning("Model case '%s' differs from '%s'", model.case_name, net.name)


@dataclass(frozen=True)
class Prediction:
    """Hierarchical inference output with per-stage wall time."""

    line_probs: Dict[int, float]
    gen_probs: Optional[Dict[int, float]]
    line_time_s: float
    gen_time_s: float


def predict_hierarchy(
    net: Network,
    loads: LoadVector,
    line_model: GnnModel,
    gen_model: Optional[GnnModel] = None,
    graph: Optional[ExpandedGraph] = None,
    a_hat: Optional[np.ndarray] = None,
) -> Prediction:
    """Run stage one and, when a generator model is given, stage two on its output."""
    graph = graph or expand(net)
    a_hat = normalize_adjacency(graph) if a_hat is None else a_hat

    started = time.perf_counter()
    line_probs = predict_lines(line_model, graph, a_hat, build_features(graph, loads, net), net)
    line_time = time.perf_counter() - started

    gen_probs, gen_time = None, 0.0
    if gen_model is not None:
        started = time.perf_counter()
        features = build_features(graph, loads, net, line_probs)
        gen_probs = predict_max_gens(gen_model, graph, a_hat, features, net)
        gen_time = time.perf_counter() - started
    return Prediction(line_probs, gen_probs, line_time, gen_time)


def _adam_step(
    model: GnnModel,
    grads: Dict[str, np.ndarray],
    moments: Dict[str, Tuple[np.ndarray, np.ndarray]],
    step: int,
    learning_rate: float,
) -> None:
    for name, grad in grads.items():
        first, second = moments[name]
        first[...] = ADAM_BETA1 * first + (1.0 - ADAM_BETA1) * grad
        second[...] = ADAM_BETA2 * second + (1.0 - ADAM_BETA2) * grad**2
        first_hat = first / (1.0 - ADAM_BETA1**step)
        second_hat = second / (1.0 - ADAM_BETA2**step)
        model.params[name] -= learning_rate * first_hat / (np.sqrt(second_hat) + ADAM_EPS)


def _stage_inputs(
    config: TrainConfig,
    dataset: Dataset,
    graph: ExpandedGraph,
    a_hat: np.ndarray,
    net: Network,
    line_model: Optional[GnnModel],
) -> Tuple[np.ndarray, np.ndarray, Targets]:
    """Feature batch, label matrix and readout targets for one stage."""
    samples = dataset.samples
    load_vectors = [s.loads_mw for s in samples]
    if config.stage == HeadKind.LINE.value:
        labels = np.array([[s.line_labels[k] for k in net.line_ids] for s in samples], float)
        return feature_batch(graph, net, load_vectors), labels, line_endpoints(graph, net)

    if config.teacher_forcing:
        line_probs = [{k: float(v) for k, v in s.line_labels.items()} for s in samples]
    else:
        if line_model is None:
            raise TrainingError("The gen stage needs a trained line model")
        check_compatible(line_model, net, HeadKind.LINE)
        stage1 = feature_batch(graph, net, load_vectors)
        embeddings = forward(line_model, a_hat, stage1)
        logits, _ = _readout(line_model, embeddings, line_endpoints(graph, net))
        line_probs = [dict(zip(net.line_ids, map(float, row))) for row in sigmoid(logits)]
    labels = np.array([[s.gen_labels[g] for g in net.gen_ids] for s in samples], float)
    features = feature_batch(graph, net, load_vectors, line_probs)
    return features, labels, gen_nodes(graph, net)


def _accuracy(probs: np.ndarray, labels: np.ndarray, threshold: float) -> float:
    return float(np.mean((probs >= threshold) == (labels > 0.5)))


def train(
    config: TrainConfig,
    dataset: Dataset,
    graph: ExpandedGraph,
    net: Network,
    line_model: Optional[GnnModel] = None,
) -> Tuple[GnnModel, TrainHistory]:
    """Train one stage by full-batch Adam on the dataset's train split.

    Raises:
        TrainingError: If the train split is empty or has no positive pair.
    """
    kind = HeadKind(config.stage)
    a_hat = normalize_adjacency(graph)
    features, labels, targets = _stage_inputs(config, dataset, graph, a_hat, net, line_model)

    splits = np.array([s.split for s in dataset.samples])
    train_rows, val_rows = splits == "train", splits == "val"
    if not train_rows.any():
        raise TrainingError("The dataset has no training samples")
    x_train, y_train = features[train_rows], labels[train_rows]
    x_val, y_val = features[val_rows], labels[val_rows]

    positives = float(y_train.sum())
    negatives = float(y_train.size) - positives
    if positives == 0:
        raise TrainingError(f"No positive {kind.value} labels in the training split")
    pos_weight = min(negatives / positives, config.pos_weight_cap) if negatives else 1.0

    model = init_model(kind, N_FEATURES, config.hidden_dim, config.n_layers, config.seed)
    columns = x_train.reshape(-1, N_FEATURES)
    model.feature_mean = columns.mean(axis=0)
    std = columns.std(axis=0)
    model.feature_std = np.where(std > STD_FLOOR, std, 1.0)
    model.decision_threshold = config.decision_threshold

    history = TrainHistory(
        pos_weight=pos_weight,
        n_train_pairs=int(y_train.size),
        n_val_pairs=int(y_val.size),
        thread_env=thread_environment(),
    )
    moments = {n: (np.zeros_like(p), np.zeros_like(p)) for n, p in model.params.items()}
    report_every = max(1, config.epochs // 10)
    threshold = config.decision_threshold

    for epoch in range(1, config.epochs + 1):
        train_loss, train_probs, grads = _evaluate(
            model, a_hat, x_train, y_train, targets, pos_weight, config.loss, True
        )
        val = (float("nan"), float("nan"))
        if len(x_val):
            val_loss, val_probs, _ = _evaluate(
                model, a_hat, x_val, y_val, targets, pos_weight, config.loss, False
            )
            val = (val_loss, _accuracy(val_probs, y_val, threshold))
        history.record((train_loss, _accuracy(train_probs, y_train, threshold)), val)
        _adam_step(model, grads, moments, epoch, config.learning_rate)  # type: ignore[arg-type]

        if epoch % report_every == 0 or epoch == config.epochs:
            log_run_event(
                RunEvent.TRAINING_EPOCH,
                kind.value,
                f"epoch {epoch}/{config.epochs} train_loss={train_loss:.6f} "
                f"val_accuracy={val[1]:.4f}",
            )

    model.case_name = net.name
    model.line_ids = list(net.line_ids)
    model.gen_ids = list(net.gen_ids)
    model.config = config.model_dump(mode="json")
    model.training = {
        "pos_weight": pos_weight,
        "n_train_pairs": history.n_train_pairs,
        "n_val_pairs": history.n_val_pairs,
        "thread_env": history.thread_env,
    }
    return model, history


class _LayerDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    weights: List[List[float]]
    bias: List[float]


class _ArchDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    in_dim: int
    hidden_dim: int
    n_layers: int


class _NormDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mean: List[float]
    std: List[float]


class _HeadDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: HeadKind
    weights: List[float]
    bias: float


class ModelDocument(BaseModel):
    """Schema of a model file."""

    model_config = ConfigDict(extra="forbid")

    version: int
    case_name: str
    line_ids: List[int]
    gen_ids: List[int]
    arch: _ArchDocument
    feature_norm: _NormDocument
    layers: List[_LayerDocument]
    head: _HeadDocument
    decision_threshold: float
    seed: int
    config: Dict[str, Any] = {}
    training: Dict[str, Any] = {}

    @model_validator(mode="after")
    def check_dimensions(self):
        """Ensure the stored arrays chain in_dim -> hidden -> ... -> head."""
        arch = self.arch
        if self.version != MODEL_FORMAT_VERSION:
            raise ValueError(f"version must be {MODEL_FORMAT_VERSION}")
        if len(self.layers) != arch.n_layers:
            raise ValueError(f"expected {arch.n_layers} layers, found {len(self.layers)}")
        if len(self.feature_norm.mean) != arch.in_dim or len(self.feature_norm.std) != arch.in_dim:
            raise ValueError("feature_norm length must equal in_dim")
        if any(s <= 0 for s in self.feature_norm.std):
            raise ValueError("feature_norm std entries must be positive")
        fan_in = arch.in_dim
        for index, layer in enumerate(self.layers, start=1):
            shape_ok = len(layer.weights) == fan_in and all(
                len(row) == arch.hidden_dim for row in layer.weights
            )
            if not shape_ok or len(layer.bias) != arch.hidden_dim:
                raise ValueError(f"layer {index} must be {fan_in}x{arch.hidden_dim}")
            fan_in = arch.hidden_dim
        head_dim = 2 * arch.hidden_dim if self.head.kind == HeadKind.LINE else arch.hidden_dim
        if len(self.head.weights) != head_dim:
            raise ValueError(f"head weights must have length {head_dim}")
        return self


def save_model(model: GnnModel, path: Union[str, Path]) -> None:
    """Write a model file; floats are stored at full precision."""
    document = {
        "version": MODEL_FORMAT_VERSION,
        "case_name": model.case_name,
        "line_ids": list(model.line_ids),
        "gen_ids": list(model.gen_ids),
        "arch": {
            "in_dim": model.in_dim,
            "hidden_dim": model.hidden_dim,
            "n_layers": model.n_layers,
        },
        "feature_norm": {
            "mean": model.feature_mean.tolist(),
            "std": model.feature_std.tolist(),
        },
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in (model.layer(i) for i in range(1, model.n_layers + 1))
        ],
        "head": {
            "kind": model.kind.value,
            "weights": model.params["head_w"].tolist(),
            "bias": float(model.params["head_b"][0]),
        },
        "decision_threshold": model.decision_threshold,
        "seed": model.seed,
        "config": model.config,
        "training": model.training,
    }
    Path(path).write_text(
        yaml.safe_dump(document, sort_keys=False, default_flow_style=None, width=1000)
    )
    log_run_event(RunEvent.ARTIFACT_WRITTEN, "model", str(path))


def load_model(path: Union[str, Path]) -> GnnModel:
    """Read a model file.

    Raises:
        ModelFormatError: If the file is unreadable or inconsistent.
    """
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as err:
        raise ModelFormatError(f"Cannot read model {path}: {err}")
    try:
        document = ModelDocument.model_validate(raw)
    except ValidationError as err:
        messages = [e["msg"].removeprefix("Value error, ") for e in err.errors()]
        raise ModelFormatError(f"Invalid model {path}: {', '.join(messages)}")

    params: Dict[str, np.ndarray] = {}
    for index, layer in enumerate(document.layers, start=1):
        params[f"W{index}"] = np.array(layer.weights, dtype=float)
        params[f"b{index}"] = np.array(layer.bias, dtype=float)
    params["head_w"] = np.array(document.head.weights, dtype=float)
    params["head_b"] = np.array([document.head.bias], dtype=float)
    return GnnModel(
        kind=document.head.kind,
        in_dim=document.arch.in_dim,
        hidden_dim=document.arch.hidden_dim,
        n_layers=document.arch.n_layers,
        params=params,
        feature_mean=np.array(document.feature_norm.mean, dtype=float),
        feature_std=np.array(document.feature_norm.std, dtype=float),
        decision_threshold=document.decision_threshold,
        seed=document.seed,
        case_name=document.case_name,
        line_ids=list(document.line_ids),
        gen_ids=list(document.gen_ids),
        config=dict(document.config),
        training=dict(document.training),
    )


def save_history(history: TrainHistory, path: Union[str, Path]) -> None:
    """Write the per-epoch curves as CSV (plot data for the accuracy and loss figures)."""
    history.to_frame().to_csv(path, index=False, float_format="%.17g")
    log_run_event(RunEvent.ARTIFACT_WRITTEN, "history", str(path))
