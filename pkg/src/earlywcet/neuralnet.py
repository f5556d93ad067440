"""From-scratch feed-forward regressor: forward, backprop, Adam, persistence.

The default network is 12-32-32-32-1 with Leaky ReLU at every layer including
the output head (a linear head is available via `linear_output`), L2 penalty
on weights only, and mean-squared-error data loss. Reported losses include
the L2 term. All math is float64 numpy; no autodiff framework is involved,
which keeps the analytic gradients checkable against finite differences.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import NormStats, denorm_label, normalize_features
from .errors import (
    BadShapeError,
    CorruptModelError,
    EmptyInputError,
    LengthMismatchError,
    MissingNormStatsError,
    NonFiniteLossError,
    ShapeMismatchError,
    StaleCacheError,
)
from .fileio import atomic_write_text, read_text
from .seeding import seeded_rng
from .vmir import FeatureVector

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetworkConfig:
    """Topology and regularization of the regressor.

    `input_width` defaults to the 12-entry feature vector but is not pinned
    to it, so small throwaway networks (e.g. for gradient checking) can be
    built with the same code path.
    """

    input_width: int = 12
    hidden_widths: tuple[int, ...] = (32, 32, 32)
    output_width: int = 1
    leaky_slope: float = 0.01
    l2_beta: float = 0.01
    linear_output: bool = False
    init_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_width < 1 or any(w < 1 for w in self.hidden_widths):
            raise BadShapeError(f"non-positive layer width in {self.layer_dims}")
        if self.output_width != 1:
            raise BadShapeError("output_width must be 1 for scalar regression")
        if not 0 < self.leaky_slope < 1:
            raise BadShapeError(f"leaky_slope must lie in (0,1), got {self.leaky_slope}")
        if self.l2_beta < 0:
            raise BadShapeError(f"l2_beta must be non-negative, got {self.l2_beta}")

    @property
    def layer_dims(self) -> list[int]:
        return [self.input_width, *self.hidden_widths, self.output_width]

    def to_json_dict(self) -> dict:
        return {
            "input_width": self.input_width,
            "hidden_widths": list(self.hidden_widths),
            "output_width": self.output_width,
            "leaky_slope": self.leaky_slope,
            "l2_beta": self.l2_beta,
            "linear_output": self.linear_output,
            "init_seed": self.init_seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "NetworkConfig":
        return cls(
            input_width=int(data["input_width"]),
            hidden_widths=tuple(data["hidden_widths"]),
            output_width=int(data["output_width"]),
            leaky_slope=float(data["leaky_slope"]),
            l2_beta=float(data["l2_beta"]),
            linear_output=bool(data.get("linear_output", False)),
            init_seed=int(data["init_seed"]),
        )


@dataclass
class ModelParams:
    """Weight matrices (fan_out x fan_in) and bias vectors, one per layer."""

    config: NetworkConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    norm_stats: NormStats | None = None

    def n_layers(self) -> int:
        return len(self.weights)

    def check_shapes(self) -> None:
        dims = self.config.layer_dims
        expected = list(zip(dims[1:], dims[:-1]))
        if len(self.weights) != len(expected) or len(self.biases) != len(expected):
            raise ShapeMismatchError(
                f"{len(self.weights)} weight matrices for {len(expected)} layers"
            )
        for index, (w, b, shape) in enumerate(zip(self.weights, self.biases, expected)):
            if w.shape != shape:
                raise ShapeMismatchError(
                    f"layer {index} weights {w.shape}, expected {shape}"
                )
            if b.shape != (shape[0],):
                raise ShapeMismatchError(
                    f"layer {index} biases {b.shape}, expected {(shape[0],)}"
                )


def init_network(config: NetworkConfig) -> ModelParams:
    """Seeded uniform init with per-layer scale sqrt(6/(fan_in+fan_out)); zero biases."""
    rng = seeded_rng(config.init_seed)
    weights: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    dims = config.layer_dims
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return ModelParams(config=config, weights=weights, biases=biases)


def leaky_relu(z: np.ndarray, slope: float) -> np.ndarray:
    return np.where(z >= 0, z, slope * z)


def leaky_relu_grad(z: np.ndarray, slope: float) -> np.ndarray:
    # Derivative at exactly 0 is defined as 1 (the z >= 0 branch).
    return np.where(z >= 0, 1.0, slope)


@dataclass
class ForwardCache:
    """Per-layer pre-activations and activations kept for backprop."""

    params: ModelParams
    inputs: np.ndarray
    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]
    predictions: np.ndarray


def forward(params: ModelParams, x) -> ForwardCache:
    """Run the network on a row or batch of rows; returns the cache."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[np.newaxis, :]
    if x.ndim != 2 or x.shape[1] != params.config.input_width:
        raise ShapeMismatchError(
            f"input shape {x.shape}, expected (*, {params.config.input_width})"
        )
    slope = params.config.leaky_slope
    last = params.n_layers() - 1
    pre_activations: list[np.ndarray] = []
    activations: list[np.ndarray] = []
    a = x
    for index, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w.T + b
        if index == last and params.config.linear_output:
            a = z
        else:
            a = leaky_relu(z, slope)
        pre_activations.append(z)
        activations.append(a)
    return ForwardCache(
        params=params,
        inputs=x,
        pre_activations=pre_activations,
        activations=activations,
        predictions=activations[-1][:, 0],
    )


def loss(params: ModelParams, predictions, targets) -> float:
    """Mean squared error plus l2_beta times the sum of squared weights."""
    predictions = np.asarray(predictions, dtype=np.float64).reshape(-1)
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    if predictions.shape[0] != targets.shape[0]:
        raise LengthMismatchError(predictions.shape[0], targets.shape[0])
    if predictions.shape[0] == 0:
        raise EmptyInputError("loss batch")
    data_term = float(np.mean((predictions - targets) ** 2))
    penalty = params.config.l2_beta * sum(float(np.sum(w * w)) for w in params.weights)
    return data_term + penalty


@dataclass
class Gradients:
    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


def backward(params: ModelParams, cache: ForwardCache, targets) -> Gradients:
    """Analytic gradient of `loss` w.r.t. every weight and bias."""
    if cache.params is not params:
        raise StaleCacheError()
    targets = np.asarray(targets, dtype=np.float64).reshape(-1)
    batch = cache.inputs.shape[0]
    if targets.shape[0] != batch:
        raise LengthMismatchError(batch, targets.shape[0])
    slope = params.config.leaky_slope
    beta = params.config.l2_beta
    last = params.n_layers() - 1
    d_weights: list[np.ndarray] = [np.empty(0)] * params.n_layers()
    d_biases: list[np.ndarray] = [np.empty(0)] * params.n_layers()
    # d(MSE)/d(a_last); the 1/B of the mean lives here.
    grad_a = (2.0 / batch) * (cache.activations[-1] - targets[:, np.newaxis])
    for index in range(last, -1, -1):
        if index == last and params.config.linear_output:
            delta = grad_a
        else:
            delta = grad_a * leaky_relu_grad(cache.pre_activations[index], slope)
        a_prev = cache.inputs if index == 0 else cache.activations[index - 1]
        d_weights[index] = delta.T @ a_prev + 2.0 * beta * params.weights[index]
        d_biases[index] = delta.sum(axis=0)
        if index:
            grad_a = delta @ params.weights[index]
    return Gradients(d_weights, d_biases)


@dataclass
class AdamState:
    """First/second moment accumulators mirroring the parameter shapes."""

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m_weights: list[np.ndarray] = field(default_factory=list)
    v_weights: list[np.ndarray] = field(default_factory=list)
    m_biases: list[np.ndarray] = field(default_factory=list)
    v_biases: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(
        cls,
        params: ModelParams,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> "AdamState":
        return cls(
            learning_rate=learning_rate,
            beta1=beta1,
            beta2=beta2,
            epsilon=epsilon,
            m_weights=[np.zeros_like(w) for w in params.weights],
            v_weights=[np.zeros_like(w) for w in params.weights],
            m_biases=[np.zeros_like(b) for b in params.biases],
            v_biases=[np.zeros_like(b) for b in params.biases],
        )


def _adam_update(theta, grad, m, v, state: AdamState) -> None:
    m *= state.beta1
    m += (1.0 - state.beta1) * grad
    v *= state.beta2
    v += (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** state.t)
    v_hat = v / (1.0 - state.beta2 ** state.t)
    theta -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)


def adam_step(
    params: ModelParams, grads: Gradients, state: AdamState
) -> tuple[ModelParams, AdamState]:
    """One optimizer step, updating params and state in place.

    m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2; with bias correction
    m_hat = m/(1-b1^t), v_hat = v/(1-b2^t) and update lr*m_hat/(sqrt(v_hat)+eps).
    """
    for w, g in zip(params.weights, grads.d_weights):
        if w.shape != g.shape:
            raise ShapeMismatchError(f"gradient shape {g.shape} vs weights {w.shape}")
    for b, g in zip(params.biases, grads.d_biases):
        if b.shape != g.shape:
            raise ShapeMismatchError(f"gradient shape {g.shape} vs biases {b.shape}")
    state.t += 1
    for theta, grad, m, v in zip(
        params.weights, grads.d_weights, state.m_weights, state.v_weights
    ):
        _adam_update(theta, grad, m, v, state)
    for theta, grad, m, v in zip(
        params.biases, grads.d_biases, state.m_biases, state.v_biases
    ):
        _adam_update(theta, grad, m, v, state)
    return params, state


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    batch_size: int
    epochs: int = 100
    shuffle_seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be non-negative, got {self.epochs}")


@dataclass(frozen=True)
class CurvePoint:
    epoch: int
    train_loss: float
    val_loss: float | None = None


@dataclass(frozen=True)
class LearningCurve:
    points: tuple[CurvePoint, ...]

    def train_losses(self) -> list[float]:
        return [p.train_loss for p in self.points]


def train(
    x,
    y,
    config: NetworkConfig,
    tc: TrainConfig,
    x_val=None,
    y_val=None,
) -> tuple[ModelParams, LearningCurve]:
    """Mini-batch Adam training on already-normalized rows.

    Each epoch reshuffles with an epoch-indexed seed and walks the data in
    batches of tc.batch_size (last batch may be smaller). The recorded
    per-epoch training loss is the mean of the per-batch penalized losses;
    validation loss, when validation rows are given, is evaluated once at the
    end of each epoch with the same loss function.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.ndim != 2 or x.shape[1] != config.input_width:
        raise ShapeMismatchError(f"training rows {x.shape} vs input width {config.input_width}")
    if x.shape[0] != y.shape[0]:
        raise LengthMismatchError(x.shape[0], y.shape[0])
    if x.shape[0] == 0:
        raise EmptyInputError("training set")
    params = init_network(config)
    state = AdamState.for_params(params, tc.learning_rate, tc.beta1, tc.beta2, tc.epsilon)
    points: list[CurvePoint] = []
    n = x.shape[0]
    for epoch in range(1, tc.epochs + 1):
        order = seeded_rng(tc.shuffle_seed, epoch).permutation(n)
        batch_losses: list[float] = []
        for start in range(0, n, tc.batch_size):
            chosen = order[start : start + tc.batch_size]
            cache = forward(params, x[chosen])
            batch_loss = loss(params, cache.predictions, y[chosen])
            if not math.isfinite(batch_loss):
                raise NonFiniteLossError(epoch)
            grads = backward(params, cache, y[chosen])
            adam_step(params, grads, state)
            batch_losses.append(batch_loss)
        train_loss = float(np.mean(batch_losses))
        val_loss = None
        if x_val is not None:
            val_cache = forward(params, x_val)
            val_loss = loss(params, val_cache.predictions, y_val)
        points.append(CurvePoint(epoch, train_loss, val_loss))
    return params, LearningCurve(tuple(points))


def predict(params: ModelParams, features: FeatureVector) -> float:
    """Predicted cycle count for raw features, via the stored normalization."""
    if params.norm_stats is None:
        raise MissingNormStatsError()
    row = normalize_features(params.norm_stats, features.to_array())
    prediction = forward(params, row).predictions[0]
    return float(denorm_label(params.norm_stats, float(prediction)))


# --- persistence ------------------------------------------------------------


def save_model(path, params: ModelParams) -> None:
    """Write the model as JSON; floats keep full round-trip precision."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "network_config": params.config.to_json_dict(),
        "norm_stats": params.norm_stats.to_json_dict() if params.norm_stats else None,
        "weights": [w.tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
    }
    atomic_write_text(path, json.dumps(payload, indent=1) + "\n")


def load_model(path) -> ModelParams:
    text = read_text(path)
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptModelError(f"invalid JSON ({exc})") from exc
    if not isinstance(payload, dict):
        raise CorruptModelError("top level is not an object")
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise CorruptModelError(
            f"format_version {version!r} unsupported (expected {MODEL_FORMAT_VERSION})"
        )
    for key in ("network_config", "weights", "biases"):
        if key not in payload:
            raise CorruptModelError(f"missing field {key!r}")
    try:
        config = NetworkConfig.from_json_dict(payload["network_config"])
    except (KeyError, TypeError, ValueError, BadShapeError) as exc:
        raise CorruptModelError(f"bad network_config ({exc})") from exc
    try:
        weights = [np.asarray(w, dtype=np.float64) for w in payload["weights"]]
        biases = [np.asarray(b, dtype=np.float64) for b in payload["biases"]]
    except (TypeError, ValueError) as exc:
        raise CorruptModelError(f"ragged parameter arrays ({exc})") from exc
    norm_stats = None
    if payload.get("norm_stats") is not None:
        try:
            norm_stats = NormStats.from_json_dict(payload["norm_stats"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptModelError(f"bad norm_stats ({exc})") from exc
    params = ModelParams(config=config, weights=weights, biases=biases, norm_stats=norm_stats)
    try:
        params.check_shapes()
    except ShapeMismatchError as exc:
        raise CorruptModelError(str(exc)) from exc
    for arrays in (weights, biases):
        for a in arrays:
            if not np.all(np.isfinite(a)):
                raise CorruptModelError("non-finite parameter entry")
    return params
