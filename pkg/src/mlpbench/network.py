"""Fully-connected network: configuration, parameters, forward/backward, update.

Conventions fixed here and relied on everywhere else:
  * one sample per row; weights are fan_in x fan_out, biases 1 x fan_out;
  * hidden activation is the configured kind; the output layer is linear
    for MSE and sigmoid for BCE (the loss choice pins the head);
  * MSE = (1/2N) * sum((pred-target)^2), BCE uses the fused sigmoid form,
    so in both cases the output delta is (pred - target) / N and gradients
    are batch means;
  * ReLU'(0) = 0.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DomainError, ShapeError
from .linalg import Matrix, add, add_bias_row, col_sum, hadamard, mat_mul, scale, sub, transpose
from .rng import SplitMix64

_MASK64 = 0xFFFFFFFFFFFFFFFF
PARAMS_MAGIC = b"MLPW"


class ActivationKind(Enum):
    RELU = "relu"
    SIGMOID = "sigmoid"


class LossKind(Enum):
    MSE = "mse"
    BCE = "bce"


@dataclass(frozen=True)
class NetworkConfig:
    layer_widths: tuple[int, ...]
    activation: ActivationKind = ActivationKind.RELU
    loss: LossKind = LossKind.MSE
    learning_rate: float = 0.05
    seed: int = 1

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        if len(self.layer_widths) < 2:
            raise ConfigError("layer_widths: need at least input and output widths")
        if any(w < 1 for w in self.layer_widths):
            raise ConfigError(f"layer_widths: widths must be >= 1, got {list(self.layer_widths)}")
        if not (self.learning_rate >= 0):
            raise ConfigError(f"learning_rate: must be >= 0, got {self.learning_rate}")
        if not 0 <= self.seed <= _MASK64:
            raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1

    def with_seed(self, seed: int) -> "NetworkConfig":
        return NetworkConfig(self.layer_widths, self.activation, self.loss, self.learning_rate, seed)


@dataclass(frozen=True)
class Params:
    """Per-layer weights and biases. The same container carries gradients."""

    weights: tuple[Matrix, ...]
    biases: tuple[Matrix, ...]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise ShapeError("params: weights/biases layer counts differ")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.rows != 1 or b.cols != w.cols:
                raise ShapeError(f"params: layer {i} bias {b.rows}x{b.cols} does not match weights {w.rows}x{w.cols}")
            if i + 1 < len(self.weights) and w.cols != self.weights[i + 1].rows:
                raise ShapeError(f"params: layer {i} fan_out {w.cols} != layer {i+1} fan_in {self.weights[i+1].rows}")

    @property
    def n_layers(self) -> int:
        return len(self.weights)


Grads = Params


@dataclass(frozen=True)
class ForwardCache:
    """Pre-activations and activations per layer for one batch.

    activations[0] is the input batch; zs[l] / activations[l+1] belong to
    layer l. Kept so forward and backward can be timed as separate units.
    """

    zs: tuple[Matrix, ...]
    activations: tuple[Matrix, ...]


def init_params(config: NetworkConfig) -> Params:
    """Weights uniform in [-0.5, 0.5) from SplitMix64(seed), biases zero.

    Draw order is layer-major, then row-major within each weight matrix;
    biases consume no draws. This order is part of the on-disk/wire
    contract and must not change.
    """
    gen = SplitMix64(config.seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(config.layer_widths, config.layer_widths[1:]):
        draws = [gen.next_float() - 0.5 for _ in range(fan_in * fan_out)]
        weights.append(Matrix.from_flat(fan_in, fan_out, draws))
        biases.append(Matrix.zeros(1, fan_out))
    return Params(tuple(weights), tuple(biases))


def activate(kind: ActivationKind, z: Matrix) -> Matrix:
    if kind is ActivationKind.RELU:
        return Matrix(np.maximum(z.array, 0.0))
    return Matrix(1.0 / (1.0 + np.exp(-z.array)))


def activate_deriv(kind: ActivationKind, z: Matrix) -> Matrix:
    if kind is ActivationKind.RELU:
        return Matrix((z.array > 0.0).astype(np.float64))
    s = 1.0 / (1.0 + np.exp(-z.array))
    return Matrix(s * (1.0 - s))


def _check_bce_domain(pred: Matrix) -> None:
    p = pred.array
    if not (np.all(p > 0.0) and np.all(p < 1.0)):
        raise DomainError("bce: predictions must lie strictly in (0, 1)")


def loss_value(kind: LossKind, pred: Matrix, target: Matrix) -> float:
    if pred.shape != target.shape:
        raise ShapeError(f"loss: prediction {pred.rows}x{pred.cols} vs target {target.rows}x{target.cols}")
    n = pred.rows
    if kind is LossKind.MSE:
        diff = pred.array - target.array
        return float(np.sum(diff * diff) / (2.0 * n))
    _check_bce_domain(pred)
    p = pred.array
    t = target.array
    return float(-np.sum(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)) / n)


def loss_grad(kind: LossKind, pred: Matrix, target: Matrix) -> Matrix:
    """d(loss)/d(output); for BCE this is the fused-with-sigmoid form, taken
    at the pre-activation. Both kinds reduce to (pred - target) / N."""
    if pred.shape != target.shape:
        raise ShapeError(f"loss: prediction {pred.rows}x{pred.cols} vs target {target.rows}x{target.cols}")
    if kind is LossKind.BCE:
        _check_bce_domain(pred)
    return Matrix((pred.array - target.array) / pred.rows)


def final_activation(loss: LossKind) -> ActivationKind | None:
    """Output-layer activation implied by the loss (None = linear)."""
    return ActivationKind.SIGMOID if loss is LossKind.BCE else None


def forward(params: Params, input: Matrix, config: NetworkConfig) -> tuple[Matrix, ForwardCache]:
    if input.cols != config.layer_widths[0]:
        raise ShapeError(f"forward: input width {input.cols} != configured input width {config.layer_widths[0]}")
    zs = []
    activations = [input]
    a = input
    last = params.n_layers - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = add_bias_row(mat_mul(a, w), b)
        zs.append(z)
        if l < last:
            a = activate(config.activation, z)
        elif config.loss is LossKind.BCE:
            a = activate(ActivationKind.SIGMOID, z)
        else:
            a = z
        activations.append(a)
    return a, ForwardCache(tuple(zs), tuple(activations))


def backward(params: Params, cache: ForwardCache, target: Matrix, config: NetworkConfig) -> Grads:
    """Batch-mean gradients for every weight and bias (1/N lives in the
    output delta)."""
    output = cache.activations[-1]
    if output.shape != target.shape:
        raise ShapeError(f"backward: output {output.rows}x{output.cols} vs target {target.rows}x{target.cols}")
    delta = loss_grad(config.loss, output, target)
    d_weights: list[Matrix] = [None] * params.n_layers  # type: ignore[list-item]
    d_biases: list[Matrix] = [None] * params.n_layers  # type: ignore[list-item]
    for l in range(params.n_layers - 1, -1, -1):
        d_weights[l] = mat_mul(transpose(cache.activations[l]), delta)
        d_biases[l] = col_sum(delta)
        if l > 0:
            back = mat_mul(delta, transpose(params.weights[l]))
            delta = hadamard(back, activate_deriv(config.activation, cache.zs[l - 1]))
    return Params(tuple(d_weights), tuple(d_biases))


def apply_update(params: Params, grads: Grads, learning_rate: float) -> Params:
    weights = tuple(sub(w, scale(g, learning_rate)) for w, g in zip(params.weights, grads.weights))
    biases = tuple(sub(b, scale(g, learning_rate)) for b, g in zip(params.biases, grads.biases))
    return Params(weights, biases)


def params_add(a: Params, b: Params) -> Params:
    return Params(
        tuple(add(x, y) for x, y in zip(a.weights, b.weights)),
        tuple(add(x, y) for x, y in zip(a.biases, b.biases)),
    )


def params_sub(a: Params, b: Params) -> Params:
    return Params(
        tuple(sub(x, y) for x, y in zip(a.weights, b.weights)),
        tuple(sub(x, y) for x, y in zip(a.biases, b.biases)),
    )


def params_scale(p: Params, c: float) -> Params:
    return Params(tuple(scale(w, c) for w in p.weights), tuple(scale(b, c) for b in p.biases))


def params_max_abs_diff(a: Params, b: Params) -> float:
    worst = 0.0
    for x, y in zip(a.weights + a.biases, b.weights + b.biases):
        worst = max(worst, float(np.max(np.abs(x.array - y.array))))
    return worst


def params_allfinite(p: Params) -> bool:
    return all(bool(np.all(np.isfinite(m.array))) for m in p.weights + p.biases)


# --- flat binary export/import -------------------------------------------
#
# Little-endian. Layout: magic "MLPW", u32 layer count, then per layer:
# u32 fan_in, u32 fan_out, fan_in*fan_out weight f64s (row-major),
# fan_out bias f64s. Consumed by the framework-baseline component.


def params_to_bytes(params: Params) -> bytes:
    out = bytearray()
    out += PARAMS_MAGIC
    out += struct.pack("<I", params.n_layers)
    for w, b in zip(params.weights, params.biases):
        out += struct.pack("<II", w.rows, w.cols)
        out += w.data.astype("<f8").tobytes()
        out += b.data.astype("<f8").tobytes()
    return bytes(out)


def params_from_bytes(blob: bytes) -> Params:
    if blob[:4] != PARAMS_MAGIC:
        raise ConfigError("params file: bad magic (expected MLPW)")
    off = 4
    (n_layers,) = struct.unpack_from("<I", blob, off)
    off += 4
    weights = []
    biases = []
    for l in range(n_layers):
        if off + 8 > len(blob):
            raise ConfigError(f"params file: truncated at layer {l} header")
        fan_in, fan_out = struct.unpack_from("<II", blob, off)
        off += 8
        need = 8 * (fan_in * fan_out + fan_out)
        if fan_in < 1 or fan_out < 1 or off + need > len(blob):
            raise ConfigError(f"params file: truncated or invalid layer {l} ({fan_in}x{fan_out})")
        w = np.frombuffer(blob, dtype="<f8", count=fan_in * fan_out, offset=off).reshape(fan_in, fan_out)
        off += 8 * fan_in * fan_out
        b = np.frombuffer(blob, dtype="<f8", count=fan_out, offset=off).reshape(1, fan_out)
        off += 8 * fan_out
        weights.append(Matrix(w))
        biases.append(Matrix(b))
    if off != len(blob):
        raise ConfigError(f"params file: {len(blob) - off} trailing bytes")
    return Params(tuple(weights), tuple(biases))


def save_params(params: Params, path) -> None:
    with open(path, "wb") as f:
        f.write(params_to_bytes(params))


def load_params(path) -> Params:
    with open(path, "rb") as f:
        return params_from_bytes(f.read())
