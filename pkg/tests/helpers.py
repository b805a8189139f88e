"""Shared test oracles: central finite differences over loss_value, and an
independently written SplitMix64 reference. These stay deliberately separate
from the library implementations they check."""

import numpy as np

from mlpbench.linalg import Matrix
from mlpbench.network import NetworkConfig, Params, forward, loss_value

MASK64 = 0xFFFFFFFFFFFFFFFF


def reference_splitmix64(seed):
    """Independent SplitMix64 oracle (textbook constants, written out)."""
    state = seed
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield z ^ (z >> 31)


def perturbed(params: Params, layer: int, which: str, i: int, j: int, eps: float) -> Params:
    mats = list(getattr(params, which))
    a = mats[layer].array.copy()
    a[i, j] += eps
    mats[layer] = Matrix(a)
    if which == "weights":
        return Params(tuple(mats), params.biases)
    return Params(params.weights, tuple(mats))


def numerical_grads(params: Params, x: Matrix, target: Matrix, config: NetworkConfig,
                    h: float = 1e-5) -> Params:
    """Central finite differences of loss_value over every parameter entry.

    Uses only forward + loss_value, keeping the oracle independent of the
    backward implementation it checks.
    """

    def loss_at(p: Params) -> float:
        out, _ = forward(p, x, config)
        return loss_value(config.loss, out, target)

    d_weights = []
    d_biases = []
    for which, dest in (("weights", d_weights), ("biases", d_biases)):
        for l, m in enumerate(getattr(params, which)):
            grad = np.zeros_like(m.array)
            for i in range(m.rows):
                for j in range(m.cols):
                    up = loss_at(perturbed(params, l, which, i, j, +h))
                    down = loss_at(perturbed(params, l, which, i, j, -h))
                    grad[i, j] = (up - down) / (2.0 * h)
            dest.append(Matrix(grad))
    return Params(tuple(d_weights), tuple(d_biases))


def max_grad_error(analytic: Params, numeric: Params) -> float:
    """Worst relative disagreement, with a unit floor so near-zero entries
    compare absolutely."""
    worst = 0.0
    for a, n in zip(analytic.weights + analytic.biases, numeric.weights + numeric.biases):
        denom = np.maximum(1.0, np.maximum(np.abs(a.array), np.abs(n.array)))
        worst = max(worst, float(np.max(np.abs(a.array - n.array) / denom)))
    return worst
