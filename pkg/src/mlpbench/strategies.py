"""The four training execution schemes under comparison.

All four are deterministic given (seed, thread count, batch size):
sharding is contiguous in index order, reductions run in shard-index
order, and no shuffling happens between epochs.

Timing protocol: phase counters wrap every forward call, every backward
call and every apply_update call, nothing else. In the threaded schemes
each worker keeps its own counters and an epoch contributes the counters
of its straggler (the worker with the largest phase sum), so the
Forward+Backward+Update <= Total invariant survives concurrency;
coordinator-side reduction/averaging and the per-epoch loss probes are
deliberately left to the run's total time.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from time import perf_counter_ns

import numpy as np

from .errors import ConfigError, DomainError, NumericDivergenceError
from .linalg import Matrix
from .network import (
    LossKind,
    NetworkConfig,
    Params,
    apply_update,
    backward,
    forward,
    init_params,
    loss_value,
    params_add,
    params_scale,
    params_sub,
)
from .rng import SplitMix64

_MASK64 = 0xFFFFFFFFFFFFFFFF


class StrategyKind(Enum):
    SEQUENTIAL_ONLINE = "sequential_online"
    BATCH_VECTORIZED = "batch_vectorized"
    THREAD_MAP_REDUCE = "thread_map_reduce"
    THREAD_FULL_PIPELINE = "thread_full_pipeline"


@dataclass(frozen=True)
class TrainingSet:
    inputs: Matrix
    targets: Matrix
    seed: int

    def __post_init__(self):
        if self.inputs.rows != self.targets.rows:
            raise ConfigError(f"dataset: {self.inputs.rows} inputs vs {self.targets.rows} targets")

    @property
    def n(self) -> int:
        return self.inputs.rows


@dataclass
class PhaseTimings:
    """Accumulated per-phase wall time for one training run, plus the
    per-epoch mean training loss observed along the way."""

    forward_ns: int = 0
    backward_ns: int = 0
    update_ns: int = 0
    epoch_losses: list[float] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.epoch_losses is None:
            self.epoch_losses = []


def make_dataset(n: int, config: NetworkConfig, data_seed: int) -> TrainingSet:
    """Synthetic teacher-labeled dataset.

    Inputs are uniform in [-1, 1) from SplitMix64(data_seed), drawn
    sample-major. Targets come from a fixed teacher network initialized
    with seed data_seed+1 and the same architecture; for BCE the teacher
    outputs are thresholded at their per-column median, which yields
    balanced binary labels.
    """
    if n < 1:
        raise ConfigError(f"n_samples: must be >= 1, got {n}")
    gen = SplitMix64(data_seed)
    m = config.layer_widths[0]
    inputs = Matrix.from_flat(n, m, (2.0 * gen.next_float() - 1.0 for _ in range(n * m)))
    teacher = init_params(config.with_seed((data_seed + 1) & _MASK64))
    outputs, _ = forward(teacher, inputs, config)
    if config.loss is LossKind.BCE:
        med = np.median(outputs.array, axis=0, keepdims=True)
        targets = Matrix((outputs.array > med).astype(np.float64))
    else:
        targets = outputs
    return TrainingSet(inputs, targets, data_seed)


def _probe_loss(kind: LossKind, pred: Matrix, target: Matrix, epoch: int) -> float:
    try:
        return loss_value(kind, pred, target)
    except DomainError as e:
        raise NumericDivergenceError(epoch, str(e)) from e


def _check_epoch_loss(loss: float, epoch: int) -> None:
    if not math.isfinite(loss):
        raise NumericDivergenceError(epoch)


def _batch_bounds(n: int, batch_size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + batch_size, n)) for lo in range(0, n, batch_size)]


def _shard_bounds(n: int, shards: int) -> list[tuple[int, int]]:
    """Balanced contiguous shards; with shards > n the tail shards are empty."""
    base, rem = divmod(n, shards)
    bounds = []
    lo = 0
    for i in range(shards):
        hi = lo + base + (1 if i < rem else 0)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def _train_batched(params: Params, data: TrainingSet, batch_size: int, epochs: int,
                   config: NetworkConfig) -> tuple[Params, PhaseTimings]:
    n = data.n
    bounds = _batch_bounds(n, batch_size)
    t = PhaseTimings()
    for epoch in range(epochs):
        loss_acc = 0.0
        for lo, hi in bounds:
            x = data.inputs.row_slice(lo, hi)
            y = data.targets.row_slice(lo, hi)
            t0 = perf_counter_ns()
            out, cache = forward(params, x, config)
            t.forward_ns += perf_counter_ns() - t0
            loss_acc += _probe_loss(config.loss, out, y, epoch) * (hi - lo)
            t0 = perf_counter_ns()
            grads = backward(params, cache, y, config)
            t.backward_ns += perf_counter_ns() - t0
            t0 = perf_counter_ns()
            params = apply_update(params, grads, config.learning_rate)
            t.update_ns += perf_counter_ns() - t0
        epoch_loss = loss_acc / n
        _check_epoch_loss(epoch_loss, epoch)
        t.epoch_losses.append(epoch_loss)
    return params, t


def train_sequential_online(params: Params, data: TrainingSet, epochs: int,
                            config: NetworkConfig) -> tuple[Params, PhaseTimings]:
    """Baseline: one forward/backward/update per sample, in index order.

    Definitionally the same computation as batch size 1, and implemented
    as such so the two are bit-identical.
    """
    if epochs < 1:
        raise ConfigError(f"epochs: must be >= 1, got {epochs}")
    return _train_batched(params, data, 1, epochs, config)


def train_batch_vectorized(params: Params, data: TrainingSet, batch_size: int, epochs: int,
                           config: NetworkConfig) -> tuple[Params, PhaseTimings]:
    """Mini-batch gradient descent over stacked samples: one forward, one
    backward and one update per batch. The short final batch uses its true
    size in the 1/N normalization."""
    if epochs < 1:
        raise ConfigError(f"epochs: must be >= 1, got {epochs}")
    if batch_size < 1 or batch_size > data.n:
        raise ConfigError(f"batch_size: must be in [1, {data.n}], got {batch_size}")
    return _train_batched(params, data, batch_size, epochs, config)


def _shard_gradients(snapshot: Params, data: TrainingSet, lo: int, hi: int,
                     config: NetworkConfig, epoch: int):
    """Map step: mean gradient, phase times and loss for one shard."""
    x = data.inputs.row_slice(lo, hi)
    y = data.targets.row_slice(lo, hi)
    t0 = perf_counter_ns()
    out, cache = forward(snapshot, x, config)
    f_ns = perf_counter_ns() - t0
    loss = _probe_loss(config.loss, out, y, epoch)
    t0 = perf_counter_ns()
    grads = backward(snapshot, cache, y, config)
    b_ns = perf_counter_ns() - t0
    return grads, hi - lo, f_ns, b_ns, loss


def train_thread_map_reduce(params: Params, data: TrainingSet, threads: int, epochs: int,
                            config: NetworkConfig, *,
                            pool: ThreadPoolExecutor | None = None) -> tuple[Params, PhaseTimings]:
    """Data-parallel full-batch GD: workers compute shard gradients against
    a frozen snapshot, the coordinator reduces shard sums in shard-index
    order, divides by N and applies a single update per epoch."""
    if epochs < 1:
        raise ConfigError(f"epochs: must be >= 1, got {epochs}")
    if threads < 1:
        raise ConfigError(f"threads: must be >= 1, got {threads}")
    n = data.n
    shards = [(lo, hi) for lo, hi in _shard_bounds(n, threads) if hi > lo]
    own_pool = pool is None
    if own_pool:
        pool = ThreadPoolExecutor(max_workers=threads)
    t = PhaseTimings()
    try:
        for epoch in range(epochs):
            snapshot = params
            futures = [pool.submit(_shard_gradients, snapshot, data, lo, hi, config, epoch)
                       for lo, hi in shards]
            results = [f.result() for f in futures]
            straggler = max(results, key=lambda r: r[2] + r[3])
            t.forward_ns += straggler[2]
            t.backward_ns += straggler[3]
            total: Params | None = None
            loss_acc = 0.0
            for grads_mean, shard_n, _, _, shard_loss in results:
                shard_sum = params_scale(grads_mean, float(shard_n))
                total = shard_sum if total is None else params_add(total, shard_sum)
                loss_acc += shard_loss * shard_n
            grad = params_scale(total, 1.0 / n)
            t0 = perf_counter_ns()
            params = apply_update(params, grad, config.learning_rate)
            t.update_ns += perf_counter_ns() - t0
            epoch_loss = loss_acc / n
            _check_epoch_loss(epoch_loss, epoch)
            t.epoch_losses.append(epoch_loss)
    finally:
        if own_pool:
            pool.shutdown(wait=True)
    return params, t


def _local_sgd(snapshot: Params, data: TrainingSet, lo: int, hi: int,
               config: NetworkConfig, epoch: int):
    """One worker's complete process: online SGD over its shard."""
    params = snapshot
    f_ns = b_ns = u_ns = 0
    loss_acc = 0.0
    for i in range(lo, hi):
        x = data.inputs.row_slice(i, i + 1)
        y = data.targets.row_slice(i, i + 1)
        t0 = perf_counter_ns()
        out, cache = forward(params, x, config)
        f_ns += perf_counter_ns() - t0
        loss_acc += _probe_loss(config.loss, out, y, epoch)
        t0 = perf_counter_ns()
        grads = backward(params, cache, y, config)
        b_ns += perf_counter_ns() - t0
        t0 = perf_counter_ns()
        params = apply_update(params, grads, config.learning_rate)
        u_ns += perf_counter_ns() - t0
    return params, f_ns, b_ns, u_ns, loss_acc


def train_thread_full_pipeline(params: Params, data: TrainingSet, threads: int, epochs: int,
                               config: NetworkConfig, *,
                               pool: ThreadPoolExecutor | None = None) -> tuple[Params, PhaseTimings]:
    """Every worker owns a private parameter copy and runs the complete
    per-sample train loop over its shard; at the epoch barrier the
    coordinator replaces the parameters with the arithmetic mean of all
    thread-local copies (reduction in shard-index order, computed in delta
    form around the snapshot). Workers with empty shards contribute the
    unchanged snapshot to the mean."""
    if epochs < 1:
        raise ConfigError(f"epochs: must be >= 1, got {epochs}")
    if threads < 1:
        raise ConfigError(f"threads: must be >= 1, got {threads}")
    n = data.n
    shards = _shard_bounds(n, threads)
    own_pool = pool is None
    if own_pool:
        pool = ThreadPoolExecutor(max_workers=threads)
    t = PhaseTimings()
    try:
        for epoch in range(epochs):
            snapshot = params
            futures = []
            for lo, hi in shards:
                if hi > lo:
                    futures.append(pool.submit(_local_sgd, snapshot, data, lo, hi, config, epoch))
                else:
                    futures.append(None)
            results = []
            for fut in futures:
                if fut is None:
                    results.append((snapshot, 0, 0, 0, 0.0))
                else:
                    results.append(fut.result())
            straggler = max(results, key=lambda r: r[1] + r[2] + r[3])
            t.forward_ns += straggler[1]
            t.backward_ns += straggler[2]
            t.update_ns += straggler[3]
            if threads == 1:
                params = results[0][0]
            else:
                # mean in delta form: exact when every local equals the
                # snapshot (e.g. lr=0), better conditioned otherwise
                acc = params_sub(results[0][0], snapshot)
                for local, *_ in results[1:]:
                    acc = params_add(acc, params_sub(local, snapshot))
                params = params_add(snapshot, params_scale(acc, 1.0 / threads))
            loss_acc = sum(r[4] for r in results)
            epoch_loss = loss_acc / n
            _check_epoch_loss(epoch_loss, epoch)
            t.epoch_losses.append(epoch_loss)
    finally:
        if own_pool:
            pool.shutdown(wait=True)
    return params, t
