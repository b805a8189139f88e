"""Timing protocol: warm-up, repeats, phase-resolved records, summaries.

The default end-to-end protocol is 1000 epochs x 4 repeats; the
phase-split protocol is 100 epochs x 4 repeats. One warm-up run is
executed and discarded before the timed repeats (configurable down to 0).
The harness itself is single-threaded; only strategies spawn workers, and
their pools are built before the run clock starts and torn down after it
stops.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from time import perf_counter_ns

from .errors import ConfigError, UsageError
from .network import NetworkConfig, Params, forward, init_params, loss_value
from .strategies import (
    PhaseTimings,
    StrategyKind,
    TrainingSet,
    make_dataset,
    train_batch_vectorized,
    train_sequential_online,
    train_thread_full_pipeline,
    train_thread_map_reduce,
)

_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class Protocol:
    epochs: int
    repeats: int


END_TO_END_PROTOCOL = Protocol(epochs=1000, repeats=4)
PHASE_SPLIT_PROTOCOL = Protocol(epochs=100, repeats=4)
DEFAULT_WARMUP_REPEATS = 1


class Phase(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"
    UPDATE = "update"
    TOTAL = "total"


@dataclass(frozen=True)
class BenchConfig:
    run_id: str
    strategy: StrategyKind
    network: NetworkConfig
    n_samples: int = 256
    epochs: int = END_TO_END_PROTOCOL.epochs
    repeats: int = END_TO_END_PROTOCOL.repeats
    warmup_repeats: int = DEFAULT_WARMUP_REPEATS
    data_seed: int = 100
    batch_size: int | None = None
    threads: int | None = None

    def __post_init__(self):
        if not self.run_id:
            raise ConfigError("run_id: must be non-empty")
        # keeps the CSV schema quoting-free
        if not re.fullmatch(r"[A-Za-z0-9_.\-]+", self.run_id):
            raise ConfigError(f"run_id: only [A-Za-z0-9_.-] allowed, got {self.run_id!r}")
        if self.n_samples < 1:
            raise ConfigError(f"n_samples: must be >= 1, got {self.n_samples}")
        if self.epochs < 1:
            raise ConfigError(f"epochs: must be >= 1, got {self.epochs}")
        if self.repeats < 1:
            raise ConfigError(f"repeats: must be >= 1, got {self.repeats}")
        if self.warmup_repeats < 0:
            raise ConfigError(f"warmup_repeats: must be >= 0, got {self.warmup_repeats}")
        if not 0 <= self.data_seed <= _MASK64:
            raise ConfigError(f"data_seed: must be an unsigned 64-bit integer, got {self.data_seed}")
        if self.strategy is StrategyKind.BATCH_VECTORIZED:
            if self.batch_size is None:
                raise ConfigError("batch_size: required for batch_vectorized")
            if self.batch_size < 1:
                raise ConfigError(f"batch_size: must be >= 1, got {self.batch_size}")
            if self.batch_size > self.n_samples:
                raise ConfigError(f"batch_size: {self.batch_size} exceeds n_samples {self.n_samples}")
        elif self.batch_size is not None:
            raise ConfigError(f"batch_size: not applicable to {self.strategy.value}")
        if self.strategy in (StrategyKind.THREAD_MAP_REDUCE, StrategyKind.THREAD_FULL_PIPELINE):
            if self.threads is None:
                raise ConfigError("threads: required for thread strategies")
            if self.threads < 1:
                raise ConfigError(f"threads: must be >= 1, got {self.threads}")
        elif self.threads is not None:
            raise ConfigError(f"threads: not applicable to {self.strategy.value}")


@dataclass(frozen=True)
class TimingRecord:
    run_id: str
    repeat_index: int
    phase: Phase
    wall_ns: int

    def __post_init__(self):
        if self.wall_ns < 0:
            raise UsageError(f"wall_ns: negative duration {self.wall_ns}")
        if self.repeat_index < 0:
            raise UsageError(f"repeat_index: must be >= 0, got {self.repeat_index}")


def _repeat_records(run_id: str, repeat: int, t: PhaseTimings, total_ns: int) -> list[TimingRecord]:
    """Build the four records for one repeat, asserting the phase-sum bound."""
    phase_sum = t.forward_ns + t.backward_ns + t.update_ns
    if phase_sum > total_ns:
        raise UsageError(
            f"phase sum {phase_sum}ns exceeds total {total_ns}ns for repeat {repeat} of {run_id}"
        )
    return [
        TimingRecord(run_id, repeat, Phase.FORWARD, t.forward_ns),
        TimingRecord(run_id, repeat, Phase.BACKWARD, t.backward_ns),
        TimingRecord(run_id, repeat, Phase.UPDATE, t.update_ns),
        TimingRecord(run_id, repeat, Phase.TOTAL, total_ns),
    ]


@dataclass
class BenchRun:
    """Everything a benchmark run produced: records plus the trained state
    needed by reports and the parity contract."""

    config: BenchConfig
    records: list[TimingRecord]
    final_params: Params
    initial_loss: float
    final_loss: float


def _execute(config: BenchConfig, data: TrainingSet,
             pool: ThreadPoolExecutor | None) -> tuple[Params, PhaseTimings, int]:
    t0 = perf_counter_ns()
    params = init_params(config.network)
    if config.strategy is StrategyKind.SEQUENTIAL_ONLINE:
        params, timings = train_sequential_online(params, data, config.epochs, config.network)
    elif config.strategy is StrategyKind.BATCH_VECTORIZED:
        params, timings = train_batch_vectorized(params, data, config.batch_size, config.epochs, config.network)
    elif config.strategy is StrategyKind.THREAD_MAP_REDUCE:
        params, timings = train_thread_map_reduce(params, data, config.threads, config.epochs,
                                                  config.network, pool=pool)
    else:
        params, timings = train_thread_full_pipeline(params, data, config.threads, config.epochs,
                                                     config.network, pool=pool)
    total_ns = perf_counter_ns() - t0
    return params, timings, total_ns


def run_benchmark_full(config: BenchConfig) -> BenchRun:
    """Warm-up runs (discarded), then `repeats` timed runs, each re-seeded
    identically. Dataset construction, pool construction and the initial/
    final loss evaluations stay outside every timed span."""
    data = make_dataset(config.n_samples, config.network, config.data_seed)
    threaded = config.strategy in (StrategyKind.THREAD_MAP_REDUCE, StrategyKind.THREAD_FULL_PIPELINE)
    records: list[TimingRecord] = []
    final_params: Params | None = None
    for _ in range(config.warmup_repeats):
        pool = ThreadPoolExecutor(max_workers=config.threads) if threaded else None
        try:
            _execute(config, data, pool)
        finally:
            if pool is not None:
                pool.shutdown(wait=True)
    for repeat in range(config.repeats):
        pool = ThreadPoolExecutor(max_workers=config.threads) if threaded else None
        try:
            params, timings, total_ns = _execute(config, data, pool)
        finally:
            if pool is not None:
                pool.shutdown(wait=True)
        records.extend(_repeat_records(config.run_id, repeat, timings, total_ns))
        final_params = params
    init = init_params(config.network)
    initial_loss = loss_value(config.network.loss, forward(init, data.inputs, config.network)[0], data.targets)
    final_loss = loss_value(config.network.loss, forward(final_params, data.inputs, config.network)[0], data.targets)
    return BenchRun(config, records, final_params, initial_loss, final_loss)


def run_benchmark(config: BenchConfig) -> list[TimingRecord]:
    return run_benchmark_full(config).records


@dataclass(frozen=True)
class PhaseStats:
    mean_ns: float
    min_ns: int
    max_ns: int
    stddev_ns: float

    def __post_init__(self):
        if not (self.min_ns <= self.mean_ns <= self.max_ns) or self.stddev_ns < 0:
            raise UsageError("summary stats violate min <= mean <= max, stddev >= 0")


Summary = dict[tuple[str, Phase], PhaseStats]


def summarize(records: list[TimingRecord]) -> Summary:
    """Grouped statistics per (run_id, phase); stddev is the population
    standard deviation over repeats."""
    if not records:
        raise UsageError("summarize: no records")
    groups: dict[tuple[str, Phase], list[int]] = {}
    for r in records:
        groups.setdefault((r.run_id, r.phase), []).append(r.wall_ns)
    out: Summary = {}
    for key, vals in groups.items():
        mean = sum(vals) / len(vals)
        var = sum((v - mean) ** 2 for v in vals) / len(vals)
        out[key] = PhaseStats(mean_ns=mean, min_ns=min(vals), max_ns=max(vals), stddev_ns=math.sqrt(var))
    return out
