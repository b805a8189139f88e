"""Speedup arithmetic, Amdahl's-law forward/inverse fits, knee detection.

All pure functions; safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import DomainError, InfeasibleSpeedupError, SlowdownError, UsageError

DEFAULT_KNEE_THRESHOLD = 0.85


def speedup(baseline_ns: float, variant_ns: float) -> float:
    """Wall-time ratio baseline/variant."""
    if baseline_ns <= 0 or variant_ns <= 0:
        raise DomainError(f"speedup: durations must be positive, got {baseline_ns} and {variant_ns}")
    return baseline_ns / variant_ns


def amdahl_speedup(p: float, s: float) -> float:
    """Overall speedup when a fraction p of the work is sped up by factor s:
    1 / ((1 - p) + p / s)."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"amdahl: parallel fraction must be in [0, 1], got {p}")
    if s < 1.0:
        raise DomainError(f"amdahl: speedup factor must be >= 1, got {s}")
    return 1.0 / ((1.0 - p) + p / s)


def estimate_parallel_fraction(observed_speedup: float, s: float) -> float:
    """Exact inverse of amdahl_speedup in p: (1 - 1/S) / (1 - 1/s)."""
    if s <= 1.0:
        raise DomainError(f"amdahl inverse: speedup factor must be > 1, got {s}")
    if observed_speedup < 1.0:
        raise SlowdownError(f"observed speedup {observed_speedup} < 1 (variant slower than baseline)")
    if observed_speedup > s:
        raise InfeasibleSpeedupError(
            f"observed speedup {observed_speedup} exceeds the enhancement factor {s} (superlinear)"
        )
    return (1.0 - 1.0 / observed_speedup) / (1.0 - 1.0 / s)


@dataclass(frozen=True)
class AmdahlFit:
    """A (p, s, S) triple consistent with S = 1 / ((1-p) + p/s)."""

    p: float
    s: float
    S: float

    def __post_init__(self):
        if abs(self.S - amdahl_speedup(self.p, self.s)) > 1e-12 * max(1.0, abs(self.S)):
            raise DomainError(f"amdahl fit: S={self.S} inconsistent with p={self.p}, s={self.s}")

    @classmethod
    def from_observed(cls, observed_speedup: float, s: float) -> "AmdahlFit":
        p = estimate_parallel_fraction(observed_speedup, s)
        return cls(p=p, s=s, S=observed_speedup)


@dataclass(frozen=True)
class KneeReport:
    """Batch-size sweep scaling analysis.

    ratios[i] is the runtime growth of pair i normalized by its batch-size
    growth; a ratio of 1 means perfectly proportional scaling and ratios
    below the threshold mark sub-linear (cheaper-than-proportional)
    intervals, read as a cache/vector-length boundary being crossed.
    """

    points: tuple[tuple[int, float], ...]
    ratios: tuple[float, ...]
    flagged_interval: tuple[int, int] | None
    boundary_estimate: float | None
    threshold: float


def detect_knee(points: Sequence[tuple[int, float]],
                threshold: float = DEFAULT_KNEE_THRESHOLD) -> KneeReport:
    """Flag the maximal contiguous run of sub-linear adjacent pairs.

    The flagged interval spans the batch sizes at the run's ends and the
    boundary estimate is their geometric mean (the log-axis midpoint).
    Ties between equally long runs resolve to the earliest.
    """
    if len(points) < 3:
        raise UsageError(f"detect_knee: need at least 3 points, got {len(points)}")
    sizes = [int(b) for b, _ in points]
    times = [float(t) for _, t in points]
    if any(b2 <= b1 for b1, b2 in zip(sizes, sizes[1:])):
        raise UsageError(f"detect_knee: batch sizes must be strictly increasing, got {sizes}")
    if any(t <= 0 for t in times):
        raise UsageError("detect_knee: runtimes must be positive")
    if threshold <= 0:
        raise UsageError(f"detect_knee: threshold must be positive, got {threshold}")
    ratios = [
        (times[i + 1] / times[i]) / (sizes[i + 1] / sizes[i])
        for i in range(len(points) - 1)
    ]
    best_start = best_len = 0
    run_start = run_len = 0
    for i, r in enumerate(ratios):
        if r < threshold:
            if run_len == 0:
                run_start = i
            run_len += 1
            if run_len > best_len:
                best_start, best_len = run_start, run_len
        else:
            run_len = 0
    if best_len == 0:
        interval = None
        estimate = None
    else:
        interval = (sizes[best_start], sizes[best_start + best_len])
        estimate = math.sqrt(interval[0] * interval[1])
    return KneeReport(
        points=tuple((b, t) for b, t in zip(sizes, times)),
        ratios=tuple(ratios),
        flagged_interval=interval,
        boundary_estimate=estimate,
        threshold=threshold,
    )
