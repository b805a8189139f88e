"""Result plumbing: config files, CSV, run artifacts, comparisons, plot data.

The CSV schema is pinned bit-exactly (header and row shape) because the
framework-baseline component emits the identical stream:

    run_id,strategy,activation,loss,batch_size,threads,epochs,repeat,phase,wall_ns

Config files are flat JSON over the documented key set; CLI flags override
file values which override defaults.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .analysis import AmdahlFit, KneeReport, detect_knee, speedup
from .bench import BenchConfig, BenchRun, Phase, PhaseStats, Summary, TimingRecord, summarize
from .errors import ComparisonError, ConfigError, DomainError
from .network import ActivationKind, LossKind, NetworkConfig, params_to_bytes
from .strategies import StrategyKind

CSV_HEADER = "run_id,strategy,activation,loss,batch_size,threads,epochs,repeat,phase,wall_ns"

CONFIG_KEYS = (
    "run_id", "strategy", "activation", "loss", "layer_widths", "learning_rate",
    "seed", "data_seed", "n_samples", "epochs", "repeats", "warmup_repeats",
    "batch_size", "threads",
)

CONFIG_DEFAULTS: dict = {
    "run_id": "run",
    "strategy": "sequential_online",
    "activation": "relu",
    "loss": "mse",
    "layer_widths": [16, 32, 1],
    "learning_rate": 0.05,
    "seed": 1,
    "data_seed": 100,
    "n_samples": 256,
    "epochs": 1000,
    "repeats": 4,
    "warmup_repeats": 1,
    "batch_size": None,
    "threads": None,
}


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _require_int(key: str, value, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    return value


def _enum_by_value(key: str, enum_cls, value):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{key}: unknown value {value!r} (expected one of: {valid})") from None


def build_bench_config(values: dict) -> BenchConfig:
    """Validate a complete flat-key mapping and build the typed config."""
    v = dict(values)
    run_id = v["run_id"]
    if not isinstance(run_id, str):
        raise ConfigError(f"run_id: expected a string, got {run_id!r}")
    strategy = _enum_by_value("strategy", StrategyKind, v["strategy"])
    activation = _enum_by_value("activation", ActivationKind, v["activation"])
    loss = _enum_by_value("loss", LossKind, v["loss"])
    widths = v["layer_widths"]
    if not isinstance(widths, (list, tuple)) or not widths:
        raise ConfigError(f"layer_widths: expected a list of widths, got {widths!r}")
    widths = tuple(_require_int("layer_widths", w) for w in widths)
    lr = v["learning_rate"]
    if isinstance(lr, bool) or not isinstance(lr, (int, float)):
        raise ConfigError(f"learning_rate: expected a number, got {lr!r}")
    network = NetworkConfig(
        layer_widths=widths,
        activation=activation,
        loss=loss,
        learning_rate=float(lr),
        seed=_require_int("seed", v["seed"], 0),
    )
    batch_size = v.get("batch_size")
    threads = v.get("threads")
    return BenchConfig(
        run_id=run_id,
        strategy=strategy,
        network=network,
        n_samples=_require_int("n_samples", v["n_samples"]),
        epochs=_require_int("epochs", v["epochs"]),
        repeats=_require_int("repeats", v["repeats"]),
        warmup_repeats=_require_int("warmup_repeats", v["warmup_repeats"]),
        data_seed=_require_int("data_seed", v["data_seed"], 0),
        batch_size=None if batch_size is None else _require_int("batch_size", batch_size),
        threads=None if threads is None else _require_int("threads", threads),
    )


def _merge_config_values(file_values: dict | None, overrides: dict | None,
                         defaults: dict | None = None) -> dict:
    merged = dict(CONFIG_DEFAULTS if defaults is None else defaults)
    for name, layer in (("config file", file_values), ("flags", overrides)):
        if not layer:
            continue
        for key, value in layer.items():
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{key}: unknown {name} key")
            merged[key] = value
    return merged


def parse_config(path: str | Path | None = None, overrides: dict | None = None,
                 defaults: dict | None = None) -> BenchConfig:
    """Config file (JSON, flat keys) + flag overrides -> validated config.

    An empty file or no file at all yields the full default protocol
    (1000 epochs x 4 repeats, one warm-up, [16, 32, 1] ReLU/MSE net).
    """
    file_values = None
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        text = p.read_text(encoding="utf-8").strip()
        if text:
            try:
                file_values = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigError(f"config file {p}: invalid JSON ({e})") from e
            if not isinstance(file_values, dict):
                raise ConfigError(f"config file {p}: expected a JSON object")
    return build_bench_config(_merge_config_values(file_values, overrides, defaults))


def config_to_flat(config: BenchConfig) -> dict:
    return {
        "run_id": config.run_id,
        "strategy": config.strategy.value,
        "activation": config.network.activation.value,
        "loss": config.network.loss.value,
        "layer_widths": list(config.network.layer_widths),
        "learning_rate": config.network.learning_rate,
        "seed": config.network.seed,
        "data_seed": config.data_seed,
        "n_samples": config.n_samples,
        "epochs": config.epochs,
        "repeats": config.repeats,
        "warmup_repeats": config.warmup_repeats,
        "batch_size": config.batch_size,
        "threads": config.threads,
    }


# --- CSV -------------------------------------------------------------------


def emit_csv(runs: Iterable[tuple[BenchConfig, Sequence[TimingRecord]]]) -> bytes:
    """Records of one or more runs as the pinned CSV schema (UTF-8, \\n)."""
    lines = [CSV_HEADER]
    for config, records in runs:
        prefix = (
            f"{config.run_id},{config.strategy.value},{config.network.activation.value},"
            f"{config.network.loss.value},"
            f"{'' if config.batch_size is None else config.batch_size},"
            f"{'' if config.threads is None else config.threads},{config.epochs}"
        )
        for r in records:
            lines.append(f"{prefix},{r.repeat_index},{r.phase.value},{r.wall_ns}")
    return ("\n".join(lines) + "\n").encode("utf-8")


@dataclass
class CsvRun:
    """One run reconstructed from CSV rows: the schema's config columns plus
    the records. Architecture/seed columns do not exist in the schema, so a
    CsvRun is a partial view of a run artifact."""

    run_id: str
    strategy: StrategyKind
    activation: ActivationKind
    loss: LossKind
    batch_size: int | None
    threads: int | None
    epochs: int
    records: list[TimingRecord] = field(default_factory=list)


def parse_csv(data: bytes) -> list[CsvRun]:
    text = data.decode("utf-8")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"csv: expected header {CSV_HEADER!r}")
    runs: dict[str, CsvRun] = {}
    for ln_no, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 10:
            raise ConfigError(f"csv line {ln_no}: expected 10 fields, got {len(parts)}")
        run_id, strategy, activation, loss, batch_size, threads, epochs, repeat, phase, wall_ns = parts
        try:
            run = CsvRun(
                run_id=run_id,
                strategy=_enum_by_value("strategy", StrategyKind, strategy),
                activation=_enum_by_value("activation", ActivationKind, activation),
                loss=_enum_by_value("loss", LossKind, loss),
                batch_size=int(batch_size) if batch_size else None,
                threads=int(threads) if threads else None,
                epochs=int(epochs),
            )
            record = TimingRecord(run_id, int(repeat), Phase(phase), int(wall_ns))
        except (ValueError, ConfigError) as e:
            raise ConfigError(f"csv line {ln_no}: {e}") from None
        existing = runs.setdefault(run_id, run)
        for attr in ("strategy", "activation", "loss", "batch_size", "threads", "epochs"):
            if getattr(existing, attr) != getattr(run, attr):
                raise ConfigError(f"csv line {ln_no}: {attr} inconsistent within run {run_id!r}")
        existing.records.append(record)
    return list(runs.values())


# --- run artifacts ----------------------------------------------------------


@dataclass
class RunArtifact:
    """Everything persisted for one benchmark run. The params digest is
    64-bit FNV-1a over the exported parameter bytes and is stable across
    repeats of the same seeded config."""

    config: BenchConfig
    records: list[TimingRecord]
    summary: Summary
    params_digest: int
    initial_loss: float
    final_loss: float

    @classmethod
    def from_bench_run(cls, run: BenchRun) -> "RunArtifact":
        return cls(
            config=run.config,
            records=list(run.records),
            summary=summarize(run.records),
            params_digest=fnv1a64(params_to_bytes(run.final_params)),
            initial_loss=run.initial_loss,
            final_loss=run.final_loss,
        )

    def to_json_dict(self) -> dict:
        return {
            "config": config_to_flat(self.config),
            "records": [
                {"run_id": r.run_id, "repeat": r.repeat_index, "phase": r.phase.value, "wall_ns": r.wall_ns}
                for r in self.records
            ],
            "summary": {
                phase.value: {
                    "mean_ns": stats.mean_ns,
                    "min_ns": stats.min_ns,
                    "max_ns": stats.max_ns,
                    "stddev_ns": stats.stddev_ns,
                }
                for (_, phase), stats in self.summary.items()
            },
            "params_digest": f"{self.params_digest:016x}",
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RunArtifact":
        try:
            config = build_bench_config({**CONFIG_DEFAULTS, **doc["config"]})
            records = [
                TimingRecord(r["run_id"], r["repeat"], Phase(r["phase"]), r["wall_ns"])
                for r in doc["records"]
            ]
            summary = {
                (config.run_id, Phase(phase)): PhaseStats(
                    mean_ns=s["mean_ns"], min_ns=s["min_ns"], max_ns=s["max_ns"], stddev_ns=s["stddev_ns"]
                )
                for phase, s in doc["summary"].items()
            }
            return cls(
                config=config,
                records=records,
                summary=summary,
                params_digest=int(doc["params_digest"], 16),
                initial_loss=doc["initial_loss"],
                final_loss=doc["final_loss"],
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"artifact json: {e!r}") from e


# --- comparisons ------------------------------------------------------------


@dataclass(frozen=True)
class _RunView:
    """Normalized view of either a RunArtifact (full config) or a CsvRun
    (partial: unknown fields are None and cannot mismatch)."""

    run_id: str
    strategy: StrategyKind
    activation: ActivationKind
    loss: LossKind
    batch_size: int | None
    threads: int | None
    epochs: int
    layer_widths: tuple[int, ...] | None
    data_seed: int | None
    n_samples: int | None
    summary: Summary


def _as_view(run) -> _RunView:
    if isinstance(run, RunArtifact):
        c = run.config
        return _RunView(c.run_id, c.strategy, c.network.activation, c.network.loss,
                        c.batch_size, c.threads, c.epochs, c.network.layer_widths,
                        c.data_seed, c.n_samples, run.summary)
    if isinstance(run, CsvRun):
        return _RunView(run.run_id, run.strategy, run.activation, run.loss,
                        run.batch_size, run.threads, run.epochs, None, None, None,
                        summarize(run.records))
    raise ComparisonError(f"cannot compare object of type {type(run).__name__}")


_COMPARABLE_FIELDS = ("layer_widths", "data_seed", "activation", "loss", "epochs")


def _check_comparable(baseline: _RunView, variant: _RunView) -> None:
    for name in _COMPARABLE_FIELDS:
        b, v = getattr(baseline, name), getattr(variant, name)
        if b is not None and v is not None and b != v:
            raise ComparisonError(
                f"run {variant.run_id!r}: {name} {v!r} differs from baseline {b!r}"
            )


def _stat(view: _RunView, phase: Phase, which: str) -> float:
    key = (view.run_id, phase)
    if key not in view.summary:
        raise ComparisonError(f"run {view.run_id!r}: no {phase.value} records")
    return getattr(view.summary[key], which)


@dataclass
class VariantComparison:
    run_id: str
    strategy: StrategyKind
    batch_size: int | None
    threads: int | None
    speedup: dict[Phase, float]
    speedup_mean: dict[Phase, float]
    amdahl: AmdahlFit | None
    amdahl_note: str | None


@dataclass
class ComparisonReport:
    baseline_run_id: str
    variants: list[VariantComparison]
    knee: KneeReport | None

    def to_json_dict(self) -> dict:
        return {
            "baseline_run_id": self.baseline_run_id,
            "variants": [
                {
                    "run_id": v.run_id,
                    "strategy": v.strategy.value,
                    "batch_size": v.batch_size,
                    "threads": v.threads,
                    "speedup": {p.value: s for p, s in v.speedup.items()},
                    "speedup_mean": {p.value: s for p, s in v.speedup_mean.items()},
                    "amdahl": None if v.amdahl is None else {"p": v.amdahl.p, "s": v.amdahl.s, "S": v.amdahl.S},
                    "amdahl_note": v.amdahl_note,
                }
                for v in self.variants
            ],
            "knee": None
            if self.knee is None
            else {
                "points": [[b, t] for b, t in self.knee.points],
                "ratios": list(self.knee.ratios),
                "flagged_interval": None if self.knee.flagged_interval is None else list(self.knee.flagged_interval),
                "boundary_estimate": self.knee.boundary_estimate,
                "threshold": self.knee.threshold,
            },
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ComparisonReport":
        try:
            variants = [
                VariantComparison(
                    run_id=v["run_id"],
                    strategy=StrategyKind(v["strategy"]),
                    batch_size=v["batch_size"],
                    threads=v["threads"],
                    speedup={Phase(p): s for p, s in v["speedup"].items()},
                    speedup_mean={Phase(p): s for p, s in v["speedup_mean"].items()},
                    amdahl=None if v["amdahl"] is None else AmdahlFit(**v["amdahl"]),
                    amdahl_note=v.get("amdahl_note"),
                )
                for v in doc["variants"]
            ]
            knee = None
            if doc.get("knee") is not None:
                k = doc["knee"]
                knee = KneeReport(
                    points=tuple((int(b), float(t)) for b, t in k["points"]),
                    ratios=tuple(k["ratios"]),
                    flagged_interval=None if k["flagged_interval"] is None else tuple(k["flagged_interval"]),
                    boundary_estimate=k["boundary_estimate"],
                    threshold=k["threshold"],
                )
            return cls(baseline_run_id=doc["baseline_run_id"], variants=variants, knee=knee)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"report json: {e!r}") from e


def compare_runs(baseline, variants: Sequence) -> ComparisonReport:
    """Per-phase and total speedups of each variant over the baseline
    (min-over-repeats statistic, mean also reported); an Amdahl fit for
    threaded variants (absent, with a note, when the observed speedup is
    outside the fittable range); a knee report when the variants form a
    vector-length batch sweep of at least 3 sizes.

    A batch family supports knee detection only when the batch is the
    vector length being swept (each run's dataset is one full batch):
    per-epoch time then grows with batch size and departures from
    proportionality mark a cache/vector boundary. For runs reconstructed
    from CSV the dataset size is unknown and the family is taken at face
    value.
    """
    base = _as_view(baseline)
    entries: list[VariantComparison] = []
    batch_points: list[tuple[int, float]] = []
    vector_length_family = True
    if base.strategy is StrategyKind.BATCH_VECTORIZED and base.batch_size is not None:
        batch_points.append((base.batch_size, _stat(base, Phase.TOTAL, "min_ns") / base.epochs))
        if base.n_samples is not None and base.n_samples != base.batch_size:
            vector_length_family = False
    for variant in variants:
        view = _as_view(variant)
        _check_comparable(base, view)
        sp = {p: speedup(_stat(base, p, "min_ns"), _stat(view, p, "min_ns")) for p in Phase}
        sp_mean = {p: speedup(_stat(base, p, "mean_ns"), _stat(view, p, "mean_ns")) for p in Phase}
        fit = None
        note = None
        if view.threads is not None and view.threads > 1:
            try:
                fit = AmdahlFit.from_observed(sp[Phase.TOTAL], float(view.threads))
            except DomainError as e:
                note = str(e)
        entries.append(VariantComparison(view.run_id, view.strategy, view.batch_size,
                                         view.threads, sp, sp_mean, fit, note))
        if view.strategy is StrategyKind.BATCH_VECTORIZED and view.batch_size is not None:
            batch_points.append((view.batch_size, _stat(view, Phase.TOTAL, "min_ns") / view.epochs))
            if view.n_samples is not None and view.n_samples != view.batch_size:
                vector_length_family = False
    knee = None
    if len(batch_points) >= 3 and vector_length_family:
        knee = detect_knee(sorted(batch_points))
    return ComparisonReport(baseline_run_id=base.run_id, variants=entries, knee=knee)


# --- activation comparison table --------------------------------------------


def activation_comparison(runs: Sequence) -> list[dict]:
    """Pair up runs that differ only in activation and tabulate per-phase
    min times and the relu/sigmoid time ratio, one row group per strategy
    configuration."""
    views = [_as_view(r) for r in runs]
    by_key: dict[tuple, dict[ActivationKind, _RunView]] = {}
    for v in views:
        key = (v.strategy, v.batch_size, v.threads, v.epochs, v.loss)
        by_key.setdefault(key, {})[v.activation] = v
    rows: list[dict] = []
    for (strategy, batch_size, threads, _, _), pair in by_key.items():
        if ActivationKind.RELU not in pair or ActivationKind.SIGMOID not in pair:
            continue
        relu, sigmoid = pair[ActivationKind.RELU], pair[ActivationKind.SIGMOID]
        for phase in Phase:
            relu_ns = _stat(relu, phase, "min_ns")
            sigmoid_ns = _stat(sigmoid, phase, "min_ns")
            rows.append({
                "strategy": strategy.value,
                "batch_size": batch_size,
                "threads": threads,
                "phase": phase.value,
                "relu_min_ns": relu_ns,
                "sigmoid_min_ns": sigmoid_ns,
                "relu_over_sigmoid": relu_ns / sigmoid_ns if sigmoid_ns else float("nan"),
            })
    return rows


def render_activation_table(rows: Sequence[dict]) -> str:
    header = f"{'strategy':<22} {'phase':<9} {'relu_min_ns':>14} {'sigmoid_min_ns':>15} {'relu/sigmoid':>13}"
    lines = [header, "-" * len(header)]
    for r in rows:
        label = r["strategy"]
        if r["batch_size"] is not None:
            label += f"(B={r['batch_size']})"
        if r["threads"] is not None:
            label += f"(t={r['threads']})"
        lines.append(
            f"{label:<22} {r['phase']:<9} {r['relu_min_ns']:>14.0f} {r['sigmoid_min_ns']:>15.0f} "
            f"{r['relu_over_sigmoid']:>13.3f}"
        )
    return "\n".join(lines)


# --- plot data ---------------------------------------------------------------


def emit_plot_data(report: ComparisonReport) -> bytes:
    """Plot-ready JSON: named series of (x, y) pairs.

    Variant series use the sweep coordinate when one exists (batch size or
    thread count) and the variant ordinal otherwise; the knee interval
    series carries exactly its two endpoint batch sizes.
    """
    series: list[dict] = []

    def x_of(v: VariantComparison, ordinal: int) -> float:
        if v.batch_size is not None:
            return float(v.batch_size)
        if v.threads is not None:
            return float(v.threads)
        return float(ordinal)

    if report.variants:
        for phase in Phase:
            pts = [[x_of(v, i + 1), v.speedup[phase]] for i, v in enumerate(report.variants)]
            series.append({"name": f"speedup_{phase.value}", "points": pts})
        threaded = [v for v in report.variants if v.threads is not None]
        if threaded:
            series.append({
                "name": "speedup_vs_threads",
                "points": [[float(v.threads), v.speedup[Phase.TOTAL]] for v in threaded],
            })
            fitted = [v for v in threaded if v.amdahl is not None]
            if fitted:
                series.append({
                    "name": "parallel_fraction_vs_threads",
                    "points": [[float(v.threads), v.amdahl.p] for v in fitted],
                })
        batched = [v for v in report.variants if v.batch_size is not None]
        if batched:
            series.append({
                "name": "speedup_vs_batch",
                "points": [[float(v.batch_size), v.speedup[Phase.TOTAL]] for v in batched],
            })
    if report.knee is not None:
        series.append({
            "name": "runtime_vs_batch",
            "points": [[float(b), t] for b, t in report.knee.points],
        })
        if report.knee.flagged_interval is not None:
            times = dict(report.knee.points)
            lo, hi = report.knee.flagged_interval
            series.append({
                "name": "knee_interval",
                "points": [[float(lo), times[lo]], [float(hi), times[hi]]],
            })
    return json.dumps({"series": series}, indent=2).encode("utf-8")
