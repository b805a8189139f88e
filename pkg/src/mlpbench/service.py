"""FastAPI service wrapping the benchmark lab.

Errors surface as a structured envelope {"error": {"kind", "message"}}
so thin clients can map them onto the documented exit codes
(config/usage -> 2, divergence -> 3, comparison -> 4).
"""

from __future__ import annotations

import base64
import json
import os

import psutil
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import __version__
from .analysis import amdahl_speedup, estimate_parallel_fraction
from .bench import BenchConfig, run_benchmark_full
from .errors import (
    ComparisonError,
    ConfigError,
    DomainError,
    MlpBenchError,
    NumericDivergenceError,
    ShapeError,
    UsageError,
)
from .network import params_to_bytes
from .report import (
    CONFIG_DEFAULTS,
    ComparisonReport,
    RunArtifact,
    activation_comparison,
    build_bench_config,
    compare_runs,
    emit_csv,
    emit_plot_data,
    parse_config,
    parse_csv,
    render_activation_table,
)
from .schemas import (
    AmdahlRequest,
    AmdahlResponse,
    AnalyzeRequest,
    AnalyzeResponse,
    BatchSweepRequest,
    HealthResponse,
    ParallelFractionRequest,
    ParallelFractionResponse,
    PlotDataRequest,
    PlotDataResponse,
    RunRequest,
    RunResponse,
    SweepResponse,
    ThreadsSweepRequest,
)

app = FastAPI(title="mlpbench", version=__version__)


def _error_kind(exc: MlpBenchError) -> tuple[str, int]:
    if isinstance(exc, NumericDivergenceError):
        return "divergence", 422
    if isinstance(exc, ComparisonError):
        return "comparison", 409
    if isinstance(exc, (ConfigError, UsageError)):
        return "config", 400
    if isinstance(exc, (DomainError, ShapeError)):
        return "domain", 400
    return "internal", 500


@app.exception_handler(MlpBenchError)
async def _handle_lib_errors(request: Request, exc: MlpBenchError) -> JSONResponse:
    kind, status = _error_kind(exc)
    return JSONResponse(status_code=status, content={"error": {"kind": kind, "message": str(exc)}})


@app.exception_handler(RequestValidationError)
async def _handle_validation_errors(request: Request, exc: RequestValidationError) -> JSONResponse:
    first = exc.errors()[0] if exc.errors() else {}
    loc = ".".join(str(p) for p in first.get("loc", ()))
    msg = f"{loc}: {first.get('msg', 'invalid request')}"
    return JSONResponse(status_code=400, content={"error": {"kind": "config", "message": msg}})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(
        status="ok",
        version=__version__,
        logical_cores=os.cpu_count(),
        physical_cores=psutil.cpu_count(logical=False),
    )


def _execute(config: BenchConfig) -> tuple[RunArtifact, bytes]:
    run = run_benchmark_full(config)
    return RunArtifact.from_bench_run(run), params_to_bytes(run.final_params)


@app.post("/bench/run", response_model=RunResponse)
def bench_run(req: RunRequest) -> RunResponse:
    config = parse_config(overrides=req.config.to_overrides())
    artifact, params_blob = _execute(config)
    return RunResponse(
        artifact=artifact.to_json_dict(),
        csv=emit_csv([(config, artifact.records)]).decode("utf-8"),
        params_b64=base64.b64encode(params_blob).decode("ascii"),
    )


def _sweep_values(req_config, key: str, values: list[int], allowed_strategies: tuple[str, ...],
                  sweep_strategy_default: str, include_baseline: bool = True,
                  dataset_equals_value: bool = False) -> list[dict]:
    """Expand a base config into (optionally) a baseline plus one config
    dict per swept value. With dataset_equals_value each variant's dataset
    is one full batch (n_samples = batch_size), the vector-length scaling
    experiment."""
    if len(set(values)) != len(values):
        raise ConfigError(f"{key}: duplicate values in sweep {values}")
    if any(v < 1 for v in values):
        raise ConfigError(f"{key}: sweep values must be >= 1, got {values}")
    overrides = req_config.to_overrides()
    base = {**CONFIG_DEFAULTS, **overrides}
    strategy = overrides.get("strategy") or sweep_strategy_default
    if strategy not in allowed_strategies:
        raise ConfigError(f"strategy: {strategy!r} not valid for a {key} sweep")
    run_id = base["run_id"]
    configs = []
    if include_baseline:
        configs.append({**base, "strategy": "sequential_online", "batch_size": None,
                        "threads": None, "run_id": f"{run_id}_baseline"})
    for v in sorted(values):
        variant = {**base, "strategy": strategy, "batch_size": None, "threads": None,
                   key: v, "run_id": f"{run_id}_{key[0]}{v}"}
        if dataset_equals_value:
            variant["n_samples"] = v
        configs.append(variant)
    return configs


def _run_sweep(config_dicts: list[dict]) -> SweepResponse:
    artifacts = []
    csv_runs = []
    for values in config_dicts:
        config = build_bench_config(values)
        artifact, _ = _execute(config)
        artifacts.append(artifact)
        csv_runs.append((config, artifact.records))
    return SweepResponse(
        artifacts=[a.to_json_dict() for a in artifacts],
        csv=emit_csv(csv_runs).decode("utf-8"),
    )


@app.post("/bench/sweep", response_model=SweepResponse)
def bench_sweep(req: BatchSweepRequest) -> SweepResponse:
    """Batch-size family. Default mode "vector-length" runs every size as a
    full batch over a same-sized dataset (runtime grows with the vector
    length; feeds knee detection). Mode "fixed-dataset" keeps the configured
    dataset and adds a sequential baseline (the speedup-vs-batch story)."""
    if req.mode not in ("vector-length", "fixed-dataset"):
        raise ConfigError(f"mode: expected vector-length or fixed-dataset, got {req.mode!r}")
    vector_length = req.mode == "vector-length"
    configs = _sweep_values(req.config, "batch_size", req.batch_sizes,
                            ("batch_vectorized",), "batch_vectorized",
                            include_baseline=not vector_length,
                            dataset_equals_value=vector_length)
    return _run_sweep(configs)


@app.post("/bench/threads-sweep", response_model=SweepResponse)
def bench_threads_sweep(req: ThreadsSweepRequest) -> SweepResponse:
    configs = _sweep_values(req.config, "threads", req.threads,
                            ("thread_full_pipeline", "thread_map_reduce"), "thread_full_pipeline")
    return _run_sweep(configs)


def _load_runs(req: AnalyzeRequest) -> list:
    if (req.artifacts is None) == (req.csv is None):
        raise ConfigError("analyze: provide exactly one of 'artifacts' or 'csv'")
    if req.artifacts is not None:
        return [RunArtifact.from_json_dict(doc) for doc in req.artifacts]
    return parse_csv(req.csv.encode("utf-8"))


@app.post("/analyze", response_model=AnalyzeResponse)
def analyze(req: AnalyzeRequest) -> AnalyzeResponse:
    runs = _load_runs(req)
    if not runs:
        raise ConfigError("analyze: no runs found in input")
    by_id = {}
    for r in runs:
        rid = r.config.run_id if isinstance(r, RunArtifact) else r.run_id
        by_id[rid] = r
    baseline_id = req.baseline_run_id or next(iter(by_id))
    if baseline_id not in by_id:
        raise ComparisonError(f"baseline run {baseline_id!r} not present in input")
    baseline = by_id[baseline_id]
    base_activation = (baseline.config.network.activation if isinstance(baseline, RunArtifact)
                       else baseline.activation)
    variants = []
    for rid, r in by_id.items():
        if rid == baseline_id:
            continue
        activation = r.config.network.activation if isinstance(r, RunArtifact) else r.activation
        if activation == base_activation:
            variants.append(r)
    report = compare_runs(baseline, variants)
    rows = activation_comparison(list(by_id.values()))
    return AnalyzeResponse(
        report=report.to_json_dict(),
        activation_rows=rows,
        activation_table=render_activation_table(rows) if rows else None,
    )


@app.post("/plot-data", response_model=PlotDataResponse)
def plot_data(req: PlotDataRequest) -> PlotDataResponse:
    report = ComparisonReport.from_json_dict(req.report)
    return PlotDataResponse(document=json.loads(emit_plot_data(report)))


@app.post("/amdahl/speedup", response_model=AmdahlResponse)
def amdahl(req: AmdahlRequest) -> AmdahlResponse:
    return AmdahlResponse(speedup=amdahl_speedup(req.parallel_fraction, req.enhancement_factor))


@app.post("/amdahl/parallel-fraction", response_model=ParallelFractionResponse)
def parallel_fraction(req: ParallelFractionRequest) -> ParallelFractionResponse:
    return ParallelFractionResponse(
        parallel_fraction=estimate_parallel_fraction(req.observed_speedup, req.enhancement_factor)
    )
