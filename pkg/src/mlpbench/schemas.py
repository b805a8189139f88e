"""Pydantic request/response models for the benchmark service."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class ConfigModel(BaseModel):
    """Flat benchmark config; unset keys fall back to the lab defaults."""

    model_config = ConfigDict(extra="forbid")

    run_id: str | None = None
    strategy: str | None = None
    activation: str | None = None
    loss: str | None = None
    layer_widths: list[int] | None = None
    learning_rate: float | None = None
    seed: int | None = None
    data_seed: int | None = None
    n_samples: int | None = None
    epochs: int | None = None
    repeats: int | None = None
    warmup_repeats: int | None = None
    batch_size: int | None = None
    threads: int | None = None

    def to_overrides(self) -> dict:
        return self.model_dump(exclude_unset=True)


class RecordModel(BaseModel):
    run_id: str
    repeat: int
    phase: str
    wall_ns: int


class PhaseStatsModel(BaseModel):
    mean_ns: float
    min_ns: int
    max_ns: int
    stddev_ns: float


class ArtifactModel(BaseModel):
    config: dict
    records: list[RecordModel]
    summary: dict[str, PhaseStatsModel]
    params_digest: str
    initial_loss: float
    final_loss: float


class RunRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)


class RunResponse(BaseModel):
    artifact: ArtifactModel
    csv: str
    params_b64: str


class BatchSweepRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    batch_sizes: list[int] = Field(min_length=1)
    mode: str = "vector-length"


class ThreadsSweepRequest(BaseModel):
    config: ConfigModel = Field(default_factory=ConfigModel)
    threads: list[int] = Field(min_length=1)


class SweepResponse(BaseModel):
    artifacts: list[ArtifactModel]
    csv: str


class AnalyzeRequest(BaseModel):
    artifacts: list[dict] | None = None
    csv: str | None = None
    baseline_run_id: str | None = None


class AnalyzeResponse(BaseModel):
    report: dict
    activation_rows: list[dict]
    activation_table: str | None


class PlotDataRequest(BaseModel):
    report: dict


class PlotDataResponse(BaseModel):
    document: dict


class AmdahlRequest(BaseModel):
    parallel_fraction: float
    enhancement_factor: float


class AmdahlResponse(BaseModel):
    speedup: float


class ParallelFractionRequest(BaseModel):
    observed_speedup: float
    enhancement_factor: float


class ParallelFractionResponse(BaseModel):
    parallel_fraction: float


class HealthResponse(BaseModel):
    status: str
    version: str
    logical_cores: int | None
    physical_cores: int | None


class ErrorDetail(BaseModel):
    kind: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorDetail
