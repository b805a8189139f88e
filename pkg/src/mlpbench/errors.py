"""Exception taxonomy shared by the core library, service and CLI.

Exit-code mapping at the CLI boundary: config/usage errors -> 2,
numeric divergence -> 3, comparison errors -> 4.
"""


class MlpBenchError(Exception):
    """Base class for all library errors."""


class ShapeError(MlpBenchError):
    """Matrix dimensions incompatible with the requested operation."""


class DomainError(MlpBenchError):
    """Numeric argument outside the mathematically valid domain."""


class InfeasibleSpeedupError(DomainError):
    """Observed speedup exceeds the enhancement factor (superlinear)."""


class SlowdownError(DomainError):
    """Observed speedup below 1 (the variant was slower than baseline)."""


class ConfigError(MlpBenchError):
    """Invalid or inconsistent benchmark configuration."""


class UsageError(MlpBenchError):
    """Operation called with structurally unusable input."""


class NumericDivergenceError(MlpBenchError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, detail: str = ""):
        self.epoch = epoch
        msg = f"non-finite training loss at epoch {epoch}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ComparisonError(MlpBenchError):
    """Run artifacts are not comparable (mismatched configuration)."""
