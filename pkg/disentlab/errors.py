"""Exception hierarchy for disentlab.

Every error carries a ``exit_code`` so the command-line tool can map
failures onto its stable contract: 1 for anything the user can fix by
changing inputs, 2 for failures that happen while computing.
"""

from __future__ import annotations


class DisentlabError(Exception):
    """Base class for all disentlab errors."""

    exit_code: int = 2


# ---------------------------------------------------------------------------
# Validation errors (exit code 1)
# ---------------------------------------------------------------------------


class ConfigError(DisentlabError, ValueError):
    """Raised when a configuration file or object is invalid."""

    exit_code = 1


class InfeasibleConfoundError(ConfigError):
    """Raised when (rho, prevalence, SA marginal) violate the Fréchet bounds."""


class DatasetFormatError(DisentlabError, ValueError):
    """Raised when a dataset or report file cannot be parsed."""

    exit_code = 1


class MalformedHeaderError(DatasetFormatError):
    """Raised when a binary header (magic bytes, dimensions) is wrong."""


class TruncatedTensorError(DatasetFormatError):
    """Raised when a tensor block ends before its declared size."""


class CountMismatchError(DatasetFormatError):
    """Raised when metadata rows and stored tensors disagree in number."""


class SchemaError(DatasetFormatError):
    """Raised when a CSV file violates its documented schema."""


class CheckpointFormatError(DisentlabError, ValueError):
    """Raised when a checkpoint file is malformed."""

    exit_code = 1


class DataError(DisentlabError, ValueError):
    """Raised when data cannot support the requested operation."""

    exit_code = 1


class UndefinedMetricError(DisentlabError, ValueError):
    """Raised when a metric is undefined for its input (e.g. one class only)."""

    exit_code = 1


class ReportMismatchError(DisentlabError, ValueError):
    """Raised when two audit reports do not describe the same subgroups."""

    exit_code = 1


# ---------------------------------------------------------------------------
# Runtime failures (exit code 2)
# ---------------------------------------------------------------------------


class NonFiniteError(DisentlabError, FloatingPointError):
    """Raised when a NaN or infinity shows up where finite values are required."""


class NonFiniteGradientError(NonFiniteError):
    """Raised by the optimizer when a gradient tensor is not finite."""

    def __init__(self, parameter: str) -> None:
        self.parameter = parameter
        super().__init__(
            f"Gradient for parameter tensor '{parameter}' contains NaN or inf. "
            f"Lower the learning rate or check the loss for log(0)."
        )


class NonFiniteLossError(NonFiniteError):
    """Raised when a loss or one of its intermediate stages is not finite."""

    def __init__(self, stage: str, detail: str = "") -> None:
        self.stage = stage
        suffix = f" ({detail})" if detail else ""
        super().__init__(f"Non-finite values at stage '{stage}'{suffix}.")


class TrainingAbortedError(DisentlabError):
    """Raised when training cannot continue, with epoch/batch context."""

    def __init__(self, epoch: int, batch: int, reason: str) -> None:
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"Training aborted at epoch {epoch}, batch {batch}: {reason}")


class ContrastError(DisentlabError, ValueError):
    """Raised when chart colours fail the WCAG AA contrast minimum."""

    exit_code = 1
