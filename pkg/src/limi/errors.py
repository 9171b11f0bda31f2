"""Exception hierarchy shared across the toolkit.

Every error carries enough context (column, row index, counts) to point at
the offending input; the CLI maps error families to distinct exit codes.
"""

from __future__ import annotations


class LimiError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(LimiError):
    """Invalid schema definition (bad domain, duplicate names, ...)."""


class MissingColumn(LimiError):
    def __init__(self, column: str) -> None:
        super().__init__(f"column {column!r} missing from input")
        self.column = column


class OutOfDomainValue(LimiError):
    def __init__(self, row: int, column: str, value: object) -> None:
        super().__init__(f"row {row}, column {column!r}: value {value!r} outside domain")
        self.row = row
        self.column = column
        self.value = value


class BadLabel(LimiError):
    def __init__(self, row: int, value: object) -> None:
        super().__init__(f"row {row}: label {value!r} is not 0 or 1")
        self.row = row
        self.value = value


class DegenerateColumn(LimiError):
    def __init__(self, column: str) -> None:
        super().__init__(f"column {column!r} is constant; cannot fit a marginal")
        self.column = column


class SingleClassDataset(LimiError):
    """Training data contains only one label value."""


class BoundaryUnlearnable(LimiError):
    def __init__(self, n_class0: int, n_class1: int) -> None:
        super().__init__(
            "cannot fit a surrogate boundary: confidence filter left "
            f"{n_class0} samples of class 0 and {n_class1} of class 1"
        )
        self.n_class0 = n_class0
        self.n_class1 = n_class1


class OneClassSample(LimiError):
    """AUC is undefined when only one class is present."""


class NoConvergence(LimiError):
    """Iterative search exhausted its step budget without crossing the boundary."""


class EmptySample(LimiError):
    """A metric received an empty sample."""


class ConstantColumn(LimiError):
    """Pearson correlation is undefined for a constant column."""


class EmptyGroup(LimiError):
    """A demographic group has no members in the dataset."""


class UndefinedRate(LimiError):
    """A group lacks ground-truth positives or negatives, so TPR/FPR is undefined."""


class ZeroElapsed(LimiError):
    """Generation speed is undefined for zero elapsed time."""


class InsufficientInstances(LimiError):
    def __init__(self, available: int, required: int) -> None:
        super().__init__(
            f"retraining needs {required} unique instances but only {available} are available"
        )
        self.available = available
        self.required = required


class BridgeFailure(LimiError):
    """External model/generator process died or violated the wire protocol."""


class ConfigError(LimiError):
    """Run configuration is invalid or references missing files."""
