"""Exception types shared across the package.

Every error carries a stable ``error_name`` that the CLI prints in its
single-line machine-parsable error output.
"""

from __future__ import annotations


class DrugsurvError(Exception):
    """Base class for all package errors."""

    error_name = "Error"


class _LocatedError(DrugsurvError):
    """Error tied to a (row, column) location in an input file."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        super().__init__(message)

    def __str__(self) -> str:
        where = []
        if self.row is not None:
            where.append(f"row {self.row}")
        if self.column is not None:
            where.append(f"column {self.column!r}")
        base = super().__str__()
        return f"{base} ({', '.join(where)})" if where else base


# cohort
class MissingColumn(DrugsurvError):
    error_name = "MissingColumn"


class TypeViolation(_LocatedError):
    error_name = "TypeViolation"


class RangeViolation(_LocatedError):
    error_name = "RangeViolation"


class EmptyCohort(DrugsurvError):
    error_name = "EmptyCohort"


class InvalidSpec(DrugsurvError):
    error_name = "InvalidSpec"


# preprocess
class SchemaMismatch(DrugsurvError):
    error_name = "SchemaMismatch"


class DegenerateCovariance(DrugsurvError):
    error_name = "DegenerateCovariance"


# learn
class InvalidConfig(DrugsurvError):
    error_name = "InvalidConfig"


class DegenerateLabels(DrugsurvError):
    error_name = "DegenerateLabels"


class WrongKind(DrugsurvError):
    error_name = "WrongKind"


class VersionMismatch(DrugsurvError):
    error_name = "VersionMismatch"


class CorruptFile(DrugsurvError):
    error_name = "CorruptFile"


class FingerprintMismatch(DrugsurvError):
    error_name = "FingerprintMismatch"


# evaluate
class TooFewRows(DrugsurvError):
    error_name = "TooFewRows"


class LengthMismatch(DrugsurvError):
    error_name = "LengthMismatch"


class EmptyInput(DrugsurvError):
    error_name = "Empty"


class OneClassOnly(DrugsurvError):
    error_name = "OneClassOnly"


class ZeroVariance(DrugsurvError):
    error_name = "ZeroVariance"


# prescribe
class UnknownFeature(DrugsurvError):
    error_name = "UnknownFeature"
