"""Exception hierarchy. Every error carries a stable ``code`` string that the
CLI maps onto exit statuses and single-line diagnostics."""

from __future__ import annotations


class RosettaError(Exception):
    """Base class for all toolkit errors."""

    code = "ERROR"

    def __str__(self) -> str:  # pragma: no cover - trivial
        return f"{self.code}: {super().__str__()}"


class InvalidDesignError(RosettaError):
    code = "INVALID_DESIGN"


class ParseError(RosettaError):
    """Syntax error in an input file; reports line and column."""

    code = "SYNTAX"

    def __init__(self, message: str, path: str = "", line: int = 0, col: int = 0):
        super().__init__(f"{path}:{line}:{col}: {message}" if path else message)
        self.path = path
        self.line = line
        self.col = col


class MissingFileError(RosettaError):
    code = "MISSING_FILE"


class HeaderMismatchError(RosettaError):
    code = "HEADER_MISMATCH"


class UnknownNodeError(RosettaError):
    code = "UNKNOWN_NODE"


class UnknownMasterError(RosettaError):
    code = "UNKNOWN_MASTER"


class UnknownLayerError(RosettaError):
    code = "UNKNOWN_LAYER"


class ScaleOverflowError(RosettaError):
    code = "SCALE_OVERFLOW"


class IoFailureError(RosettaError):
    code = "IO_FAILURE"


class NameCollisionError(RosettaError):
    code = "NAME_COLLISION"


class ThresholdUndefinedError(RosettaError):
    code = "THRESHOLD_UNDEFINED"


class NoCandidateError(RosettaError):
    code = "NO_CANDIDATE"


class UnitMismatchError(RosettaError):
    code = "UNIT_MISMATCH"


class EmptyIntersectionError(RosettaError):
    code = "EMPTY_INTERSECTION"


class SiteTooLargeError(RosettaError):
    code = "SITE_TOO_LARGE"


class NonPositivePitchError(RosettaError):
    code = "NONPOSITIVE_PITCH"


class EmptyDesignError(RosettaError):
    code = "EMPTY_DESIGN"


class InfeasibleBalanceError(RosettaError):
    code = "INFEASIBLE_BALANCE"


class EmptySamplesError(RosettaError):
    code = "EMPTY_SAMPLES"


class CoverageGapError(RosettaError):
    code = "COVERAGE_GAP"


class MissingTierMasterError(RosettaError):
    code = "MISSING_TIER_MASTER"


class UnmappedPinError(RosettaError):
    code = "UNMAPPED_PIN"


class NoRoutingError(RosettaError):
    code = "NO_ROUTING"


class NonPositiveInputError(RosettaError):
    code = "NONPOSITIVE_INPUT"


class SchemaViolationError(RosettaError):
    code = "SCHEMA_VIOLATION"


class DegenerateConfigError(RosettaError):
    code = "DEGENERATE_CONFIG"
