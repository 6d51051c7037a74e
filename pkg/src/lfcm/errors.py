"""Exception types raised by the library.

Everything derives from LfcmError so callers can catch broadly. The CLI
maps input-shaped problems to exit code 2 and statistical precondition
failures to exit code 3.
"""


class LfcmError(Exception):
    """Base class for all library errors."""


class InvalidData(LfcmError):
    """Input data is malformed (non-finite entries, bad shapes, bad names)."""


class ShapeError(LfcmError):
    """Mismatched or unsupported dimensions."""


class InsufficientSamples(LfcmError):
    """Too few samples for the requested estimator or test."""


class SingularMatrix(LfcmError):
    """A conditioning submatrix is numerically singular."""


class InvalidTetrad(LfcmError):
    """Tetrad indices are not four distinct columns."""


class DegenerateVariance(LfcmError):
    """The plug-in tetrad variance is not positive."""


class EmptyHypothesis(LfcmError):
    """No testable hypothesis can be enumerated from the arguments."""


class TooFewVariables(LfcmError):
    """The dataset has too few columns to run discovery."""


class GraphTooLarge(LfcmError):
    """The exact separation oracle only supports small graphs."""


class DomainMismatch(LfcmError):
    """Two structures do not cover the same set of nodes."""


class DegenerateCalibration(LfcmError):
    """Weight calibration produced a near-zero parental variance."""
