"""Exception types shared across the package."""


class AdastocError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(AdastocError, ValueError):
    """A parameter is outside its admissible range."""


class MissingGroundTruthError(AdastocError):
    """An operation needs ground truth (e.g. inf of the objective) that the problem lacks."""


class ConfigurationError(AdastocError):
    """Incompatible method/oracle/problem combination."""


class NumericError(AdastocError):
    """A non-finite quantity was produced; carries context about where."""


class CouplingInfeasibleError(AdastocError):
    """The observed success probability falls below the assumed reliability level."""


class AssumptionViolationError(AdastocError):
    """A structural assumption (e.g. cost monotonicity) failed on the evaluation grid."""


class TheoryViolationError(AdastocError):
    """A computed exact quantity contradicts a theoretical bound it must obey."""
