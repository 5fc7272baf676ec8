"""Exception hierarchy shared across the package.

Three branches matter to the CLI: ConfigError (exit 2), DataError (exit 3)
and NumericalError (exit 4). Everything else is a plain BoawError.
"""


class BoawError(Exception):
    """Base class for all package errors."""


class ConfigError(BoawError):
    """Invalid configuration value or config-file syntax."""


class DataError(BoawError):
    """Malformed or inconsistent input data."""


class NumericalError(BoawError):
    """Numerical failure during fitting or training."""


# --- data errors ---------------------------------------------------------


class MalformedRow(DataError):
    """CSV row with the wrong number of fields, or an empty file."""


class NonNumericValue(DataError):
    """CSV field that does not parse as a float."""


class DimensionMismatch(DataError):
    """Vector or matrix dimension disagrees with what the consumer expects."""


class LengthMismatch(DataError):
    """Paired vectors of unequal length."""


class OverlappingSegments(DataError):
    """Speaker-turn segments overlap in time."""


class InvertedSegment(DataError):
    """Speaker-turn segment with t_end <= t_start."""


class NotEnoughDistinctRows(DataError):
    """Codebook size K exceeds the number of available data rows."""


class StrategyAlreadyApplied(DataError):
    """Turn conditioning requested on an already-conditioned sequence."""


class DegenerateInputs(DataError):
    """Inputs for which the requested statistic is undefined."""


class ZeroVariance(DataError):
    """Scaling requested with a zero standard deviation."""


class EmptyGrid(ConfigError):
    """Sweep invoked with an empty parameter grid."""


class SoftOnDistanceScores(ConfigError):
    """Soft-threshold assignment configured for a negated-distance codebook."""


# --- numerical errors ----------------------------------------------------


class NonFiniteLoss(NumericalError):
    """Training loss became NaN or infinite (divergence)."""


class NonFiniteData(NumericalError):
    """Non-finite values where finite numbers are required."""


class NoConvergence(NumericalError):
    """Solver hit its iteration cap while still improving."""
