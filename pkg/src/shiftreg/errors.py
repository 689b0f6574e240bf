"""Exception types shared across the package.

Two broad families matter to the CLI: validation problems (bad inputs,
malformed files, impossible parameter requests) exit with code 2, numerical
failures (optimizers, factorizations, exhausted resampling) exit with code 3.
Each exception carries its family on the class so the CLI does not need a
lookup table.
"""

from __future__ import annotations


class ShiftregError(Exception):
    """Base class for everything raised deliberately by this package."""

    exit_code = 1


class ValidationError(ShiftregError):
    exit_code = 2


class NumericalError(ShiftregError):
    exit_code = 3


# geometry

class EmptyIntersection(ValidationError):
    """Shifted window does not overlap the original window."""


class NoPairs(ValidationError):
    """Nearest-neighbor pairing produced no usable pairs."""


class InfeasibleSeparation(ValidationError):
    """Requested pairwise separation cannot be met by a deterministic lattice."""


# random fields

class NotPositiveDefinite(NumericalError):
    """Covariance matrix failed Cholesky even after the jitter ladder."""


# regression

class RankDeficientDesign(ValidationError):
    """Design matrix has linearly dependent columns."""


class OptimizerDiverged(NumericalError):
    """No optimizer restart produced a finite objective."""


class VariogramFitFailed(NumericalError):
    """Weighted least-squares variogram fit did not converge."""


class EmptyNeighborhood(NumericalError):
    """Kernel regression query point has no sample point within bandwidth."""


class SingularSystem(NumericalError):
    """Penalized normal equations stayed singular after ridge jitter."""


# statistics

class InsufficientPairs(ValidationError):
    """Too few observations for the requested statistic."""


class DegenerateAux(NumericalError):
    """A normalizing quantity (grand-mean distance) is zero."""


# shift engine

class ShiftExhausted(NumericalError):
    """Could not find a shift retaining enough points within the redraw cap."""


# io / config

class ConfigError(ValidationError):
    """Unknown or invalid configuration key or value."""


class SchemaError(ValidationError):
    """Input table does not match the expected column layout."""
