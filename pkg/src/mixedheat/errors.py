"""Exception hierarchy.

Validation problems derive from ``ValueError`` so callers that only care about
bad input can catch that; numerical inadmissibility (grids that cannot
represent the requested kernel, stalled time stepping) has its own branch
because the CLI maps it to a different exit code.
"""


class MixedHeatError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MixedHeatError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RangeError(DomainError):
    """Query outside the sampled range of a tabulated function."""


class UnsupportedFamilyError(MixedHeatError, TypeError):
    """Operation not available for the given nonlinearity/time-weight family."""


class CriterionInapplicableError(MixedHeatError):
    """Structural hypotheses needed by a construction fail (e.g. divergent Phi)."""


class HypothesisViolationError(CriterionInapplicableError):
    """The Picard construction requires a finite condition-(i) integral."""


class FitError(MixedHeatError, ValueError):
    """Too few points (or degenerate data) for a least-squares fit."""


class InconsistencyError(MixedHeatError):
    """Classification is not monotone across a parameter sweep."""


class CapacityError(MixedHeatError, MemoryError):
    """A configured memory cap would be exceeded."""


class NumericalInadmissibilityError(MixedHeatError):
    """The discretisation cannot faithfully carry out the request."""


class ResolutionError(NumericalInadmissibilityError):
    """Anti-aliasing or anti-wraparound check failed."""


class DomainCoverageError(ResolutionError):
    """The periodic box does not cover the region a check needs."""


class StalledError(NumericalInadmissibilityError):
    """Adaptive time step fell below ``dt_min`` before the blow-up threshold."""


class ConfigError(MixedHeatError, ValueError):
    """Experiment configuration failed validation."""
