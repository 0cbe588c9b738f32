"""Package exceptions."""


class EvosiError(Exception):
    """Base class for package errors."""


class SubcriticalStructure(EvosiError):
    """Degree structure has m2 - 2*m1 <= 0: no critical infection rate exists."""


class OddDegreeSum(EvosiError):
    """A degree sequence with odd total degree cannot be paired."""


class DegenerateState(EvosiError):
    """A simulator state that the dynamics cannot act on."""


class InvalidRegime(EvosiError):
    """Parameters outside the regime a formula is valid in."""


class NoRoot(EvosiError):
    """Root finding failed to bracket or converge."""


class OutOfRange(EvosiError):
    """An argument lies outside the range a routine supports."""


class InsufficientSurvivors(EvosiError):
    """Too few conditioned trials survived to form the requested sample."""


class InsufficientEvents(EvosiError):
    """Too few events observed to compute the requested statistic."""


class SeriesDivergence(EvosiError):
    """A series expansion failed its convergence check."""


class ConvergenceFailure(EvosiError):
    """An iterative numerical routine failed to reach tolerance."""
