"""Exception hierarchy.

Every error raised for bad caller input derives from :class:`RmtError`, which
is itself a ``ValueError`` so generic handlers keep working.
"""


class RmtError(ValueError):
    """Base class for all rmtlab input and domain errors."""


class InputError(RmtError):
    """Rejected input: non-finite entries, wrong shape, asymmetric data."""


class DomainError(RmtError):
    """An argument lies outside the domain of a formula."""


class DimensionError(RmtError):
    """Incompatible dimensions (e.g. more spikes than rows)."""


class ParameterError(RmtError):
    """A theorem or construction parameter violates its stated constraint."""


class SingularResolventError(RmtError):
    """The resolvent point is too close to the spectrum."""


class SubcriticalError(RmtError):
    """The requested spike is below the phase-transition threshold."""


class CertificationError(RmtError):
    """A net failed its coverage certification."""


class PlanError(RmtError):
    """An experiment plan pairs a theorem with the wrong model or indices."""
