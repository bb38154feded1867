"""Exception types shared across the library."""


class QoptError(Exception):
    """Base class for library-specific failures."""


class DegenerateOverlapError(QoptError, ValueError):
    """The matrix coupling two Hermite families is numerically singular."""


class CausticError(QoptError, ValueError):
    """Propagator requested too close to a focal time (sin wt ~ 0)."""


class ResourceLimitError(QoptError, RuntimeError):
    """A multi-index enumeration exceeded its configured size cap."""


class ConventionError(QoptError, RuntimeError):
    """An internal consistency check failed (signals a convention bug)."""
