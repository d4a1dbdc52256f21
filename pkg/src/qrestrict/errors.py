"""Exception hierarchy shared by all modules."""


class QRestrictError(Exception):
    """Base class for every error raised by this package."""


class LayoutError(QRestrictError, ValueError):
    """Unknown subsystem label or malformed layout."""


class CompositionError(LayoutError):
    """Tensor product of operands whose subsystem labels collide."""


class DimensionError(QRestrictError, ValueError):
    """Operands whose dimensions do not match."""


class NotHermitianError(QRestrictError, ValueError):
    pass


class NormalizationError(QRestrictError, ValueError):
    """State or probability vector that does not normalize."""


class PreconditionError(QRestrictError, ValueError):
    """A pointer that is not in its ready state, and similar setup faults."""


class StructureError(QRestrictError, ValueError):
    """State that is not of branch form over the pointer basis."""


class CompletenessError(QRestrictError, ValueError):
    """Pointer projectors that do not resolve the identity."""


class ConfigError(QRestrictError, ValueError):
    pass
