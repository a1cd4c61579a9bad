"""Exception hierarchy shared by every module of the package."""


class EpidiffError(ValueError):
    """Base class for all errors raised by ``epidiff``."""


class DimensionError(EpidiffError):
    pass


class ExtRealError(EpidiffError):
    """Undefined extended-real operation, e.g. ``inf - inf``."""


class PointOutsideSetError(EpidiffError):
    pass


class PointOutsideDomainError(EpidiffError):
    pass


class InconsistentPwtdError(EpidiffError):
    """Active pieces disagree in value or gradient beyond tolerance."""


class NotASubgradientError(EpidiffError):
    pass


class SubdifferentialUnavailableError(EpidiffError):
    pass


class PreconditionError(EpidiffError):
    pass


class DerivativeMismatchError(EpidiffError):
    pass


class RegularityUnknownError(EpidiffError):
    pass


class VertexEnumerationError(EpidiffError):
    pass


class InvalidRecipeError(EpidiffError):
    pass


class NoMultiplierError(EpidiffError):
    pass
