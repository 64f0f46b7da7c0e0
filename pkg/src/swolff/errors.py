"""Exception hierarchy. Every error raised by the library derives from SWError."""


class SWError(ValueError):
    pass


# structural checks on operators
class NotHermitian(SWError):
    pass


class NotNormal(SWError):
    pass


class NotProjector(SWError):
    pass


class BranchCutViolation(SWError):
    pass


class DimMismatch(SWError):
    pass


# rotations and spectral windows
class SubspacesTooFar(SWError):
    pass


class EmptyWindow(SWError):
    pass


class AmbiguousBoundary(SWError):
    pass


class GapTooSmall(SWError):
    pass


class EpsilonTooLarge(SWError):
    pass


class RankMismatch(SWError):
    pass


class InternalGapError(SWError):
    pass


# series, diagrams, lattices
class OrderTooLarge(SWError):
    pass


class NotAdmissible(SWError):
    pass


class SupportMismatch(SWError):
    pass


class DimensionCap(SWError):
    pass


class TooManyClusters(SWError):
    pass


class TooManyMonomials(SWError):
    pass


class NotBlockDiagonal(SWError):
    pass


# configuration
class ParseError(SWError):
    pass


class ValidationError(SWError):
    pass
