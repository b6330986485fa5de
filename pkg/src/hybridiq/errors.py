"""Exception hierarchy shared by all hybridiq modules."""


class HybridError(Exception):
    """Base class for all errors raised by this package."""


class NotHermitian(HybridError):
    pass


class NumericalFailure(HybridError):
    pass


class DimensionMismatch(HybridError):
    pass


class NotAState(HybridError):
    pass


class BadRange(HybridError):
    pass


class BadMap(HybridError):
    pass


class BadKernel(HybridError):
    pass


class SpaceMismatch(HybridError):
    pass


class NotPositive(HybridError):
    def __init__(self, cell: int, message: str = ""):
        self.cell = cell
        super().__init__(message or f"mass block at cell {cell} is not positive semidefinite")


class NotNormalized(HybridError):
    def __init__(self, total: float, message: str = ""):
        self.total = total
        super().__init__(message or f"total trace {total!r} is not 1")


class BadEffect(HybridError):
    pass


class BadEvent(HybridError):
    pass


class ZeroMassCell(HybridError):
    pass


class ZeroProbability(HybridError):
    pass


class ShapeMismatch(HybridError):
    pass


class IncompleteChannel(HybridError):
    def __init__(self, cell: int, deviation: float):
        self.cell = cell
        self.deviation = deviation
        super().__init__(
            f"Kraus blocks of source cell {cell} are not complete "
            f"(max deviation {deviation:.3e} from identity)"
        )


class IncompleteKraus(HybridError):
    pass


class NotPSDCoefficients(HybridError):
    def __init__(self, m: int, n: int, message: str = ""):
        self.m = m
        self.n = n
        super().__init__(message or f"coefficient matrix at cell pair ({m}, {n}) is not PSD")


class BadBasis(HybridError):
    pass


class NotAnEnsemble(HybridError):
    pass


class IncompleteInstrument(HybridError):
    def __init__(self, history: tuple, message: str = ""):
        self.history = history
        super().__init__(message or f"no complete instrument for history {history}")


class RecordSpaceTooLarge(HybridError):
    pass


class UnknownSuite(HybridError):
    pass


class ParseError(HybridError):
    pass


class IoError(HybridError):
    pass
