"""Exception hierarchy shared across the package."""


class IcPovmError(Exception):
    """Base class for all domain errors raised by this package."""


class NonIsometry(IcPovmError):
    pass


class NotUnitary(IcPovmError):
    pass


class NoConvergence(IcPovmError):
    pass


class RankDeficient(IcPovmError):
    pass


class IncompletePovm(IcPovmError):
    pass


class DegenerateElement(IcPovmError):
    pass


class NotFiducial(IcPovmError):
    """Raised when a displacement orbit fails the SIC overlap conditions.

    The ``residual`` attribute holds the largest overlap deviation.
    """

    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class NotIC(IcPovmError):
    pass


class NotSic(IcPovmError):
    pass


class SynthesisMismatch(IcPovmError):
    pass


class SearchFailed(IcPovmError):
    """Raised when no 2-CNOT crossing is found on any scanned axis.

    ``extremes`` maps each scanned axis name to the (min, max) of the surrogate.
    """

    def __init__(self, message, extremes):
        super().__init__(message)
        self.extremes = extremes


class TooLarge(IcPovmError):
    pass


class InvalidTimes(IcPovmError):
    pass


class ZeroProbabilityBranch(IcPovmError):
    pass
