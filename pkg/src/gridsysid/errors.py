"""Exception hierarchy.

Everything raised on bad input derives from :class:`ValidationError`
(itself a :class:`ValueError`), so callers can catch broadly or narrowly.
"""


class IdentificationError(Exception):
    """Base class for all package errors."""


class ValidationError(IdentificationError, ValueError):
    """Input violates a documented precondition."""


# timeseries
class MissingColumn(ValidationError):
    pass


class NonUniformSampling(ValidationError):
    def __init__(self, message, worst_gap=None, index=None):
        super().__init__(message)
        self.worst_gap = worst_gap
        self.index = index


class LengthMismatch(ValidationError):
    pass


class ParseError(ValidationError):
    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


# preprocess
class EvenWindow(ValidationError):
    pass


class WindowTooLarge(ValidationError):
    pass


class TooShort(ValidationError):
    pass


class SegmentTooShort(ValidationError):
    pass


# estimation
class InsufficientData(ValidationError):
    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class RankDeficient(ValidationError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class NumericalOverflow(IdentificationError, ArithmeticError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


# transfer functions
class PoleAtMinusOne(ValidationError):
    pass


class PoleAtNyquistWarp(ValidationError):
    pass


class DegenerateLeadingCoefficient(ValidationError):
    pass


# metrics
class ConstantReference(ValidationError):
    pass


class TooManyParameters(ValidationError):
    pass


class CovarianceNotPSD(ValidationError):
    pass


class TooManyDivergentDraws(IdentificationError):
    def __init__(self, message, dropped=None, draws=None):
        super().__init__(message)
        self.dropped = dropped
        self.draws = draws


# order search
class AllCandidatesFailed(IdentificationError):
    pass


class NoSuccessfulCandidates(ValidationError):
    pass


# emulator
class InvalidScenario(ValidationError):
    pass
