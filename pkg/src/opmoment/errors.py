"""Exceptions raised by opmoment."""


class OpMomentError(Exception):
    """Base class for every error raised by opmoment."""

    pass


class LinalgError(OpMomentError):
    """Raised when a Hermitian matrix operation cannot be carried out."""

    pass


class NotHermitian(LinalgError):
    """Raised when an input deviates from self-adjointness beyond tolerance."""

    pass


class NotPsd(LinalgError):
    """Raised when a matrix required to be positive has a negative eigenvalue."""

    pass


class SingularOperator(LinalgError):
    """Raised when an operator that must be invertible is numerically singular."""

    pass


class ConvergenceFailure(LinalgError):
    """Raised when the eigensolver fails or its reconstruction is inaccurate."""

    pass


class MomentDataError(OpMomentError):
    """Raised when moment data does not support the requested analysis."""

    pass


class InsufficientMoments(MomentDataError):
    """Raised when the sequence is too short for the requested order."""

    pass


class NotUnitVector(MomentDataError):
    """Raised when a localizing vector does not have unit norm."""

    pass


class NonRealQuadraticForm(MomentDataError):
    """Raised when <T x, x> has a non-negligible imaginary part."""

    pass


class OverflowRisk(MomentDataError):
    """Raised when moment magnitudes leave the safe floating-point range."""

    pass


class MeasureError(OpMomentError):
    """Raised when an operator-valued measure fails a structural requirement."""

    pass


class NotMeasure(MeasureError):
    """Raised when a charge is used where a positive measure is required."""

    pass


class NotSemiSpectral(MeasureError):
    """Raised when a measure does not have total mass equal to the identity."""

    pass


class NotRepresenting(MeasureError):
    """Raised when a measure does not reproduce the moments it should represent."""

    pass


class SingularProduct(MeasureError):
    """Raised when a weighted shift product B_p is not invertible."""

    pass


class ReconstructionMismatch(MeasureError):
    """Raised when a recovered measure does not reproduce its input sequence."""

    pass


class RecurrenceError(OpMomentError):
    """Raised when recursive structure cannot be found or used."""

    pass


class NoRecurrenceFound(RecurrenceError):
    """Raised when no monic recurrence of admissible order fits the data."""

    pass


class NonRealRoots(RecurrenceError):
    """Raised when a characteristic polynomial has non-real roots."""

    pass


class NonSimpleRoots(RecurrenceError):
    """Raised when a characteristic polynomial has repeated roots."""

    pass


class CriteriaDisagreement(OpMomentError):
    """Raised when two routes to the same mathematical verdict disagree."""

    pass


class ConditionDisagreement(CriteriaDisagreement):
    """Raised when equivalent conditions of a closed-form test disagree."""

    pass


class RangeConditionFailed(OpMomentError):
    """Raised when Y is not in the range of X^(1/2) in a block factorization."""

    pass


class DegeneratePencil(OpMomentError):
    """Raised when the pencil of (T_0, T_1) is scalar and two atoms do not exist."""

    pass


class DegenerateBlock(OpMomentError):
    """Raised when the block shift example has (a - c)^2 + b^2 = 0."""

    pass


class InvalidWeightFamily(OpMomentError):
    """Raised when shift weights are not positive invertible operators."""

    pass


class NotFlatAtK(OpMomentError):
    """Raised when a propagation check is requested at a non-flat index."""

    pass


class NotFlatAtP(NotFlatAtK):
    """Raised when the flatness identity is requested at a non-flat index."""

    pass


class SchemaError(OpMomentError):
    """Raised when an input file violates its JSON schema."""

    def __init__(self, message: str, path: str = "", line: int | None = None):
        self.path = path
        self.line = line
        location = ""
        if path:
            location += f" at {path}"
        if line is not None:
            location += f" (line {line})"
        super().__init__(f"{message}{location}")
