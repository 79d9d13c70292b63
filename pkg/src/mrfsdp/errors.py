"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid input -> 2, numerical
failure -> 3, size refusal -> 4.
"""


class InvalidInputError(ValueError):
    """Malformed instance, labeling, matrix, or configuration."""


class InfeasibleAssignmentError(InvalidInputError):
    """A vector/matrix that should encode a labeling does not (e.g. a
    sign-vector block without exactly one +1, or a non-one-hot row)."""


class NumericalFailureError(RuntimeError):
    """Solver hit a non-finite value.  Carries the last valid iterate."""

    def __init__(self, message, last_point=None):
        super().__init__(message)
        self.last_point = last_point


class DegenerateStepError(NumericalFailureError):
    """A retraction step collapsed a sphere row to (numerically) zero."""


class SizeRefusalError(RuntimeError):
    """Exhaustive enumeration refused: state space exceeds the budget."""
