"""Exception hierarchy.

Errors are grouped by how the command line reports them: bad input
(exit 2), a failed mathematical hypothesis (exit 1) and numerical
breakdown (exit 3).
"""


class TwoStepError(Exception):
    """Base class for all package errors."""


class InputError(TwoStepError, ValueError):
    """Malformed or inconsistent input data."""


class NotAntiHermitian(InputError):
    pass


class NotClosed(InputError):
    """A bracket of basis elements leaves the span of the basis."""


class DegenerateForm(InputError):
    """The requested invariant form is not positive definite on the basis."""


class NotInAlgebra(InputError):
    pass


class NotInM(InputError):
    """A vector has a component along the isotropy algebra."""


class UnknownPreset(InputError):
    pass


class BadSpecFile(InputError):
    pass


class ConditionViolated(TwoStepError):
    """A structural hypothesis (e.g. a bracket inclusion) does not hold."""


class NumericalError(TwoStepError):
    pass


class OutOfLogWindow(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass
