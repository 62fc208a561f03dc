"""Exception hierarchy.

Errors fall in two families that the CLI maps to different exit codes:
input problems (bad parameters, bad config, wrong family for an operation)
and numerical failures (contour through a zero, Newton not converging).
"""


class GConeError(Exception):
    """Base class for all package errors."""


class InputError(GConeError, ValueError):
    """Invalid parameters or configuration."""


class NumericalFailure(GConeError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy answer."""


class NonpositiveBeta(InputError):
    pass


class NonpositiveExponent(InputError):
    pass


class NonFiniteInput(InputError):
    pass


class ConfigError(InputError):
    """Config document could not be parsed or validated.

    ``key`` names the offending key (dotted path) and ``line`` the source
    line when the parser reports one.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class FamilyMismatch(InputError):
    pass


class KindMismatch(InputError):
    pass


class ContextMismatch(InputError):
    pass


class ZeroCovector(InputError):
    pass


class NonmonotoneSchedule(InputError):
    pass


class NoBoundAvailable(InputError):
    """No tail estimate certifies a finite mode set; supply the mode count manually."""


class DivergentTail(InputError):
    """The requested weight lies outside the convergence strip of the sampled function."""


class ContourThroughZero(NumericalFailure):
    pass


class NewtonDivergence(NumericalFailure):
    pass
