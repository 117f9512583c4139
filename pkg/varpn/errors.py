"""Exception hierarchy for varpn.

Predicates report mathematical failures through ``Verdict`` objects; the
exceptions below signal misuse: malformed input, illegal generators for a
covering mode, incompatible shapes.
"""


class VarPNError(Exception):
    """Base class for every error raised by varpn."""


class ParityMismatch(VarPNError):
    """A substitution maps a generator to a value of the wrong parity."""


class IllegalGenerator(VarPNError):
    """An expression mentions a generator that the covering mode forbids."""


class ShapeMismatch(VarPNError):
    """Operator and argument shapes are incompatible."""


class NotLinear(VarPNError):
    """A function expected to be linear in one odd family is not."""


class NotAShadow(VarPNError):
    """A function fails the shadow equation it was declared to satisfy."""


class DegreeMismatch(VarPNError):
    """A function has the wrong odd degree for the requested operation."""


class NonlinearInParams(VarPNError):
    """A residual is not linear in the undetermined parameters."""


class PreconditionFailed(VarPNError):
    """A theorem-level operation was called outside its hypotheses."""


class ExprSyntaxError(VarPNError, ValueError):
    """Malformed expression text.

    Attributes:
        position: offset into the source string where parsing stopped.
        expected: human readable description of what was expected there.
    """

    def __init__(self, message: str, position: int = 0, expected: str | None = None):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class ConfigError(VarPNError):
    """A settings file or environment variable holds an invalid value."""


class SamplingError(VarPNError, ValueError):
    """A random draw was requested for a shape that has no such objects."""
