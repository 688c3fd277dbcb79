"""Exception hierarchy shared by all modules."""


class LinsoficError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(LinsoficError, ValueError):
    """Shapes, ambient dimensions or fields of two operands disagree."""


class FieldMismatch(DimensionMismatch):
    pass


class DependentVectors(LinsoficError, ValueError):
    """Input columns were required to be linearly independent."""


class SingularMatrix(LinsoficError, ValueError):
    pass


class OutOfBall(LinsoficError, KeyError):
    """An algebra word lies outside the ball or table it was looked up in."""

    def __init__(self, word, where=""):
        self.word = word
        msg = f"word {word!r} is outside {where}" if where else f"word {word!r} is out of ball"
        super().__init__(msg)

    def __str__(self):
        return self.args[0]


class NonTermination(LinsoficError, RuntimeError):
    """Rewriting exceeded its step budget."""


class UnsupportedWindow(LinsoficError, ValueError):
    pass


class UnsupportedAlgebra(LinsoficError, ValueError):
    pass


class PreconditionError(LinsoficError, ValueError):
    """A documented precondition failed; ``report`` carries the evidence."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SearchFailure(LinsoficError, RuntimeError):
    """A bounded search ran out of budget without finding a witness.

    This is never a proof of non-existence.
    """


class UnsupportedSize(LinsoficError, ValueError):
    """An enumeration would exceed its configured budget."""


class ConfigError(LinsoficError, ValueError):
    """Malformed command-line or JSON configuration."""
