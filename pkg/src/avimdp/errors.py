"""Exception hierarchy shared by the package."""


class AviError(Exception):
    """Base class for every error raised by :mod:`avimdp`."""


class InputError(AviError, ValueError):
    """A caller-supplied argument is outside the operation's domain."""


class MdpParseError(InputError):
    """An instance document is malformed.

    ``locus`` names the offending field path (``states[2].actions[0].row``)
    or ``line L, column C`` for JSON syntax errors.
    """

    def __init__(self, message, locus=None):
        self.locus = locus
        super().__init__(f"{locus}: {message}" if locus else message)


class MdpValidationError(InputError):
    """An instance violates a model invariant; ``report`` lists every problem."""

    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(str(v) for v in report.violations))


class PreconditionError(AviError, ValueError):
    """An operator was applied outside the set it is defined on."""


class StructuralError(AviError):
    """The model lacks structure an operation relies on (e.g. no terminal mass)."""


class BracketError(InputError):
    """A bisection bracket does not enclose a sign change."""


class NonConvergenceError(AviError):
    """An iteration hit its limit; carries the last iterate and residual."""

    def __init__(self, message, iterate=None, residual=None, iterations=None):
        self.iterate = iterate
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)
