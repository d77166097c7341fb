"""Exception hierarchy shared by all modules."""


class PctError(Exception):
    """Base class for every error raised by this package."""


class DomainViolation(PctError, ValueError):
    pass


class InvalidParams(PctError, ValueError):
    pass


class EmptyDomain(PctError, ValueError):
    pass


class SingularPoint(PctError, ArithmeticError):
    pass


class SingularMass(PctError, ArithmeticError):
    pass


class InvalidGrid(PctError, ValueError):
    pass


class NonFiniteIntegrand(PctError, ArithmeticError):
    pass


class IntegrationFailure(PctError, RuntimeError):
    pass


class NonNormalizable(PctError, ArithmeticError):
    pass


class ConvergenceFailure(PctError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ParseError(PctError, ValueError):
    """Raised by the expression parser.

    ``position`` is the 0-based character offset of the offending token and
    ``expected`` the set of token kinds that would have been accepted there.
    """

    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = frozenset(expected)
        exp = ", ".join(sorted(self.expected)) if self.expected else "nothing"
        super().__init__(f"{message} at position {position} (expected: {exp})")
