"""Exception hierarchy shared by every layer of the package.

The CLI maps these onto its exit codes, so the grouping matters:
pattern and binding problems are "validation", DSL problems are
"parse", inadmissible states and solver failures are "runtime".
"""

from __future__ import annotations


class EphsError(Exception):
    """Root of all package errors."""


# -- patterns ---------------------------------------------------------------

class PatternError(EphsError):
    """A pattern operation was applied to an ill-formed input."""


class MultiportMismatch(PatternError):
    pass


class InterfaceMismatch(PatternError):
    pass


class NotComposite(PatternError):
    pass


class NameCollision(PatternError):
    pass


class MissingDefinition(PatternError):
    pass


class CyclicDefinition(PatternError):
    pass


class InvalidPattern(PatternError):
    """Raised when a pattern fails validation where a valid one is required."""

    def __init__(self, message: str, issues=()):
        super().__init__(message)
        self.issues = tuple(issues)


# -- DSL --------------------------------------------------------------------

class DslError(EphsError):
    """Base class for every diagnostic the parser can produce."""

    def __init__(self, message: str, line: int | None = None,
                 column: int | None = None, token: str | None = None,
                 expected: frozenset[str] | None = None):
        self.line = line
        self.column = column
        self.token = token
        self.expected = frozenset(expected or ())
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(where + message)


class DslSyntaxError(DslError):
    pass


class DuplicateName(DslError):
    pass


class UnknownKeyword(DslError):
    pass


# -- binding / assembly -----------------------------------------------------

class BindError(EphsError):
    pass


class UnboundBox(BindError):
    pass


class DuplicateStateOwner(BindError):
    pass


class CausalityError(BindError):
    """The junction structure does not admit an explicit evaluation order."""


class CausalityLoop(CausalityError):
    def __init__(self, message: str, path=()):
        super().__init__(message)
        self.path = tuple(path)


class UnknownComponent(BindError):
    pass


# -- numerics ---------------------------------------------------------------

class InadmissibleState(EphsError):
    pass


class NonPositiveDensity(InadmissibleState):
    pass


class NonPositiveTemperature(InadmissibleState):
    pass


class ParameterError(EphsError, ValueError):
    pass


class NegativeViscosity(ParameterError):
    pass


class NonPositivePermittivity(ParameterError):
    pass


class NonPositivePermeability(ParameterError):
    pass


class NonConvergence(EphsError):
    pass


class GridMismatch(EphsError, ValueError):
    """A field does not have the length its placement requires."""
