"""Exception hierarchy shared by every engine module."""

from __future__ import annotations


class FqlError(Exception):
    """Base class for all engine errors."""


class ParallelityError(FqlError):
    """Two paths were expected to share start and end nodes but do not."""


class IncompleteSystem(FqlError):
    """The word problem is undecided because completion ran out of fuel."""


class SignatureError(FqlError):
    """A signature is malformed (dangling edge, duplicate attribute, ...)."""


class MorphismError(FqlError):
    """A signature morphism does not respect endpoints, equations or typing."""


class UnknownFiniteness(FqlError):
    """Finiteness of some category could not be certified within fuel."""


class NotOpFibration(FqlError):
    """A functor lacks unique path lifting (it is not a discrete op-fibration)."""


class NotSigmaReady(FqlError):
    """A morphism cannot be used for Sigma."""


class NotPiReady(FqlError):
    """A morphism cannot be used for Pi."""


class InfiniteTarget(FqlError):
    """Pi would have to materialize an infinite limit."""


class UnknownID(FqlError):
    """An ID is not a row of the expected node."""


class BudgetExceeded(FqlError):
    """An intermediate construction grew past its configured size budget."""


class ArityMismatch(FqlError):
    """Relational arities disagree."""


class UnknownTable(FqlError):
    """A plan refers to a table that does not exist yet."""


class NotPointed(FqlError):
    """A signature is not in pointed (active domain) form."""


class InstanceError(FqlError):
    """An instance failed validation where a valid one was required."""


class ParseError(FqlError):
    """Syntax error in program text, carrying a 1-based line and column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line else ""
        super().__init__(where + message)


class ResolutionError(ParseError):
    """A name in a program does not resolve or is declared twice."""
