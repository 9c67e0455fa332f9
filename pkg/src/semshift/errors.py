"""Exception hierarchy shared by all semshift modules."""

from __future__ import annotations


class SemshiftError(Exception):
    """Base class for every error raised by this package."""


class SyntaxErrorAt(SemshiftError):
    """A located syntax error in one of the text formats."""

    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = "<string>"):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        super().__init__(f"{source}:{line}:{col}: {message}")


class RuleSyntaxError(SyntaxErrorAt):
    pass


class VitSyntaxError(SyntaxErrorAt):
    pass


class HierarchySyntaxError(SyntaxErrorAt):
    pass


class RuleError(SemshiftError):
    """A well-formed rule file with a semantic problem (empty SLSem, unknown class...)."""

    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = "<string>"):
        self.message = message
        self.line = line
        self.col = col
        self.source = source
        super().__init__(f"{source}:{line}:{col}: {message}")


class VitValidationError(SemshiftError):
    pass


class HierarchyError(SemshiftError):
    pass


class UnknownSortError(HierarchyError):
    pass


class UnknownLabelError(SemshiftError):
    pass


class CompileError(SemshiftError):
    pass


class TransferError(SemshiftError):
    """No derivation exists under the ``error`` fallback policy."""

    def __init__(self, message: str, stuck=None):
        self.stuck = stuck
        super().__init__(message)


class HookError(SemshiftError):
    """A condition hook raised or is not registered."""


class OracleLimitError(SemshiftError):
    pass
