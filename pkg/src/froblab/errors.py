"""Exception hierarchy.

Every error carries its class name as the wire-level identifier used by the
CLI.  Precondition failures map to exit code 2, budget overruns to 3.
"""

from __future__ import annotations


class FrobLabError(Exception):
    exit_code = 2

    @property
    def name(self) -> str:
        return type(self).__name__


class PreconditionError(FrobLabError):
    pass


class NotPrime(PreconditionError):
    pass


class DegreeTooLarge(PreconditionError):
    pass


class InvalidFrobPower(PreconditionError):
    pass


class DivisionByZero(PreconditionError, ZeroDivisionError):
    pass


class MixedContext(PreconditionError):
    pass


class CharTwo(PreconditionError):
    pass


class BadCharacteristic(PreconditionError):
    pass


class ParseError(PreconditionError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ShadowedVariable(PreconditionError):
    pass


# a quantifier that shadows illegally leaves an occurrence without its binder
UnboundVariable = ShadowedVariable


class MissingParam(PreconditionError):
    pass


class MissingBinding(PreconditionError):
    pass


class DuplicateElements(PreconditionError):
    pass


class NoInjector(PreconditionError):
    pass


class TuplesExhausted(PreconditionError):
    pass


class FixedFieldTooSmall(PreconditionError):
    pass


class FixedFieldMismatch(PreconditionError):
    pass


class CodingFailed(PreconditionError):
    pass


class Inconclusive(PreconditionError):
    pass


class BudgetExceeded(FrobLabError):
    """Raised before (or while) work would exceed the evaluation budget.

    ``covered`` is the half-open index range of the outermost variable that
    was completed; partial counts are never returned.
    """

    exit_code = 3

    def __init__(self, needed: int, budget: int, detail: str = "",
                 covered: tuple[int, int] = (0, 0)):
        msg = f"needs {needed} units of work, budget is {budget}"
        if detail:
            msg = f"{detail}: {msg}"
        super().__init__(msg)
        self.needed = needed
        self.budget = budget
        self.detail = detail
        self.covered = covered
