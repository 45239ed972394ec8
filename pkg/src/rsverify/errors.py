"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class RsvError(Exception):
    """Base class for all toolchain errors."""

    kind = "Error"


class ParseError(RsvError):
    kind = "SyntaxError"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class UndeclaredConstructor(ParseError):
    kind = "UndeclaredConstructor"


class NestedPattern(ParseError):
    kind = "NestedPattern"


class DuplicatePatternVariable(ParseError):
    kind = "DuplicatePatternVariable"


class TemporalInAtom(ParseError):
    kind = "TemporalInAtom"


class DuplicateDefinition(RsvError):
    kind = "DuplicateDefinition"


class ArityMismatch(RsvError):
    kind = "ArityMismatch"

    def __init__(self, message: str, loc=None):
        self.loc = loc
        super().__init__(message if loc is None else f"{loc[0]}:{loc[1]}: {message}")


class RestrictedFormError(RsvError):
    """A program does not conform to the restricted stream grammar."""

    kind = "RestrictedFormError"

    def __init__(self, message: str, expr=None):
        self.expr = expr
        super().__init__(message)


class NonVariableScrutinee(RestrictedFormError):
    kind = "NonVariableScrutinee"


class LetBoundScrutinee(RestrictedFormError):
    kind = "LetBoundScrutinee"


class NonVariableCallArgument(RestrictedFormError):
    kind = "NonVariableCallArgument"


class UnsaturatedCall(RestrictedFormError):
    kind = "UnsaturatedCall"


class EvaluationError(RsvError):
    kind = "EvaluationError"


class EvaluationStuck(EvaluationError):
    kind = "Stuck"

    def __init__(self, reason, expr):
        self.reason = reason
        self.expr = expr
        super().__init__(f"evaluation stuck ({reason.value})")


class BudgetExhausted(EvaluationError):
    kind = "BudgetExhausted"

    def __init__(self, budget: int, expr=None):
        self.budget = budget
        self.expr = expr
        super().__init__(f"no weak head normal form within {budget} steps")


class TransformError(RsvError):
    kind = "TransformError"


class WhistleBudgetExceeded(TransformError):
    kind = "WhistleBudgetExceeded"


class NonStreamShape(TransformError):
    kind = "NonStreamShape"


class VerificationError(RsvError):
    kind = "VerificationError"


class PropositionDivergence(VerificationError):
    kind = "PropositionDivergence"


class PropositionStuckOnConstructor(VerificationError):
    kind = "PropositionStuckOnConstructor"


class NonCanonicalShape(RsvError):
    kind = "NonCanonicalShape"


class AtomUndefinedOnState(RsvError):
    kind = "AtomUndefinedOnState"


class BisimulationError(RsvError):
    """Evaluation failed while comparing two programs on a concrete stream."""

    kind = "BisimulationError"

    def __init__(self, message: str, stream):
        self.stream = stream
        super().__init__(f"{message} (stream: {' '.join(stream)})")
