# Exception types raised by the solver modules
# Library code raises these; only the command line turns them into exit codes

from dataclasses import dataclass
from typing import Optional, Sequence


@dataclass(frozen=True)
class Violation:
    """One broken invariant of a game description."""
    kind: str
    message: str
    state: Optional[str] = None

    def __str__(self):
        where = f" at state {self.state!r}" if self.state is not None else ""
        return f"{self.kind}{where}: {self.message}"


class DynkinError(Exception):
    """Base class for every error raised by the solver."""


# ---------- INPUT ERRORS ----------

class GameValidationError(DynkinError, ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")

    @property
    def kinds(self):
        return {v.kind for v in self.violations}


class ParseError(DynkinError, ValueError):
    def __init__(self, message, line=None, column=None, field=None):
        self.line = line
        self.column = column
        self.field = field
        context = []
        if line is not None:
            context.append(f"line {line}")
        if column is not None:
            context.append(f"column {column}")
        if field is not None:
            context.append(f"field {field!r}")
        suffix = f" ({', '.join(context)})" if context else ""
        super().__init__(f"{message}{suffix}")


class SchemaError(DynkinError, ValueError):
    def __init__(self, message, field=None, kind="SchemaError"):
        self.field = field
        self.kind = kind
        prefix = f"{kind}: " if kind != "SchemaError" else ""
        where = f" (field {field!r})" if field else ""
        super().__init__(f"{prefix}{message}{where}")


class ExplicitLimitError(SchemaError):
    def __init__(self, n_states, limit):
        self.n_states = n_states
        self.limit = limit
        super().__init__(f"{n_states} states declared, limit is {limit}",
                         field="states", kind="ExplicitLimitError")


class PreconditionViolated(DynkinError, ValueError):
    def __init__(self, message, witnesses=()):
        self.witnesses = list(witnesses)
        if self.witnesses:
            message = f"{message}; witness states: {', '.join(map(str, self.witnesses))}"
        super().__init__(message)


class MedConditionViolated(PreconditionViolated):
    pass


# ---------- SOLVER ERRORS ----------

class MaxIterExceeded(DynkinError, RuntimeError):
    def __init__(self, iterations, residual, best=None):
        self.iterations = iterations
        self.residual = residual
        self.best = best
        super().__init__(f"no convergence after {iterations} iterations (residual {residual:.3e})")


class SingularSystem(DynkinError, ArithmeticError):
    pass


class NoCaseMatched(DynkinError, ArithmeticError):
    def __init__(self, state, detail=""):
        self.state = state
        super().__init__(f"no case matched at state {state!r} {detail}".rstrip())


class CaseGuardFailure(DynkinError, ArithmeticError):
    def __init__(self, state, detail=""):
        self.state = state
        super().__init__(f"case guards inconsistent at state {state!r} {detail}".rstrip())


class DegenerateGame(DynkinError, ArithmeticError):
    pass


class NonConvergence(DynkinError, RuntimeError):
    def __init__(self, message, best=None, iterations=0):
        self.best = best
        self.iterations = iterations
        super().__init__(message)


class VerificationFailed(DynkinError, RuntimeError):
    def __init__(self, report, message="candidate profiles failed verification"):
        self.report = report
        super().__init__(f"{message}: {report.summary()}")
