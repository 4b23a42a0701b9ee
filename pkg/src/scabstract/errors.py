"""Exception hierarchy shared by every layer of the workbench."""


class WorkbenchError(Exception):
    """Base class for all errors raised by scabstract."""


# -- formulas and theories ---------------------------------------------------

class UnknownFluent(WorkbenchError):
    pass


class UnboundVariable(WorkbenchError):
    pass


class UnknownActionType(WorkbenchError):
    pass


class ArityMismatch(WorkbenchError):
    pass


class TheoryError(WorkbenchError):
    """A theory or mapping violates a structural invariant."""


# -- search budgets ----------------------------------------------------------

class BudgetExceeded(WorkbenchError):
    pass


class StateSpaceBudgetExceeded(BudgetExceeded):
    pass


class ConfigurationBudgetExceeded(BudgetExceeded):
    pass


# -- mappings ----------------------------------------------------------------

class UnmappedFluent(WorkbenchError):
    pass


class UnmappedActionType(WorkbenchError):
    pass


# -- planning ----------------------------------------------------------------

class NoPlan(WorkbenchError):
    """No plan exists: the reachable state space was exhausted."""


class HorizonExhausted(NoPlan):
    """No plan within the horizon, but unexplored states remain."""


class NoRefinement(WorkbenchError):
    def __init__(self, step, action, message=None):
        self.step = step  # 1-based position in the high-level plan
        self.action = action
        super().__init__(message or f"no refinement of {action} at step {step}")


class SoundnessAssumptionViolated(WorkbenchError):
    def __init__(self, step, action, committed):
        self.step = step
        self.action = action
        self.committed = committed
        super().__init__(
            f"step {step} ({action}) is blocked after the committed prefix, "
            "although another refinement of the prefix would allow it; "
            "the abstraction is not sound")


# -- monitoring --------------------------------------------------------------

class NonExecutableTrace(WorkbenchError):
    def __init__(self, index, action):
        self.index = index
        self.action = action
        super().__init__(f"action {index} ({action}) is not executable")


class ConstraintNotVerified(WorkbenchError):
    pass


class AmbiguousExplanation(WorkbenchError):
    def __init__(self, candidates):
        self.candidates = candidates
        shown = "; ".join("[" + ", ".join(map(str, c)) + "]" for c in candidates)
        super().__init__(f"several high-level sequences explain the trace: {shown}")


# -- frontend ----------------------------------------------------------------

class DslSyntaxError(WorkbenchError):
    def __init__(self, message, line=None, column=None, source=None):
        self.line = line
        self.column = column
        self.source = source
        where = ""
        if line is not None:
            where = f"{source or '<input>'}:{line}:{column}: "
        super().__init__(where + message)


class VocabularyClash(WorkbenchError):
    pass


class UnmappedSymbol(WorkbenchError):
    pass


class NonSDTemplate(WorkbenchError):
    pass
