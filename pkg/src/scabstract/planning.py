"""Abstract planning and stepwise refinement of abstract plans.

Plans are searched breadth first over tuples of states, one per initial
model, so that incomplete initial knowledge is handled exactly: in
``entailed`` mode an action may only be used where it is possible in
every model, in ``satisfiable`` mode where it is possible in some model
that is still alive. Actions are expanded in canonical order, which makes
the first plan found the lexicographically least among the shortest.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .bat import DEFAULT_STATE_BUDGET, BasicActionTheory, GroundAction
from .errors import (HorizonExhausted, NoPlan, NoRefinement, SoundnessAssumptionViolated,
                     StateSpaceBudgetExceeded)
from .kernel import TRUE, evaluate
from .mapping import RefinementMapping

ENTAILED = "entailed"
SATISFIABLE = "satisfiable"


@dataclass(frozen=True)
class PlanRequest:
    goal: object = TRUE
    horizon: int | None = None
    mode: str = ENTAILED
    level: str = "high"

    def __post_init__(self):
        if self.horizon is not None and self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if self.mode not in (ENTAILED, SATISFIABLE):
            raise ValueError(f"unknown mode {self.mode!r}")


def _moves(bat: BasicActionTheory, node: tuple, mode: str) -> list:
    live = [w for w in node if w is not None]
    if mode == ENTAILED:
        first, rest = live[0], live[1:]
        return [a for a in bat.enabled(first) if all(bat.poss(a, w) for w in rest)]
    actions = set()
    for w in live:
        actions.update(bat.enabled(w))
    return sorted(actions, key=bat.action_key)


def _advance(bat, node, a):
    return tuple(None if w is None or not bat.poss(a, w) else bat.step(a, w) for w in node)


def _goal(goal, node, mode) -> bool:
    live = [w for w in node if w is not None]
    if mode == ENTAILED:
        return all(evaluate(goal, w) for w in live)
    return any(evaluate(goal, w) for w in live)


def plan(bat: BasicActionTheory, req: PlanRequest, budget: int = DEFAULT_STATE_BUDGET) -> list:
    """Shortest executable action sequence reaching the goal.

    Raises :class:`NoPlan` when the reachable tuple space is exhausted and
    :class:`HorizonExhausted` when the horizon cut the search short.
    """
    start = tuple(bat.initial_models)
    if _goal(req.goal, start, req.mode):
        return []
    parent = {start: None}
    queue = deque([(start, 0)])
    cut = False
    while queue:
        node, depth = queue.popleft()
        moves = _moves(bat, node, req.mode)
        if req.horizon is not None and depth >= req.horizon:
            if any(_advance(bat, node, a) not in parent for a in moves):
                cut = True
            continue
        for a in moves:
            nxt = _advance(bat, node, a)
            if nxt in parent:
                continue
            if len(parent) >= budget:
                raise StateSpaceBudgetExceeded(f"more than {budget} search nodes")
            parent[nxt] = (node, a)
            if _goal(req.goal, nxt, req.mode):
                out = []
                while parent[nxt] is not None:
                    nxt, act = parent[nxt]
                    out.append(act)
                return out[::-1]
            queue.append((nxt, depth + 1))
    if cut:
        raise HorizonExhausted(f"no plan of length at most {req.horizon}")
    raise NoPlan("no plan exists")


def plan_hl(bat_h: BasicActionTheory, req: PlanRequest, budget: int = DEFAULT_STATE_BUDGET) -> list:
    return plan(bat_h, req, budget)


def project(actions, phi, bat: BasicActionTheory) -> str:
    """``entailed``, ``satisfiable-only`` or ``unsatisfiable``.

    Classifies "the sequence is executable and ``phi`` holds afterwards"
    across the initial models.
    """
    verdicts = []
    for w in bat.initial_models:
        ok = True
        for a in actions:
            if not bat.poss(a, w):
                ok = False
                break
            w = bat.step(a, w)
        verdicts.append(ok and evaluate(phi, w))
    if all(verdicts):
        return "entailed"
    if any(verdicts):
        return "satisfiable-only"
    return "unsatisfiable"


# -- refinement ---------------------------------------------------------------

@dataclass(frozen=True)
class RefinedPlan:
    hl_plan: tuple
    ll_trace: tuple
    segments: tuple            # ((hl action, ll subtrace), ...)
    model: int | None = 0      # low-level initial model, None for a uniform trace
    alternatives: tuple = ()   # per step: every complete execution from the committed state

    def lines(self) -> list:
        out = []
        for alpha, seg in self.segments:
            out.append("[" + ", ".join(map(str, seg)) + f"] => {alpha}")
        return out

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "hl_plan": [str(a) for a in self.hl_plan],
            "ll_trace": [str(a) for a in self.ll_trace],
            "segments": [{"hl": str(a), "ll": [str(x) for x in seg]} for a, seg in self.segments],
        }


def prefix_end_states(plan_, m: RefinementMapping, w) -> set:
    """States reachable by some refinement of ``plan_`` from ``w``."""
    states = {w}
    for alpha in plan_:
        states = {ex.state for s in states for ex in m.executions(alpha, s)}
        if not states:
            break
    return states


def refine_plan(plan_, m: RefinementMapping, model: int = 0,
                alternatives: bool = False) -> RefinedPlan:
    """Refine an abstract plan one action at a time, never backtracking.

    Each step commits to the canonically first complete execution of the
    action's refinement. If a step has no execution, the failure is
    reported as :class:`NoRefinement` when no refinement of the plan prefix
    exists at all, and as :class:`SoundnessAssumptionViolated` when the
    committed choice blocked a refinement another choice would have allowed.
    """
    plan_ = tuple(plan_)
    w = m.ll.initial_models[model]
    trace, segments, alts = [], [], []
    for i, alpha in enumerate(plan_):
        execs = m.executions(alpha, w)
        if not execs:
            if prefix_end_states(plan_[:i + 1], m, m.ll.initial_models[model]):
                raise SoundnessAssumptionViolated(i + 1, alpha, tuple(trace))
            raise NoRefinement(i + 1, alpha)
        if alternatives:
            alts.append(tuple(execs))
        chosen = execs[0]
        segments.append((alpha, chosen.trace))
        trace.extend(chosen.trace)
        w = chosen.state
    return RefinedPlan(plan_, tuple(trace), tuple(segments), model, tuple(alts))


def all_refinements(plan_, m: RefinementMapping, model: int = 0) -> list:
    """Every segmented refinement of ``plan_`` from one initial model, canonical order."""
    out = []

    def rec(i, w, segs):
        if i == len(plan_):
            out.append(tuple(segs))
            return
        for ex in m.executions(plan_[i], w):
            segs.append((plan_[i], ex.trace))
            rec(i + 1, ex.state, segs)
            segs.pop()

    rec(0, m.ll.initial_models[model], [])
    return out


def refine_uniform(plan_, m: RefinementMapping) -> RefinedPlan:
    """One low-level trace that refines ``plan_`` in every low-level initial model."""
    plan_ = tuple(plan_)
    models = m.ll.initial_models
    for segs in all_refinements(plan_, m, 0):
        ok = True
        for w in models[1:]:
            for alpha, seg in segs:
                match = [ex for ex in m.executions(alpha, w) if ex.trace == seg]
                if not match:
                    ok = False
                    break
                w = match[0].state
            if not ok:
                break
        if ok:
            trace = tuple(a for _, seg in segs for a in seg)
            return RefinedPlan(plan_, trace, segs, None)
    first_bad = 1
    for k in range(1, len(plan_) + 1):
        if all(prefix_end_states(plan_[:k], m, w) for w in models):
            continue
        first_bad = k
        break
    else:
        first_bad = len(plan_)
    raise NoRefinement(first_bad, plan_[first_bad - 1] if plan_ else None,
                       "no single low-level trace refines the plan in every low-level initial model")


def refine_per_model(plan_, m: RefinementMapping, alternatives: bool = False) -> dict:
    """Greedy refinement separately for every low-level initial model."""
    return {i: refine_plan(plan_, m, i, alternatives) for i in range(len(m.ll.initial_models))}
