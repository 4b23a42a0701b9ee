"""Explaining low-level histories in high-level terms.

A low-level trace is read left to right while tracking every way of
parsing it as a sequence of complete refinements of high-level actions
followed by one unfinished refinement. The positions where some parse is
between refinements are the complete points; the last of them bounds the
largest explainable prefix.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .bat import DEFAULT_STATE_BUDGET, GroundAction
from .congolog import ground_final, ground_trans, normalize, subst_program
from .errors import (AmbiguousExplanation, ConstraintNotVerified, NonExecutableTrace,
                     StateSpaceBudgetExceeded)
from .mapping import RefinementMapping, ll_reachable_states

BOUNDARY = "boundary"


def _states_along(trace, m: RefinementMapping, model: int) -> list:
    ll = m.ll
    w = ll.initial_models[model]
    states = [w]
    for i, a in enumerate(trace):
        if not ll.poss(a, w):
            raise NonExecutableTrace(i, a)
        w = ll.step(a, w)
        states.append(w)
    return states


def _start(m, w, b):
    """Partial refinements beginning with action ``b`` in state ``w``."""
    for alpha, inst in m.instance_table(w).items():
        for a, r in inst.steps:
            if a == b:
                yield alpha, r


def _simulate(trace, m: RefinementMapping, states, history: bool):
    """Complete points of ``trace`` and the unfinished parses at its end.

    Returns ``(complete, partial)``: ``complete`` maps each complete point
    k to the set of segmentations of ``trace[:k]`` (just ``{()}`` when
    ``history`` is off); ``partial`` holds ``(segments, alpha, start,
    residual)`` for refinements still running after the last action.
    """
    complete = {0: {()}}
    partial = set()
    for k, b in enumerate(trace):
        w, w2 = states[k], states[k + 1]
        new = set()
        for segs in complete.get(k, ()):
            for alpha, r in _start(m, w, b):
                new.add((segs, alpha, k if history else 0, r))
        for segs, alpha, start, r in partial:
            for a, r2 in ground_trans(r, w, m.ll):
                if a == b:
                    new.add((segs, alpha, start, r2))
        partial = new
        done = set()
        for segs, alpha, start, r in partial:
            if ground_final(r, w2):
                done.add(segs + ((alpha, tuple(trace[start:k + 1])),) if history else ())
        if done:
            complete[k + 1] = done
    return complete, partial


def lp(trace, m: RefinementMapping, model: int = 0) -> int:
    """Length of the largest prefix of ``trace`` that refines some high-level sequence."""
    trace = tuple(trace)
    states = _states_along(trace, m, model)
    complete, _ = _simulate(trace, m, states, history=False)
    return max(complete)


@dataclass(frozen=True)
class TraceExplanation:
    model: int
    prefix_end: int
    hl_sequence: tuple
    segments: tuple            # ((hl action, ll subtrace), ...)
    residual: tuple            # low-level actions after the explained prefix
    residual_candidates: tuple  # high-level actions the residual partially refines

    @property
    def residual_status(self) -> str:
        if not self.residual:
            return "complete"
        if self.residual_candidates:
            return "mid-refinement"
        return "unexplained"

    def lines(self) -> list:
        out = ["[" + ", ".join(map(str, seg)) + f"] => {alpha}" for alpha, seg in self.segments]
        if self.residual:
            shown = ", ".join(map(str, self.residual))
            if self.residual_candidates:
                out.append(f"[{shown}] ... mid-refinement of "
                           + " or ".join(map(str, self.residual_candidates)))
            else:
                out.append(f"[{shown}] ... not part of any refinement")
        return out

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "prefix_end": self.prefix_end,
            "hl_sequence": [str(a) for a in self.hl_sequence],
            "segments": [{"hl": str(a), "ll": [str(x) for x in s]} for a, s in self.segments],
            "residual": [str(a) for a in self.residual],
            "residual_status": self.residual_status,
            "residual_candidates": [str(a) for a in self.residual_candidates],
        }


def residual_candidates(residual, m: RefinementMapping, w) -> tuple:
    """High-level actions whose refinement can begin with ``residual`` from ``w``."""
    if not residual:
        return ()
    out = []
    for alpha, inst in m.instance_table(w).items():
        current = {r for a, r in inst.steps if a == residual[0]}
        s = m.ll.step(residual[0], w)
        for b in residual[1:]:
            current = {r2 for r in current for a, r2 in ground_trans(r, s, m.ll) if a == b}
            s = m.ll.step(b, s)
        if current:
            out.append(alpha)
    return tuple(sorted(out, key=m.hl.action_key))


def invert(trace, m: RefinementMapping, model: int = 0,
           require_constraint: bool = True) -> TraceExplanation:
    """The high-level sequence a low-level trace carries out, with the leftover part.

    Uniqueness is only guaranteed once :func:`verify_constraint1` has
    succeeded for ``m``; otherwise :class:`ConstraintNotVerified` is raised
    unless ``require_constraint`` is off, in which case several candidate
    sequences surface as :class:`AmbiguousExplanation`.
    """
    if require_constraint:
        verdict = m._memo.get("constraint1")
        if verdict is None:
            raise ConstraintNotVerified("run verify_constraint1 on this mapping first")
        if not verdict.holds:
            raise ConstraintNotVerified("the disjointness constraint does not hold for this mapping")
    trace = tuple(trace)
    states = _states_along(trace, m, model)
    complete, _ = _simulate(trace, m, states, history=True)
    k = max(complete)
    by_seq = {}
    for segs in complete[k]:
        by_seq.setdefault(tuple(a for a, _ in segs), []).append(segs)
    key = lambda seq: m.hl.trace_key(seq)
    if len(by_seq) > 1:
        raise AmbiguousExplanation(sorted(by_seq, key=key))
    (seq, options), = by_seq.items()
    segs = min(options, key=lambda s: [len(x) for _, x in s])
    residual = trace[k:]
    return TraceExplanation(model, k, seq, segs, residual,
                            residual_candidates(residual, m, states[k]))


# -- constraints ------------------------------------------------------------------

@dataclass(frozen=True)
class ClauseWitness:
    clause: str
    detail: str
    ll_model: int
    ll_prefix: tuple            # reaches the state where the violation starts
    action: GroundAction | None = None
    other: GroundAction | None = None
    trace: tuple = ()           # the offending execution from that state

    def to_dict(self) -> dict:
        return {"clause": self.clause, "detail": self.detail, "ll_model": self.ll_model,
                "ll_prefix": [str(a) for a in self.ll_prefix],
                "action": None if self.action is None else str(self.action),
                "other": None if self.other is None else str(self.other),
                "trace": [str(a) for a in self.trace]}


@dataclass(frozen=True)
class ConstraintVerdict:
    name: str
    holds: bool
    witnesses: dict = field(default_factory=dict)   # clause -> ClauseWitness or None

    def to_dict(self) -> dict:
        return {"constraint": self.name, "holds": self.holds,
                "clauses": {k: (None if v is None else v.to_dict())
                            for k, v in self.witnesses.items()}}

    def lines(self) -> list:
        out = [f"{self.name}: {'holds' if self.holds else 'FAILS'}"]
        for clause, w in self.witnesses.items():
            if w is None:
                out.append(f"  ({clause}) holds")
            else:
                out.append(f"  ({clause}) fails: {w.detail}")
                out.append("      reached by [" + ", ".join(map(str, w.ll_prefix)) + "]"
                           f" in low-level initial model {w.ll_model}")
        return out


def _template(m, alpha):
    r = m.refinement(alpha.name)
    return normalize(subst_program(r.program, dict(zip(r.params, alpha.args))))


def _residuals(m, alpha, w, trace) -> set:
    """Residual programs of ``m(alpha)`` after exactly ``trace`` from ``w``."""
    if not trace:
        return {_template(m, alpha)}
    inst = m.instance_table(w).get(alpha)
    if inst is None:
        return set()
    current = {r for a, r in inst.steps if a == trace[0]}
    s = m.ll.step(trace[0], w)
    for b in trace[1:]:
        current = {r2 for r in current for a, r2 in ground_trans(r, s, m.ll) if a == b}
        if not current:
            return set()
        s = m.ll.step(b, s)
    return current


def verify_constraint1(m: RefinementMapping, budget: int = DEFAULT_STATE_BUDGET) -> ConstraintVerdict:
    """Disjoint, non-extendable, non-empty refinements, over all reachable low-level states.

    (a) no complete execution of one high-level action's refinement is
    also a partial execution of another's; (b) a complete execution cannot
    be extended by one more action within the same refinement; (c) every
    complete execution performs at least one action. The result is cached
    on the mapping so :func:`invert` can rely on it.
    """
    arena = ll_reachable_states(m, budget)
    hl = m.hl
    found = {"a": None, "b": None, "c": None}
    all_hl = None
    for w in arena.nodes:
        if all(found.values()):
            break
        seed, prefix, _ = arena.paths[w]
        table = m.instance_table(w)
        for alpha in table:
            for ex in m.executions(alpha, w):
                if found["c"] is None and not ex.trace:
                    found["c"] = ClauseWitness("c", f"{alpha} has a refinement with no actions",
                                               seed, prefix, alpha)
                if found["a"] is None:
                    if ex.trace:
                        others = [o for o in table if o != alpha and _residuals(m, o, w, ex.trace)]
                    else:
                        if all_hl is None:
                            all_hl = list(hl.ground_actions())
                        others = [o for o in all_hl if o != alpha][:1]
                    if others:
                        other = min(others, key=hl.action_key)
                        found["a"] = ClauseWitness(
                            "a", f"[{', '.join(map(str, ex.trace))}] refines {alpha} and is also "
                                 f"a partial refinement of {other}",
                            seed, prefix, alpha, other, ex.trace)
                if found["b"] is None:
                    for r in _residuals(m, alpha, w, ex.trace):
                        steps = ground_trans(r, ex.state, m.ll)
                        if steps:
                            b = steps[0][0]
                            found["b"] = ClauseWitness(
                                "b", f"the refinement [{', '.join(map(str, ex.trace))}] of {alpha} "
                                     f"can be extended by {b}",
                                seed, prefix, alpha, None, ex.trace + (b,))
                            break
    verdict = ConstraintVerdict("constraint 1", not any(found.values()), found)
    m._memo["constraint1"] = verdict
    return verdict


def verify_constraint2(m: RefinementMapping, budget: int = DEFAULT_STATE_BUDGET,
                       models=None) -> ConstraintVerdict:
    """Every executable low-level history is a (partial) refinement of some high-level sequence.

    Breadth-first search over pairs (state, set of parse configurations);
    a primitive action that leaves no configuration is a counterexample,
    reported with the shortest offending trace. ``models`` restricts the
    search to some low-level initial models; a restricted verdict is not
    cached.
    """
    ll = m.ll
    start_cfg = frozenset([BOUNDARY])
    seen = {}
    queue = deque()
    seeds = range(len(ll.initial_models)) if models is None else sorted(set(models))
    for i in seeds:
        w = ll.initial_models[i]
        node = (w, start_cfg)
        if node not in seen:
            seen[node] = (i, ())
            queue.append(node)
    while queue:
        node = queue.popleft()
        w, cfg = node
        model, trace = seen[node]
        for b in ll.enabled(w):
            w2 = ll.step(b, w)
            nxt = set()
            for c in cfg:
                if c is BOUNDARY:
                    for alpha, r in _start(m, w, b):
                        nxt.add((alpha, r))
                else:
                    alpha, r = c
                    for a, r2 in ground_trans(r, w, ll):
                        if a == b:
                            nxt.add((alpha, r2))
            if not nxt:
                wit = ClauseWitness("all", f"[{', '.join(map(str, trace + (b,)))}] is executable but "
                                           "no sequence of refinements produces it",
                                    model, trace, None, None, trace + (b,))
                verdict = ConstraintVerdict("constraint 2", False, {"all": wit})
                if models is None:
                    m._memo["constraint2"] = verdict
                return verdict
            if any(ground_final(r, w2) for _, r in nxt):
                nxt.add(BOUNDARY)
            key = (w2, frozenset(nxt))
            if key not in seen:
                if len(seen) >= budget:
                    raise StateSpaceBudgetExceeded(f"more than {budget} search nodes")
                seen[key] = (model, trace + (b,))
                queue.append(key)
    verdict = ConstraintVerdict("constraint 2", True, {"all": None})
    if models is None:
        m._memo["constraint2"] = verdict
    return verdict


# -- forecasting --------------------------------------------------------------------

@dataclass(frozen=True)
class Forecast:
    hl_sequence: tuple
    live_models: tuple          # high-level initial models where the sequence is executable
    possible: dict              # action -> models in which it may come next

    def status(self, alpha: GroundAction) -> str:
        models = self.possible.get(alpha, ())
        if not models:
            return "impossible"
        if len(models) == len(self.live_models):
            return "entailed"
        return "satisfiable"

    def lines(self, query=()) -> list:
        out = []
        for alpha, models in self.possible.items():
            tag = "possible in every model" if len(models) == len(self.live_models) else \
                "possible in model " + ", ".join(map(str, models))
            out.append(f"{alpha}: satisfiable ({tag})")
        for alpha in query:
            if alpha not in self.possible:
                out.append(f"{alpha}: impossible")
        if not out:
            out.append("no high-level action can occur next")
        return out

    def to_dict(self, query=()) -> dict:
        return {"hl_sequence": [str(a) for a in self.hl_sequence],
                "live_models": list(self.live_models),
                "next": [{"action": str(a), "status": "satisfiable", "models": list(ms)}
                         for a, ms in self.possible.items()]
                        + [{"action": str(a), "status": "impossible", "models": []}
                           for a in query if a not in self.possible]}


def forecast_next(hl_sequence, bat_h) -> Forecast:
    """High-level actions that may come next after ``hl_sequence``.

    An action is satisfiable when it is executable after the sequence in
    some initial model where the sequence itself is executable.
    """
    seq = tuple(hl_sequence)
    live, states = [], []
    for i, w in enumerate(bat_h.initial_models):
        ok = True
        for a in seq:
            if not bat_h.poss(a, w):
                ok = False
                break
            w = bat_h.step(a, w)
        if ok:
            live.append(i)
            states.append(w)
    possible = {}
    for i, w in zip(live, states):
        for a in bat_h.enabled(w):
            possible.setdefault(a, []).append(i)
    ordered = {a: tuple(possible[a]) for a in sorted(possible, key=bat_h.action_key)}
    return Forecast(seq, tuple(live), ordered)
