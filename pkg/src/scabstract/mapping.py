"""Refinement mappings from a high-level theory to a low-level one.

Every high-level action type is refined by a low-level program template
over the type's parameters, and every high-level fluent by a low-level
formula template. Everything the abstraction checks need is derived here:
mapped formulas and action sequences, the synthesized programs
``any1hl`` / ``anyseqhl``, and the arena of low-level states reachable by
complete refinements of high-level actions.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .bat import (DEFAULT_STATE_BUDGET, BasicActionTheory, Edge, GroundAction, LTS,
                  primitive_moves, reachable_states)
from .congolog import (NIL, Choice, Pick, Star, Test, actions_of, choice,
                       do_executions, final_with, is_situation_determined,
                       possible_with, program_free_vars, seq, subst_program,
                       trans_with)
from .errors import (NonSDTemplate, TheoryError, UnknownActionType, UnknownFluent,
                     UnmappedActionType, UnmappedFluent, UnmappedSymbol)
from .kernel import (FALSE, And, Atom, Exists, Forall, Iff, Implies, Not, Or,
                     WorldState, fluents_of, free_vars, solve, substitute)


@dataclass(frozen=True)
class ActionRefinement:
    name: str
    params: tuple
    program: object


@dataclass(frozen=True)
class FluentRefinement:
    name: str
    params: tuple
    formula: object


class InstanceSteps(NamedTuple):
    """First transitions of one instantiated action template in one state."""
    final: bool
    steps: tuple   # ((low-level action, residual program), ...)


class RefinementMapping:
    def __init__(self, hl: BasicActionTheory, ll: BasicActionTheory,
                 actions: Iterable[ActionRefinement], fluents: Iterable[FluentRefinement]):
        self.hl = hl
        self.ll = ll
        self.actions = {r.name: r for r in actions}
        self.fluents = {r.name: r for r in fluents}
        self._memo = {"proj": {}, "table": {}, "exec": {}, "pre": {}}
        self._validate()

    def _validate(self):
        for at in self.hl.actions:
            r = self.actions.get(at.name)
            if r is None:
                raise UnmappedSymbol(f"high-level action {at.name} has no refinement")
            if len(r.params) != len(at.params):
                raise TheoryError(f"refinement of {at.name} has {len(r.params)} parameters, expected {len(at.params)}")
            extra = program_free_vars(r.program) - set(r.params)
            if extra:
                raise TheoryError(f"refinement of {at.name} has free variables {sorted(extra)}")
            for name in actions_of(r.program):
                self.ll.action_type(name)
        for f, arity in self.hl.sig.fluents:
            r = self.fluents.get(f)
            if r is None:
                raise UnmappedSymbol(f"high-level fluent {f} has no refinement")
            if len(r.params) != arity:
                raise TheoryError(f"refinement of {f} has {len(r.params)} parameters, expected {arity}")
            extra = free_vars(r.formula) - set(r.params)
            if extra:
                raise TheoryError(f"refinement of {f} has free variables {sorted(extra)}")
            unknown = fluents_of(r.formula) - set(self.ll.sig.arity)
            if unknown:
                raise UnknownFluent(f"refinement of {f} mentions {sorted(unknown)}")
        for name in self.actions:
            if name not in self.hl._memo["types"]:
                raise UnknownActionType(f"mapping refines unknown action {name}")
        for name in self.fluents:
            if name not in self.hl.sig.arity:
                raise UnknownFluent(f"mapping refines unknown fluent {name}")

    # -- formulas -------------------------------------------------------------

    def map_formula(self, phi):
        t = type(phi)
        if t is Atom:
            r = self.fluents.get(phi.fluent)
            if r is None:
                raise UnmappedFluent(phi.fluent)
            return substitute(r.formula, dict(zip(r.params, phi.args)))
        if t is Not:
            return Not(self.map_formula(phi.body))
        if t is And or t is Or:
            return t(tuple(self.map_formula(f) for f in phi.items))
        if t is Implies or t is Iff:
            return t(self.map_formula(phi.left), self.map_formula(phi.right))
        if t is Exists or t is Forall:
            return t(phi.var, self.map_formula(phi.body))
        return phi

    def mapped_precondition(self, name: str):
        cache = self._memo["pre"]
        if name not in cache:
            cache[name] = self.map_formula(self.hl.action_type(name).precondition)
        return cache[name]

    def project_state(self, w: WorldState) -> WorldState:
        """The high-level state m-isomorphic to low-level state ``w``."""
        cache = self._memo["proj"]
        hit = cache.get(w)
        if hit is None:
            atoms = []
            for f, _ in self.hl.sig.fluents:
                r = self.fluents[f]
                for b in solve(r.formula, r.params, w):
                    atoms.append((f, tuple(b[p] for p in r.params)))
            hit = WorldState(self.hl.sig, atoms)
            cache[w] = hit
        return hit

    # -- actions and programs -------------------------------------------------

    def refinement(self, name: str) -> ActionRefinement:
        try:
            return self.actions[name]
        except KeyError:
            raise UnmappedActionType(name) from None

    def map_action(self, a: GroundAction):
        r = self.refinement(a.name)
        if len(a.args) != len(r.params):
            raise TheoryError(f"{a} has the wrong number of arguments")
        return subst_program(r.program, dict(zip(r.params, a.args)))

    def map_action_sequence(self, alphas: Iterable[GroundAction]):
        parts = [self.map_action(a) for a in alphas]
        return seq(*parts) if parts else NIL

    def any1hl(self):
        """Any refinement of any one high-level action."""
        branches = []
        for at in self.hl.actions:
            r = self.actions[at.name]
            body = r.program
            for p in reversed(r.params):
                body = Pick(p, body)
            branches.append(body)
        return choice(*branches) if branches else Test(FALSE)

    def anyseqhl(self):
        """Any sequence of refinements of high-level actions."""
        return Star(self.any1hl())

    # -- per-state instance tables ---------------------------------------------

    def instance_table(self, w: WorldState) -> dict:
        """High-level ground actions whose template can move or stop in ``w``.

        Maps each such action, in canonical order, to its first transitions.
        Omitted actions have no transition and are not final in ``w``.
        """
        cache = self._memo["table"]
        hit = cache.get(w)
        if hit is not None:
            return hit
        table = {}
        domain = self.ll.sig.domain
        for at in self.hl.actions:
            r = self.actions[at.name]
            params, prog = r.params, r.program
            env = {}

            def rec(i):
                if i == len(params):
                    steps = trans_with(prog, w, self.ll, env)
                    fin = final_with(prog, w, env)
                    if steps or fin:
                        alpha = GroundAction(at.name, tuple(env[p] for p in params))
                        table[alpha] = InstanceSteps(fin, tuple(steps))
                    return
                for name in domain:
                    env[params[i]] = name
                    if possible_with(prog, w, self.ll, env):
                        rec(i + 1)
                del env[params[i]]

            rec(0)
        cache[w] = table
        return table

    def executions(self, alpha: GroundAction, w: WorldState) -> list:
        """Complete executions of ``m(alpha)`` from ``w`` (canonical order)."""
        key = (alpha, w)
        cache = self._memo["exec"]
        hit = cache.get(key)
        if hit is None:
            if alpha not in self.instance_table(w):
                hit = []
            else:
                r = self.refinement(alpha.name)
                hit = do_executions(r.program, w, self.ll, env=dict(zip(r.params, alpha.args)))
            cache[key] = hit
        return hit

    def hl_moves(self, w: WorldState) -> list:
        out = []
        for alpha in self.instance_table(w):
            seen = set()
            for ex in self.executions(alpha, w):
                if ex.state not in seen:
                    seen.add(ex.state)
                    out.append(Edge(alpha, ex.state, ex.trace))
        return out

    def check_templates_sd(self, states: Iterable[WorldState] | None = None):
        """First non-situation-determined template instance, or ``None``.

        ``states`` defaults to every low-level state reachable by
        primitive actions. Returns ``(alpha, state, SDResult)`` on failure.
        """
        if states is None:
            states = reachable_states(self.ll).nodes
        for w in states:
            for alpha in self.instance_table(w):
                r = self.refinement(alpha.name)
                res = is_situation_determined(r.program, w, self.ll,
                                              env=dict(zip(r.params, alpha.args)))
                if not res:
                    return alpha, w, res
        return None

    def require_sd_templates(self, states=None):
        bad = self.check_templates_sd(states)
        if bad is not None:
            alpha, w, res = bad
            raise NonSDTemplate(
                f"refinement of {alpha} is not situation-determined in {w}: after "
                f"[{', '.join(map(str, res.witness))}] it may continue in more than one way")


def map_formula(phi, m: RefinementMapping):
    return m.map_formula(phi)


def map_action_sequence(alphas, m: RefinementMapping):
    return m.map_action_sequence(alphas)


def hl_reachable_ll_states(m: RefinementMapping, budget: int = DEFAULT_STATE_BUDGET) -> LTS:
    """Low-level states reachable by complete refinements of high-level actions.

    Seeds are the low-level initial states (zero iterations of anyseqhl);
    edges are labelled by ground high-level actions and carry the
    low-level trace of one witnessing execution.
    """
    return reachable_states(m.ll, m.ll.initial_models, m.hl_moves, budget)


def ll_reachable_states(m: RefinementMapping, budget: int = DEFAULT_STATE_BUDGET) -> LTS:
    return reachable_states(m.ll, None, primitive_moves(m.ll), budget)
