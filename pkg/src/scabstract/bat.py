"""Basic action theories as finite-state dynamics.

A theory is progressed rather than regressed: :meth:`BasicActionTheory.step`
computes the successor world state by evaluating every successor-state
axiom in the current state. Incomplete initial knowledge is a finite set
of initial world states; a query is entailed when it holds in all of them
and satisfiable when it holds in some.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator, NamedTuple

from .errors import (ArityMismatch, StateSpaceBudgetExceeded, TheoryError,
                     UnknownActionType, UnknownFluent)
from .kernel import (Atom, Formula, Signature, Var, WorldState, evaluate,
                     free_vars, fluents_of, resolve_action_eq, simplify, solve)

DEFAULT_STATE_BUDGET = 1_000_000


@dataclass(frozen=True, slots=True)
class GroundAction:
    name: str
    args: tuple = ()

    def __str__(self):
        return f"{self.name}({','.join(self.args)})" if self.args else self.name


@dataclass(frozen=True)
class ActionType:
    name: str
    params: tuple
    precondition: Formula

    def __post_init__(self):
        extra = free_vars(self.precondition) - set(self.params)
        if extra:
            raise TheoryError(f"precondition of {self.name} has free variables {sorted(extra)}")


@dataclass(frozen=True)
class SuccessorStateAxiom:
    fluent: str
    params: tuple
    rhs: Formula
    action_var: str = "a"

    def __post_init__(self):
        extra = free_vars(self.rhs) - set(self.params) - {self.action_var}
        if extra:
            raise TheoryError(f"SSA of {self.fluent} has free variables {sorted(extra)}")

    @classmethod
    def frame(cls, fluent: str, arity: int) -> "SuccessorStateAxiom":
        """``F(x) <- F(x)``: the fluent is unaffected by every action."""
        params = tuple(f"x{i}" for i in range(arity))
        return cls(fluent, params, Atom(fluent, tuple(Var(p) for p in params)))


@dataclass(frozen=True)
class Situation:
    model: int
    trace: tuple = ()

    def do(self, action: GroundAction) -> "Situation":
        return Situation(self.model, self.trace + (action,))


class Edge(NamedTuple):
    label: object
    target: WorldState
    via: tuple = ()   # low-level trace realising the edge, when there is one


@dataclass(frozen=True)
class BasicActionTheory:
    sig: Signature
    actions: tuple            # ActionType, declaration order
    ssas: tuple               # SuccessorStateAxiom, one per fluent, fluent order
    initial_models: tuple     # WorldState
    name: str = ""
    _memo: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise TheoryError("duplicate action type")
        ssa_for = {s.fluent: s for s in self.ssas}
        if len(ssa_for) != len(self.ssas):
            raise TheoryError("more than one successor-state axiom for a fluent")
        for f, arity in self.sig.fluents:
            if f not in ssa_for:
                raise TheoryError(f"fluent {f} has no successor-state axiom")
            if len(ssa_for[f].params) != arity:
                raise ArityMismatch(f"SSA of {f} has wrong arity")
        for s in self.ssas:
            if s.fluent not in self.sig.arity:
                raise UnknownFluent(s.fluent)
        vocabulary = set(self.sig.arity)
        for a in self.actions:
            if fluents_of(a.precondition) - vocabulary:
                raise UnknownFluent(f"precondition of {a.name} mentions {sorted(fluents_of(a.precondition) - vocabulary)}")
        if not self.initial_models:
            raise TheoryError("a theory needs at least one initial model")
        memo = self._memo
        memo["types"] = {a.name: a for a in self.actions}
        memo["order"] = {a.name: i for i, a in enumerate(self.actions)}
        memo["ssa"] = tuple(ssa_for[f] for f, _ in self.sig.fluents)
        memo["step"] = {}
        memo["rhs"] = {}
        memo["enabled"] = {}

    # -- lookup ---------------------------------------------------------------

    def action_type(self, name: str) -> ActionType:
        try:
            return self._memo["types"][name]
        except KeyError:
            raise UnknownActionType(f"unknown action type {name!r}") from None

    def _checked(self, a: GroundAction) -> ActionType:
        at = self.action_type(a.name)
        if len(a.args) != len(at.params):
            raise ArityMismatch(f"{a.name} expects {len(at.params)} arguments, got {len(a.args)}")
        return at

    def action_key(self, a: GroundAction) -> tuple:
        """Canonical order: declaration order of the type, then arguments."""
        idx = self.sig.index
        return (self._memo["order"][a.name], tuple(idx[x] for x in a.args))

    def trace_key(self, trace: Iterable[GroundAction]) -> tuple:
        return tuple(self.action_key(a) for a in trace)

    def ground_actions(self) -> Iterator[GroundAction]:
        for at in self.actions:
            for args in product(self.sig.domain, repeat=len(at.params)):
                yield GroundAction(at.name, args)

    def initial_state(self, model: int = 0) -> WorldState:
        return self.initial_models[model]

    # -- dynamics -------------------------------------------------------------

    def poss(self, a: GroundAction, w: WorldState) -> bool:
        at = self._checked(a)
        return evaluate(at.precondition, w, dict(zip(at.params, a.args)))

    def enabled(self, w: WorldState) -> list:
        """All ground actions executable in ``w``, in canonical order."""
        cache = self._memo["enabled"]
        hit = cache.get(w)
        if hit is None:
            hit = []
            for at in self.actions:
                for binding in solve(at.precondition, at.params, w):
                    hit.append(GroundAction(at.name, tuple(binding[p] for p in at.params)))
            cache[w] = hit
        return hit

    def instantiated_rhs(self, ssa: SuccessorStateAxiom, a: GroundAction) -> Formula:
        """SSA right-hand side with the action fixed and action terms eliminated."""
        key = (ssa.fluent, a)
        cache = self._memo["rhs"]
        hit = cache.get(key)
        if hit is None:
            hit = simplify(resolve_action_eq(ssa.rhs, ssa.action_var, a),
                           nonempty_domain=bool(self.sig.domain))
            cache[key] = hit
        return hit

    def step(self, a: GroundAction, w: WorldState) -> WorldState:
        """Successor state of ``w`` under ``a``; defined whether or not ``a`` is possible."""
        cache = self._memo["step"]
        key = (a, w)
        hit = cache.get(key)
        if hit is not None:
            return hit
        self._checked(a)
        true_atoms = []
        by_fluent = {}
        for f, args in w.atoms:
            by_fluent.setdefault(f, []).append((f, args))
        for ssa in self._memo["ssa"]:
            rhs = self.instantiated_rhs(ssa, a)
            if type(rhs) is Atom and rhs.fluent == ssa.fluent and \
                    rhs.args == tuple(Var(p) for p in ssa.params):
                true_atoms.extend(by_fluent.get(ssa.fluent, ()))
                continue
            for binding in solve(rhs, ssa.params, w):
                true_atoms.append((ssa.fluent, tuple(binding[p] for p in ssa.params)))
        hit = WorldState(self.sig, true_atoms)
        cache[key] = hit
        return hit

    def run(self, trace: Iterable[GroundAction], w: WorldState) -> WorldState:
        for a in trace:
            w = self.step(a, w)
        return w

    def state_of(self, s: Situation) -> WorldState:
        return self.run(s.trace, self.initial_models[s.model])

    def executable(self, s: Situation) -> bool:
        w = self.initial_models[s.model]
        for a in s.trace:
            if not self.poss(a, w):
                return False
            w = self.step(a, w)
        return True


def executable(s: Situation, bat: BasicActionTheory) -> bool:
    return bat.executable(s)


# -- labelled transition systems ---------------------------------------------

@dataclass
class LTS:
    """State-quotient transition system; nodes in canonical discovery order."""
    initial: list
    nodes: list
    edges: dict   # WorldState -> list[Edge]
    paths: dict = field(default_factory=dict)  # node -> (seed index, labels, via) of first discovery

    def successors(self, node: WorldState) -> list:
        return self.edges.get(node, [])

    def index(self) -> dict:
        return {n: i for i, n in enumerate(self.nodes)}

    def reachable_from(self, seed: WorldState) -> list:
        seen = {seed}
        order = [seed]
        queue = deque([seed])
        while queue:
            n = queue.popleft()
            for e in self.successors(n):
                if e.target not in seen:
                    seen.add(e.target)
                    order.append(e.target)
                    queue.append(e.target)
        return order

    def edge_count(self) -> int:
        return sum(len(v) for v in self.edges.values())

    def to_edge_list(self) -> str:
        """Sorted, diff-friendly text: node table, then one line per edge."""
        idx = self.index()
        lines = [f"node {i} {n}" for i, n in enumerate(self.nodes)]
        lines += [f"init {idx[n]}" for n in dict.fromkeys(self.initial)]
        edge_lines = sorted(
            (idx[src], str(e.label), idx[e.target])
            for src in self.nodes for e in self.successors(src))
        lines += [f"edge {s} {label} {t}" for s, label, t in dict.fromkeys(edge_lines)]
        return "\n".join(lines) + "\n"

    def to_dot(self, name: str = "lts") -> str:
        idx = self.index()
        out = [f"digraph {name} {{"]
        for i, n in enumerate(self.nodes):
            label = str(n).replace('"', '\\"')
            shape = "doublecircle" if n in self.initial else "circle"
            out.append(f'  n{i} [shape={shape}, tooltip="{label}"];')
        for src in self.nodes:
            for e in self.successors(src):
                out.append(f'  n{idx[src]} -> n{idx[e.target]} [label="{e.label}"];')
        out.append("}")
        return "\n".join(out) + "\n"


Moves = Callable[[WorldState], Iterable[Edge]]


def primitive_moves(bat: BasicActionTheory) -> Moves:
    def moves(w):
        return [Edge(a, bat.step(a, w)) for a in bat.enabled(w)]
    return moves


def reachable_states(bat: BasicActionTheory, seeds: Iterable[WorldState] | None = None,
                     moves: Moves | None = None, budget: int = DEFAULT_STATE_BUDGET) -> LTS:
    """Least set of states containing ``seeds`` and closed under ``moves``.

    ``moves`` defaults to executing any enabled ground action. Raises
    :class:`StateSpaceBudgetExceeded` once more than ``budget`` nodes exist.
    """
    seeds = list(bat.initial_models if seeds is None else seeds)
    moves = moves or primitive_moves(bat)
    nodes, edges, paths = [], {}, {}
    queue = deque()
    for i, s in enumerate(seeds):
        if s not in paths:
            paths[s] = (i, (), ())
            nodes.append(s)
            queue.append(s)
    while queue:
        w = queue.popleft()
        out = list(moves(w))
        edges[w] = out
        seed, labels, via = paths[w]
        for e in out:
            if e.target not in paths:
                if len(nodes) >= budget:
                    raise StateSpaceBudgetExceeded(f"more than {budget} states")
                paths[e.target] = (seed, labels + (e.label,), via + tuple(e.via))
                nodes.append(e.target)
                queue.append(e.target)
    return LTS(initial=seeds, nodes=nodes, edges=edges, paths=paths)
