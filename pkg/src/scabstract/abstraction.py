"""Sound and complete abstraction checks.

Two independent routes are offered. The theory-level route checks the
initial-state, precondition and effect conditions over the arena of
low-level states reachable by complete refinements of high-level
actions. The model-level route builds the high-level and low-level
transition systems and computes the greatest m-bisimulation between
them. Both must agree on every fixture; the test-suite compares them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .bat import DEFAULT_STATE_BUDGET, GroundAction, LTS, reachable_states
from .kernel import WorldState, atom_text, solve
from .mapping import RefinementMapping, hl_reachable_ll_states


# -- m-isomorphism ------------------------------------------------------------

def isomorphism_mismatches(hl: WorldState, ll: WorldState, m: RefinementMapping) -> list:
    """Ground high-level atoms on which ``hl`` and ``ll`` disagree, sorted."""
    proj = m.project_state(ll)
    diff = hl.atoms ^ proj.atoms
    return sorted(diff, key=lambda fa: (fa[0], fa[1]))


def m_isomorphic(hl: WorldState, ll: WorldState, m: RefinementMapping) -> bool:
    return m.project_state(ll) == hl


# -- verdicts -----------------------------------------------------------------

@dataclass(frozen=True)
class Counterexample:
    """First violation found, with enough context to replay it.

    ``ll_trace`` is a low-level action sequence from low-level initial
    model ``ll_model`` reaching the state where the violation shows;
    ``hl_trace`` is the high-level sequence it refines.
    """
    condition: str                 # initial, precondition, effect, forth, back
    detail: str
    hl_model: int | None = None
    ll_model: int | None = None
    action: GroundAction | None = None
    hl_trace: tuple = ()
    ll_trace: tuple = ()
    refinement: tuple = ()         # low-level trace of the offending execution, if any

    def replay(self, m: RefinementMapping) -> WorldState:
        """Low-level state at which the violation occurs."""
        return m.ll.run(self.ll_trace, m.ll.initial_models[self.ll_model])

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "detail": self.detail,
            "hl_model": self.hl_model,
            "ll_model": self.ll_model,
            "action": None if self.action is None else str(self.action),
            "hl_trace": [str(a) for a in self.hl_trace],
            "ll_trace": [str(a) for a in self.ll_trace],
            "refinement": [str(a) for a in self.refinement],
        }

    def lines(self) -> list:
        out = [f"violated: {self.condition}", f"  {self.detail}"]
        if self.hl_model is not None:
            out.append(f"  high-level initial model: {self.hl_model}")
        if self.ll_model is not None:
            out.append(f"  low-level initial model: {self.ll_model}")
        if self.action is not None:
            out.append(f"  action: {self.action}")
        if self.ll_model is not None:
            out.append("  high-level prefix: [" + ", ".join(map(str, self.hl_trace)) + "]")
            out.append("  low-level prefix: [" + ", ".join(map(str, self.ll_trace)) + "]")
        if self.refinement:
            out.append("  refinement: [" + ", ".join(map(str, self.refinement)) + "]")
        return out


@dataclass(frozen=True)
class AbstractionVerdict:
    sound: bool | None = None
    complete: bool | None = None
    witnesses: tuple = ()
    method: str = "theory"

    def to_dict(self) -> dict:
        return {"sound": self.sound, "complete": self.complete, "method": self.method,
                "witnesses": [w.to_dict() for w in self.witnesses]}


# -- theory-level checks -------------------------------------------------------

def _hl_successor(m: RefinementMapping, alpha: GroundAction):
    """Mapped, instantiated effect formulas of ``alpha`` per high-level fluent."""
    cache = m._memo.setdefault("succ", {})
    hit = cache.get(alpha)
    if hit is None:
        hit = []
        for ssa in m.hl._memo["ssa"]:
            rhs = m.hl.instantiated_rhs(ssa, alpha)
            hit.append((ssa.fluent, ssa.params, m.map_formula(rhs)))
        cache[alpha] = hit
    return hit


def _predicted_state(m: RefinementMapping, alpha: GroundAction, w: WorldState) -> WorldState:
    """High-level state described by the mapped effect formulas, read in ``w``."""
    atoms = []
    for fluent, params, phi in _hl_successor(m, alpha):
        for b in solve(phi, params, w):
            atoms.append((fluent, tuple(b[p] for p in params)))
    return WorldState(m.hl.sig, atoms)


def _mapped_enabled(m: RefinementMapping, w: WorldState) -> set:
    """High-level ground actions whose mapped precondition holds in ``w``."""
    out = set()
    for at in m.hl.actions:
        phi = m.mapped_precondition(at.name)
        for b in solve(phi, at.params, w):
            out.add(GroundAction(at.name, tuple(b[p] for p in at.params)))
    return out


def arena_violations(m: RefinementMapping, arena: LTS, first_only: bool = True) -> list:
    """Precondition and effect violations over a low-level arena.

    Precondition: the mapped precondition of every high-level ground
    action holds exactly where some complete execution of its refinement
    exists. Effect: after each such execution, the mapped fluents agree
    with the mapped effect formulas evaluated before it.
    """
    found = []
    hl = m.hl
    for w in arena.nodes:
        seed, labels, via = arena.paths[w]
        executable = {alpha for alpha in m.instance_table(w) if m.executions(alpha, w)}
        claimed = _mapped_enabled(m, w)
        for alpha in sorted(executable ^ claimed, key=hl.action_key):
            if alpha in claimed:
                detail = f"mapped precondition of {alpha} holds but its refinement cannot be completed"
                ref = ()
            else:
                ex = m.executions(alpha, w)[0]
                detail = f"refinement of {alpha} can be completed but its mapped precondition is false"
                ref = ex.trace
            found.append(Counterexample("precondition", detail, None, seed, alpha,
                                        labels, via, ref))
            if first_only:
                return found
        for alpha in sorted(executable, key=hl.action_key):
            expected = _predicted_state(m, alpha, w)
            for ex in m.executions(alpha, w):
                got = m.project_state(ex.state)
                if got != expected:
                    diff = sorted(got.atoms ^ expected.atoms)
                    f, args = diff[0]
                    detail = (f"after {alpha} the mapped fluent {atom_text(f, args)} is "
                              f"{(f, args) in got.atoms} but its mapped effect formula says "
                              f"{(f, args) in expected.atoms}")
                    found.append(Counterexample("effect", detail, None, seed, alpha,
                                                labels, via, ex.trace))
                    if first_only:
                        return found
    return found


def initial_violations(m: RefinementMapping) -> list:
    """Low-level initial models whose projection is no high-level initial model."""
    hl_models = set(m.hl.initial_models)
    out = []
    for i, w in enumerate(m.ll.initial_models):
        if m.project_state(w) not in hl_models:
            out.append(Counterexample(
                "initial", f"low-level initial model {i} projects to {m.project_state(w)}, "
                "which is not a high-level initial model", None, i))
    return out


def check_sound(m: RefinementMapping, budget: int = DEFAULT_STATE_BUDGET) -> AbstractionVerdict:
    """Theory-level soundness: initial, precondition and effect conditions."""
    bad = initial_violations(m)
    if bad:
        return AbstractionVerdict(sound=False, witnesses=(bad[0],))
    arena = hl_reachable_ll_states(m, budget)
    bad = arena_violations(m, arena)
    return AbstractionVerdict(sound=not bad, witnesses=tuple(bad))


def check_complete(m: RefinementMapping, sound: bool | None = None,
                   budget: int = DEFAULT_STATE_BUDGET) -> AbstractionVerdict:
    """Theory-level completeness.

    When the abstraction is sound it suffices that every high-level initial
    model has an m-isomorphic low-level initial model. Otherwise every
    high-level initial model needs a low-level partner that is
    m-isomorphic and satisfies the precondition and effect conditions over
    the states reachable from it.
    """
    if sound is None:
        sound = bool(check_sound(m, budget).sound)
    ll_models = m.ll.initial_models
    witnesses = []
    for j, h in enumerate(m.hl.initial_models):
        partners = [i for i, w in enumerate(ll_models) if m.project_state(w) == h]
        if not partners:
            diffs = [isomorphism_mismatches(h, w, m) for w in ll_models]
            near = min(range(len(ll_models)), key=lambda i: len(diffs[i]))
            shown = ", ".join(("" if fa in h.atoms else "~") + atom_text(*fa) for fa in diffs[near])
            witnesses.append(Counterexample(
                "initial", f"high-level initial model {j} {h} has no m-isomorphic "
                f"low-level initial model; the closest, model {near}, differs on {shown} "
                "(high-level values shown)", j))
            continue
        if sound:
            continue
        failures = []
        for i in partners:
            arena = reachable_states(m.ll, [ll_models[i]], m.hl_moves, budget)
            bad = arena_violations(m, arena)
            if not bad:
                break
            c = bad[0]
            failures.append(Counterexample(c.condition, c.detail, j, i, c.action,
                                           c.hl_trace, c.ll_trace, c.refinement))
        else:
            witnesses.append(failures[0])
    return AbstractionVerdict(sound=sound, complete=not witnesses,
                              witnesses=tuple(witnesses))


# -- model-level route: m-bisimulation ----------------------------------------

@dataclass
class BisimRelation:
    pairs: frozenset
    hl_lts: LTS
    ll_lts: LTS
    pruned: dict = field(default_factory=dict)   # pair -> (reason, action)

    def related(self, hl: WorldState, ll: WorldState) -> bool:
        return (hl, ll) in self.pairs

    def __contains__(self, pair):
        return pair in self.pairs

    def __len__(self):
        return len(self.pairs)


def compute_bisimulation(hl_lts: LTS, ll_lts: LTS, m: RefinementMapping) -> BisimRelation:
    """Greatest m-bisimulation between two action-labelled state graphs.

    Candidate pairs are the m-isomorphic ones; a pair is pruned when some
    high-level move has no matching low-level move into a surviving pair
    (forth) or vice versa (back). Pruning repeats until nothing changes.
    """
    by_proj = {}
    for h in hl_lts.nodes:
        by_proj.setdefault(h, []).append(h)
    rel = set()
    for l in ll_lts.nodes:
        for h in by_proj.get(m.project_state(l), ()):
            rel.add((h, l))

    def index(lts):
        out = {}
        for n in lts.nodes:
            moves = {}
            for e in lts.successors(n):
                moves.setdefault(e.label, set()).add(e.target)
            out[n] = moves
        return out

    hl_moves, ll_moves = index(hl_lts), index(ll_lts)
    hpos, lpos = hl_lts.index(), ll_lts.index()
    pruned = {}
    changed = True
    while changed:
        changed = False
        for h, l in sorted(rel, key=lambda p: (hpos[p[0]], lpos[p[1]])):
            hm, lm = hl_moves[h], ll_moves[l]
            reason = None
            for alpha in sorted(hm, key=m.hl.action_key):
                if not any((h2, l2) in rel for h2 in hm[alpha] for l2 in lm.get(alpha, ())):
                    reason = ("forth", alpha)
                    break
            if reason is None:
                for alpha in sorted(lm, key=m.hl.action_key):
                    for l2 in lm[alpha]:
                        if not any((h2, l2) in rel for h2 in hm.get(alpha, ())):
                            reason = ("back", alpha)
                            break
                    if reason:
                        break
            if reason:
                rel.discard((h, l))
                pruned[(h, l)] = reason
                changed = True
    return BisimRelation(frozenset(rel), hl_lts, ll_lts, pruned)


def _explain_pair(m, rel: BisimRelation, h, l):
    """Reason the pair is absent from the relation."""
    if m.project_state(l) != h:
        mism = isomorphism_mismatches(h, l, m)
        f, args = mism[0]
        return "isomorphism", None, f"the states disagree on {atom_text(f, args)}"
    kind, alpha = rel.pruned[(h, l)]
    if kind == "forth":
        return kind, alpha, f"{alpha} is executable at the high level but no matching refinement exists"
    return kind, alpha, f"a refinement of {alpha} exists with no matching high-level move"


def check_by_bisimulation(m: RefinementMapping,
                          budget: int = DEFAULT_STATE_BUDGET) -> AbstractionVerdict:
    """Model-level soundness and completeness through the greatest m-bisimulation.

    Sound: every low-level initial model is bisimilar to some high-level
    initial model. Complete: every high-level initial model is bisimilar
    to some low-level initial model.
    """
    hl_lts = reachable_states(m.hl, budget=budget)
    ll_lts = hl_reachable_ll_states(m, budget)
    rel = compute_bisimulation(hl_lts, ll_lts, m)
    hs, ls = m.hl.initial_models, m.ll.initial_models
    witnesses = []
    sound = True
    for i, l in enumerate(ls):
        if not any((h, l) in rel for h in hs):
            sound = False
            h = next((h for h in hs if m.project_state(l) == h), hs[0])
            kind, alpha, detail = _explain_pair(m, rel, h, l)
            witnesses.append(Counterexample(kind, f"low-level initial model {i} has no bisimilar "
                                            f"high-level initial model ({detail})", 0, i, alpha))
    complete = True
    for j, h in enumerate(hs):
        if not any((h, l) in rel for l in ls):
            complete = False
            l = next((l for l in ls if m.project_state(l) == h), ls[0])
            kind, alpha, detail = _explain_pair(m, rel, h, l)
            witnesses.append(Counterexample(kind, f"high-level initial model {j} has no bisimilar "
                                            f"low-level initial model ({detail})", j, 0, alpha))
    return AbstractionVerdict(sound=sound, complete=complete, witnesses=tuple(witnesses),
                              method="bisimulation")
