"""ConGolog programs and their single-step transition semantics.

Tests are synchronous: ``phi?`` never makes a transition, it is final when
``phi`` holds. Everything here works on explicit configurations
(program, world state); ``pi`` ranges over the finite object domain.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .bat import BasicActionTheory, GroundAction
from .errors import ConfigurationBudgetExceeded, UnboundVariable
from .kernel import (TRUE, Const, Formula, Not, Var, WorldState, as_term,
                     evaluate, formula_text, free_vars, peval, substitute)

DEFAULT_CONFIG_BUDGET = 1_000_000


@dataclass(frozen=True, slots=True)
class Act:
    name: str
    args: tuple = ()


@dataclass(frozen=True, slots=True)
class Test:
    cond: Formula


@dataclass(frozen=True, slots=True)
class Seq:
    first: object
    second: object


@dataclass(frozen=True, slots=True)
class Choice:
    left: object
    right: object


@dataclass(frozen=True, slots=True)
class Pick:
    var: str
    body: object


@dataclass(frozen=True, slots=True)
class Star:
    body: object


@dataclass(frozen=True, slots=True)
class Conc:
    left: object
    right: object


NIL = Test(TRUE)


def act(name: str, *args) -> Act:
    return Act(name, tuple(as_term(a) for a in args))


def seq(*parts):
    if not parts:
        return NIL
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Seq(p, out)
    return out


def choice(*parts):
    if not parts:
        raise ValueError("choice needs at least one branch")
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Choice(p, out)
    return out


def if_then_else(cond: Formula, then, orelse):
    return Choice(Seq(Test(cond), then), Seq(Test(Not(cond)), orelse))


def while_do(cond: Formula, body):
    return Seq(Star(Seq(Test(cond), body)), Test(Not(cond)))


# -- syntax utilities ----------------------------------------------------------

def program_free_vars(p) -> set:
    t = type(p)
    if t is Act:
        return {a.name for a in p.args if type(a) is Var}
    if t is Test:
        return free_vars(p.cond)
    if t is Pick:
        return program_free_vars(p.body) - {p.var}
    if t is Star:
        return program_free_vars(p.body)
    if t is Seq:
        return program_free_vars(p.first) | program_free_vars(p.second)
    return program_free_vars(p.left) | program_free_vars(p.right)


def subst_program(p, binding):
    """Substitute object names (or terms) for free variables."""
    if not binding:
        return p
    t = type(p)
    if t is Act:
        return Act(p.name, tuple(as_term(binding[a.name]) if type(a) is Var and a.name in binding else a
                                 for a in p.args))
    if t is Test:
        return Test(substitute(p.cond, binding))
    if t is Pick:
        inner = {k: v for k, v in binding.items() if k != p.var}
        return Pick(p.var, subst_program(p.body, inner)) if inner else p
    if t is Star:
        return Star(subst_program(p.body, binding))
    if t is Seq:
        return Seq(subst_program(p.first, binding), subst_program(p.second, binding))
    return t(subst_program(p.left, binding), subst_program(p.right, binding))


def actions_of(p) -> set:
    t = type(p)
    if t is Act:
        return {p.name}
    if t is Test:
        return set()
    if t is Pick or t is Star:
        return actions_of(p.body)
    if t is Seq:
        return actions_of(p.first) | actions_of(p.second)
    return actions_of(p.left) | actions_of(p.right)


def tests_of(p) -> list:
    t = type(p)
    if t is Test:
        return [p.cond]
    if t is Act:
        return []
    if t is Pick or t is Star:
        return tests_of(p.body)
    if t is Seq:
        return tests_of(p.first) + tests_of(p.second)
    return tests_of(p.left) + tests_of(p.right)


def program_text(p, level: int = 0) -> str:
    """Concrete syntax. Loosest to tightest: ``|``, ``||``, ``;``, ``pi``, postfix."""
    t = type(p)
    if t is Test:
        if p == NIL:
            return "nil"
        return f"({formula_text(p.cond)})?"
    if t is Act:
        return p.name + ("(" + ", ".join(str(a) for a in p.args) + ")" if p.args else "")
    if t is Star:
        return program_text(p.body, 4) + "*"
    if t is Pick:
        s, mine = f"pi {p.var} . {program_text(p.body, 3)}", 3
    elif t is Seq:
        s, mine = f"{program_text(p.first, 3)} ; {program_text(p.second, 2)}", 2
    elif t is Conc:
        s, mine = f"{program_text(p.left, 2)} || {program_text(p.right, 1)}", 1
    elif t is Choice:
        s, mine = f"{program_text(p.left, 1)} | {program_text(p.right, 0)}", 0
    else:
        raise TypeError(f"not a program: {p!r}")
    return f"({s})" if mine < level else s


@lru_cache(maxsize=None)
def normalize(p):
    """Canonical representative used to compare residual programs.

    Sound rewrites only: ``nil`` is a unit of ``;`` and ``||``, ``;`` is
    re-associated to the right, ``|`` is deduplicated and sorted, ``||``
    is sorted. ``(p*)*`` is deliberately left alone.
    """
    t = type(p)
    if t is Seq:
        a, b = normalize(p.first), normalize(p.second)
        if a == NIL:
            return b
        if b == NIL:
            return a
        if type(a) is Seq:
            return normalize(Seq(a.first, Seq(a.second, b)))
        return Seq(a, b)
    if t is Choice:
        branches = []
        for q in _flatten(Choice, p):
            q = normalize(q)
            for r in _flatten(Choice, q):
                if r not in branches:
                    branches.append(r)
        branches.sort(key=program_text)
        return choice(*branches)
    if t is Conc:
        parts = [r for q in _flatten(Conc, p) for r in _flatten(Conc, normalize(q)) if r != NIL]
        if not parts:
            return NIL
        parts.sort(key=program_text)
        out = parts[-1]
        for q in reversed(parts[:-1]):
            out = Conc(q, out)
        return out
    if t is Star:
        return Star(normalize(p.body))
    if t is Pick:
        return Pick(p.var, normalize(p.body))
    return p


def _flatten(kind, p):
    if type(p) is kind:
        return _flatten(kind, p.left) + _flatten(kind, p.right)
    return [p]


# -- Trans / Final -----------------------------------------------------------

def _ground_args(args, env):
    out = []
    for a in args:
        if type(a) is Const:
            out.append(a.name)
        else:
            try:
                out.append(env[a.name])
            except KeyError:
                raise UnboundVariable(a.name) from None
    return tuple(out)


def _final(p, w, env):
    t = type(p)
    if t is Test:
        return evaluate(p.cond, w, env)
    if t is Act:
        return False
    if t is Seq:
        return _final(p.first, w, env) and _final(p.second, w, env)
    if t is Choice:
        return _final(p.left, w, env) or _final(p.right, w, env)
    if t is Star:
        return True
    if t is Conc:
        return _final(p.left, w, env) and _final(p.right, w, env)
    if t is Pick:
        inner = dict(env)
        for name in w.sig.domain:
            inner[p.var] = name
            if _final(p.body, w, inner):
                return True
        return False
    raise TypeError(f"not a program: {p!r}")


def _possible(p, w, bat, env):
    """False only when ``p`` certainly has no transition and is not final."""
    t = type(p)
    if t is Test:
        return peval(p.cond, w, env) is not False
    if t is Act:
        args = []
        for a in p.args:
            if type(a) is Const:
                args.append(a.name)
            elif a.name in env:
                args.append(env[a.name])
            else:
                return True
        return bat.poss(GroundAction(p.name, tuple(args)), w)
    if t is Seq:
        if type(p.first) is Test:
            return peval(p.first.cond, w, env) is not False and _possible(p.second, w, bat, env)
        return _possible(p.first, w, bat, env)
    if t is Choice or t is Conc:
        return _possible(p.left, w, bat, env) or _possible(p.right, w, bat, env)
    if t is Pick:
        if p.var in env:
            env = {k: v for k, v in env.items() if k != p.var}
        return _possible(p.body, w, bat, env)
    return True


def _trans(p, w, bat, env):
    """Raw successors ``(action, residual)``; residuals are ground, not normalised."""
    t = type(p)
    if t is Act:
        a = GroundAction(p.name, _ground_args(p.args, env))
        return [(a, NIL)] if bat.poss(a, w) else []
    if t is Test:
        return []
    if t is Seq:
        out = []
        first = _trans(p.first, w, bat, env)
        if first:
            rest = subst_program(p.second, env)
            out = [(a, Seq(r, rest)) for a, r in first]
        if _final(p.first, w, env):
            out += _trans(p.second, w, bat, env)
        return out
    if t is Choice:
        return _trans(p.left, w, bat, env) + _trans(p.right, w, bat, env)
    if t is Pick:
        out = []
        inner = dict(env)
        for name in w.sig.domain:
            inner[p.var] = name
            if _possible(p.body, w, bat, inner):
                out += _trans(p.body, w, bat, inner)
        return out
    if t is Star:
        steps = _trans(p.body, w, bat, env)
        if not steps:
            return []
        again = subst_program(p, env)
        return [(a, Seq(r, again)) for a, r in steps]
    if t is Conc:
        out = []
        left = _trans(p.left, w, bat, env)
        if left:
            right = subst_program(p.right, env)
            out += [(a, Conc(r, right)) for a, r in left]
        right_steps = _trans(p.right, w, bat, env)
        if right_steps:
            left_prog = subst_program(p.left, env)
            out += [(a, Conc(left_prog, r)) for a, r in right_steps]
        return out
    raise TypeError(f"not a program: {p!r}")


def _canonical(steps, bat):
    seen = {}
    for a, r in steps:
        seen.setdefault((a, normalize(r)), None)
    return sorted(seen, key=lambda ar: (bat.action_key(ar[0]), program_text(ar[1])))


def ground_trans(p, w: WorldState, bat: BasicActionTheory) -> tuple:
    """Memoised ``(action, normalised residual)`` pairs of a ground program."""
    cache = bat._memo.setdefault("trans", {})
    key = (p, w)
    hit = cache.get(key)
    if hit is None:
        hit = tuple(_canonical(_trans(p, w, bat, {}), bat))
        cache[key] = hit
    return hit


def ground_final(p, w: WorldState) -> bool:
    return _final(p, w, {})


def trans_with(p, w, bat, env) -> list:
    """Successors of a (possibly open) program under a variable binding."""
    return _canonical(_trans(p, w, bat, dict(env)), bat)


def final_with(p, w, env) -> bool:
    return _final(p, w, dict(env))


def possible_with(p, w, bat, env) -> bool:
    return _possible(p, w, bat, dict(env))


# -- configurations ----------------------------------------------------------

@dataclass(frozen=True)
class Configuration:
    program: object
    state: WorldState


class Execution(NamedTuple):
    trace: tuple
    state: WorldState


def trans(c: Configuration, bat: BasicActionTheory) -> list:
    """Every ``(action, next configuration)`` licensed by the Trans axioms."""
    return [(a, Configuration(r, bat.step(a, c.state)))
            for a, r in ground_trans(normalize(c.program), c.state, bat)]


def final(c: Configuration) -> bool:
    return ground_final(c.program, c.state)


def do_executions(p, w: WorldState, bat: BasicActionTheory, env=None,
                  budget: int = DEFAULT_CONFIG_BUDGET) -> list:
    """All complete executions ``(trace, end state)`` of ``p`` from ``w``.

    Trans* is searched depth first; a configuration already on the current
    path is not re-entered, so iteration terminates and every execution
    along a simple path of the configuration graph is reported.
    """
    env = dict(env or {})
    results = set()
    visits = 0
    if _final(p, w, env):
        results.add(((), w))
    first = trans_with(p, w, bat, env)
    if first:
        root = (normalize(subst_program(p, env)), w)

        def visit(prog, state, trace, on_path):
            nonlocal visits
            visits += 1
            if visits > budget:
                raise ConfigurationBudgetExceeded(f"more than {budget} configurations")
            if ground_final(prog, state):
                results.add((trace, state))
            for a, r in ground_trans(prog, state, bat):
                nxt = bat.step(a, state)
                key = (r, nxt)
                if key in on_path:
                    continue
                on_path.add(key)
                visit(r, nxt, trace + (a,), on_path)
                on_path.discard(key)

        for a, r in first:
            nxt = bat.step(a, w)
            visit(r, nxt, (a,), {root, (r, nxt)})
    return sorted((Execution(t, s) for t, s in results), key=lambda e: bat.trace_key(e.trace))


def configurations_after(p, w: WorldState, trace, bat: BasicActionTheory, env=None) -> set:
    """Residual programs reachable from ``p`` by exactly ``trace`` (Trans* along it)."""
    env = dict(env or {})
    if not trace:
        return {normalize(subst_program(p, env))}
    current = {r for a, r in trans_with(p, w, bat, env) if a == trace[0]}
    w = bat.step(trace[0], w)
    for a in trace[1:]:
        current = {r for q in current for b, r in ground_trans(q, w, bat) if b == a}
        if not current:
            return set()
        w = bat.step(a, w)
    return current


@dataclass(frozen=True)
class SDResult:
    determined: bool
    witness: tuple = ()        # trace after which residuals diverge
    residuals: tuple = ()      # two or more distinct residual programs

    def __bool__(self):
        return self.determined


def is_situation_determined(p, w: WorldState, bat: BasicActionTheory, env=None,
                            budget: int = DEFAULT_CONFIG_BUDGET) -> SDResult:
    """Check that every action trace leaves a unique (normalised) residual.

    Subset construction over configurations: from the residuals reached by
    a trace, group successors by action; two residuals under one action
    refute situation-determinedness.
    """
    env = dict(env or {})
    first = trans_with(p, w, bat, env)
    frontier = deque()
    seen = set()

    def expand(pairs, state, trace):
        by_action = {}
        for a, r in pairs:
            by_action.setdefault(a, set()).add(r)
        for a in sorted(by_action, key=bat.action_key):
            rs = by_action[a]
            if len(rs) > 1:
                return SDResult(False, trace + (a,), tuple(sorted(rs, key=program_text)))
            (r,) = rs
            nxt = bat.step(a, state)
            if (r, nxt) not in seen:
                if len(seen) >= budget:
                    raise ConfigurationBudgetExceeded(f"more than {budget} configurations")
                seen.add((r, nxt))
                frontier.append((r, nxt, trace + (a,)))
        return None

    bad = expand(first, w, ())
    while bad is None and frontier:
        prog, state, trace = frontier.popleft()
        bad = expand(ground_trans(prog, state, bat), state, trace)
    return bad if bad is not None else SDResult(True)
