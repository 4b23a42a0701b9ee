"""Terms, situation-suppressed formulas and their evaluation in a world state.

Formulas are immutable trees. Quantifiers range over the finite set of
standard names declared in a :class:`Signature`, so ``exists x. phi`` is
true exactly when ``phi[x/n]`` is true for some declared name ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import count, product
from typing import Iterable, Iterator, Mapping, Union

from .errors import ArityMismatch, UnboundVariable, UnknownFluent


# -- terms -------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __str__(self):
        return self.name


Term = Union[Var, Const]


def as_term(value) -> Term:
    if isinstance(value, (Var, Const)):
        return value
    return Const(str(value))


# -- formulas ----------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Truth:
    value: bool


TRUE = Truth(True)
FALSE = Truth(False)


@dataclass(frozen=True, slots=True)
class Atom:
    fluent: str
    args: tuple = ()


@dataclass(frozen=True, slots=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class ActionEq:
    """``var = Name(args)`` where ``var`` is the action variable of an SSA."""
    var: str
    action: str
    args: tuple = ()


@dataclass(frozen=True, slots=True)
class Not:
    body: object


@dataclass(frozen=True, slots=True)
class And:
    items: tuple


@dataclass(frozen=True, slots=True)
class Or:
    items: tuple


@dataclass(frozen=True, slots=True)
class Implies:
    left: object
    right: object


@dataclass(frozen=True, slots=True)
class Iff:
    left: object
    right: object


@dataclass(frozen=True, slots=True)
class Forall:
    var: str
    body: object


@dataclass(frozen=True, slots=True)
class Exists:
    var: str
    body: object


Formula = Union[Truth, Atom, Eq, ActionEq, Not, And, Or, Implies, Iff, Forall, Exists]


def conj(*items) -> Formula:
    flat = []
    for f in items:
        flat.extend(f.items if isinstance(f, And) else (f,))
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*items) -> Formula:
    flat = []
    for f in items:
        flat.extend(f.items if isinstance(f, Or) else (f,))
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def atom(fluent: str, *args) -> Atom:
    return Atom(fluent, tuple(as_term(a) for a in args))


# -- signature and world states ---------------------------------------------

@dataclass(frozen=True)
class Signature:
    """A finite object domain plus a fluent vocabulary with arities."""
    domain: tuple
    fluents: tuple  # ((name, arity), ...) in declaration order

    @cached_property
    def arity(self) -> dict:
        return dict(self.fluents)

    @cached_property
    def index(self) -> dict:
        return {name: i for i, name in enumerate(self.domain)}

    def ground_args(self, arity: int) -> Iterator[tuple]:
        return product(self.domain, repeat=arity)

    def ground_atoms(self) -> Iterator[tuple]:
        for name, arity in self.fluents:
            for args in self.ground_args(arity):
                yield (name, args)


class WorldState:
    """Total truth assignment over the ground atoms of one vocabulary.

    Only the true atoms are stored; every other ground atom of the
    signature is false. Equality and hashing are structural.
    """
    __slots__ = ("sig", "atoms", "_hash")

    def __init__(self, sig: Signature, atoms: Iterable[tuple] = ()):
        self.sig = sig
        self.atoms = frozenset(atoms)
        self._hash = hash(self.atoms)

    @classmethod
    def build(cls, sig: Signature, atoms: Iterable[tuple]) -> "WorldState":
        """Checked constructor: every atom must belong to the signature."""
        checked = []
        for fluent, args in atoms:
            args = tuple(args)
            if fluent not in sig.arity:
                raise UnknownFluent(fluent)
            if len(args) != sig.arity[fluent]:
                raise ArityMismatch(f"{fluent} expects {sig.arity[fluent]} arguments, got {len(args)}")
            for a in args:
                if a not in sig.index:
                    raise UnknownFluent(f"unknown object {a!r} in {fluent}{args}")
            checked.append((fluent, args))
        return cls(sig, checked)

    def holds(self, fluent: str, args: tuple = ()) -> bool:
        return (fluent, tuple(args)) in self.atoms

    def sorted_atoms(self) -> list:
        order = {name: i for i, (name, _) in enumerate(self.sig.fluents)}
        idx = self.sig.index
        return sorted(self.atoms, key=lambda fa: (order[fa[0]], [idx[a] for a in fa[1]]))

    def __eq__(self, other):
        if not isinstance(other, WorldState):
            return NotImplemented
        return self._hash == other._hash and self.atoms == other.atoms

    def __hash__(self):
        return self._hash

    def __str__(self):
        return "{" + ", ".join(atom_text(f, a) for f, a in self.sorted_atoms()) + "}"

    def __repr__(self):
        return f"WorldState({self})"


def atom_text(fluent: str, args: tuple) -> str:
    return f"{fluent}({','.join(args)})" if args else fluent


# -- evaluation --------------------------------------------------------------

def evaluate(phi: Formula, state: WorldState, env: Mapping | None = None) -> bool:
    """Tarskian truth value of ``phi`` in ``state`` under ``env``.

    ``env`` maps variable names to object names; an SSA action variable
    may instead be bound to a ground action (anything with ``name`` and
    ``args``), which is how :class:`ActionEq` atoms get their value.
    """
    return _eval(phi, state, dict(env) if env else {})


def _term(t, env):
    if type(t) is Const:
        return t.name
    try:
        return env[t.name]
    except KeyError:
        raise UnboundVariable(t.name) from None


def _eval(phi, st, env):
    t = type(phi)
    if t is Atom:
        arity = st.sig.arity.get(phi.fluent)
        if arity is None:
            raise UnknownFluent(phi.fluent)
        if arity != len(phi.args):
            raise ArityMismatch(f"{phi.fluent} expects {arity} arguments")
        return (phi.fluent, tuple([_term(a, env) for a in phi.args])) in st.atoms
    if t is And:
        for f in phi.items:
            if not _eval(f, st, env):
                return False
        return True
    if t is Or:
        for f in phi.items:
            if _eval(f, st, env):
                return True
        return False
    if t is Not:
        return not _eval(phi.body, st, env)
    if t is Eq:
        return _term(phi.left, env) == _term(phi.right, env)
    if t is Truth:
        return phi.value
    if t is Implies:
        return (not _eval(phi.left, st, env)) or _eval(phi.right, st, env)
    if t is Iff:
        return _eval(phi.left, st, env) == _eval(phi.right, st, env)
    if t is Exists or t is Forall:
        want = t is Exists
        inner = dict(env)
        for name in st.sig.domain:
            inner[phi.var] = name
            if _eval(phi.body, st, inner) == want:
                return want
        return not want
    if t is ActionEq:
        act = env.get(phi.var)
        if act is None:
            raise UnboundVariable(phi.var)
        if act.name != phi.action or len(act.args) != len(phi.args):
            return False
        return all(_term(a, env) == v for a, v in zip(phi.args, act.args))
    raise TypeError(f"not a formula: {phi!r}")


def peval(phi: Formula, state: WorldState, env: Mapping) -> bool | None:
    """Three-valued evaluation: ``None`` when unbound variables matter.

    Strong Kleene connectives, so a conjunction with one false, fully
    bound conjunct is false whatever the other conjuncts mention.
    """
    t = type(phi)
    if t is Atom:
        args = []
        for a in phi.args:
            if type(a) is Const:
                args.append(a.name)
            else:
                v = env.get(a.name)
                if v is None:
                    return None
                args.append(v)
        return (phi.fluent, tuple(args)) in state.atoms
    if t is And:
        result = True
        for f in phi.items:
            v = peval(f, state, env)
            if v is False:
                return False
            if v is None:
                result = None
        return result
    if t is Or:
        result = False
        for f in phi.items:
            v = peval(f, state, env)
            if v is True:
                return True
            if v is None:
                result = None
        return result
    if t is Not:
        v = peval(phi.body, state, env)
        return None if v is None else not v
    if t is Eq:
        a = phi.left.name if type(phi.left) is Const else env.get(phi.left.name)
        b = phi.right.name if type(phi.right) is Const else env.get(phi.right.name)
        if a is None or b is None:
            return True if phi.left == phi.right else None
        return a == b
    if t is Truth:
        return phi.value
    if t is Implies:
        return peval(Or((Not(phi.left), phi.right)), state, env)
    if t is Iff:
        a = peval(phi.left, state, env)
        b = peval(phi.right, state, env)
        return None if a is None or b is None else a == b
    if t is Exists or t is Forall:
        want = t is Exists
        inner = dict(env)
        result = not want
        for name in state.sig.domain:
            inner[phi.var] = name
            v = peval(phi.body, state, inner)
            if v is want:
                return want
            if v is None:
                result = None
        return result
    if t is ActionEq:
        act = env.get(phi.var)
        if act is None:
            return None
        return peval(resolve_action_eq(phi, phi.var, act), state, env)
    raise TypeError(f"not a formula: {phi!r}")


def solve(phi: Formula, variables: Iterable[str], state: WorldState,
          env: Mapping | None = None) -> Iterator[dict]:
    """Yield every binding of ``variables`` that makes ``phi`` true.

    Bindings come out in domain order (lexicographic over ``variables``).
    Partial bindings are pruned as soon as :func:`peval` decides the
    formula is false.
    """
    variables = list(variables)
    base = dict(env) if env else {}
    domain = state.sig.domain

    def extend(i, current):
        if i == len(variables):
            if _eval(phi, state, current):
                yield {v: current[v] for v in variables}
            return
        for name in domain:
            current[variables[i]] = name
            if i + 1 < len(variables) and peval(phi, state, current) is False:
                continue
            yield from extend(i + 1, current)
        del current[variables[i]]

    yield from extend(0, base)


# -- syntactic operations ----------------------------------------------------

def free_vars(phi: Formula) -> set:
    t = type(phi)
    if t is Atom:
        return {a.name for a in phi.args if type(a) is Var}
    if t is Eq:
        return {a.name for a in (phi.left, phi.right) if type(a) is Var}
    if t is ActionEq:
        return {phi.var} | {a.name for a in phi.args if type(a) is Var}
    if t is Truth:
        return set()
    if t is Not:
        return free_vars(phi.body)
    if t is And or t is Or:
        out = set()
        for f in phi.items:
            out |= free_vars(f)
        return out
    if t is Implies or t is Iff:
        return free_vars(phi.left) | free_vars(phi.right)
    if t is Exists or t is Forall:
        return free_vars(phi.body) - {phi.var}
    raise TypeError(f"not a formula: {phi!r}")


def fluents_of(phi: Formula) -> set:
    t = type(phi)
    if t is Atom:
        return {phi.fluent}
    if t is Not or t is Exists or t is Forall:
        return fluents_of(phi.body)
    if t is And or t is Or:
        return set().union(*(fluents_of(f) for f in phi.items))
    if t is Implies or t is Iff:
        return fluents_of(phi.left) | fluents_of(phi.right)
    return set()


_fresh = count()


def fresh_var(avoid: set, base: str) -> str:
    stem = base.rstrip("'0123456789_") or "v"
    while True:
        name = f"{stem}_{next(_fresh)}"
        if name not in avoid:
            return name


def substitute(phi: Formula, binding: Mapping) -> Formula:
    """Replace free variables by terms, renaming bound variables on capture.

    Values may be terms or plain object names.
    """
    binding = {k: as_term(v) for k, v in binding.items()}
    if not binding:
        return phi
    return _subst(phi, binding)


def _subst_term(t, binding):
    if type(t) is Var:
        return binding.get(t.name, t)
    return t


def _subst(phi, binding):
    t = type(phi)
    if t is Atom:
        return Atom(phi.fluent, tuple(_subst_term(a, binding) for a in phi.args))
    if t is Eq:
        return Eq(_subst_term(phi.left, binding), _subst_term(phi.right, binding))
    if t is ActionEq:
        return ActionEq(phi.var, phi.action, tuple(_subst_term(a, binding) for a in phi.args))
    if t is Truth:
        return phi
    if t is Not:
        return Not(_subst(phi.body, binding))
    if t is And or t is Or:
        return t(tuple(_subst(f, binding) for f in phi.items))
    if t is Implies or t is Iff:
        return t(_subst(phi.left, binding), _subst(phi.right, binding))
    if t is Exists or t is Forall:
        inner = {k: v for k, v in binding.items() if k != phi.var}
        if not inner:
            return phi
        body_free = free_vars(phi.body)
        incoming = {v.name for k, v in inner.items() if k in body_free and type(v) is Var}
        var, body = phi.var, phi.body
        if var in incoming:
            new = fresh_var(incoming | body_free | set(inner), var)
            body = _subst(body, {var: Var(new)})
            var = new
        return t(var, _subst(body, inner))
    raise TypeError(f"not a formula: {phi!r}")


def resolve_action_eq(phi: Formula, var: str, action) -> Formula:
    """Eliminate ``var = A(...)`` atoms given the ground action bound to ``var``.

    Unique names for actions: different action names are never equal and
    equal names are equal exactly when their arguments are.
    """
    t = type(phi)
    if t is ActionEq:
        if phi.var != var:
            return phi
        if phi.action != action.name or len(phi.args) != len(action.args):
            return FALSE
        return conj(*(Eq(a, Const(v)) for a, v in zip(phi.args, action.args)))
    if t is Not:
        return Not(resolve_action_eq(phi.body, var, action))
    if t is And or t is Or:
        return t(tuple(resolve_action_eq(f, var, action) for f in phi.items))
    if t is Implies or t is Iff:
        return t(resolve_action_eq(phi.left, var, action), resolve_action_eq(phi.right, var, action))
    if t is Exists or t is Forall:
        if phi.var == var:
            return phi
        return t(phi.var, resolve_action_eq(phi.body, var, action))
    return phi


def simplify(phi: Formula, nonempty_domain: bool = True) -> Formula:
    """Equivalence-preserving cleanup: constant folding and one-point rules.

    ``nonempty_domain`` licenses dropping vacuous quantifiers.
    """
    return _simp(phi, nonempty_domain)


def _simp(phi, ne):
    t = type(phi)
    if t is Eq:
        if phi.left == phi.right:
            return TRUE
        if type(phi.left) is Const and type(phi.right) is Const:
            return FALSE
        return phi
    if t is Not:
        b = _simp(phi.body, ne)
        if type(b) is Truth:
            return Truth(not b.value)
        if type(b) is Not:
            return b.body
        return Not(b)
    if t is And or t is Or:
        unit, zero = (TRUE, FALSE) if t is And else (FALSE, TRUE)
        out = []
        for f in phi.items:
            f = _simp(f, ne)
            if f == zero:
                return zero
            if f == unit:
                continue
            for g in (f.items if type(f) is t else (f,)):
                if g not in out:
                    out.append(g)
        if not out:
            return unit
        return out[0] if len(out) == 1 else t(tuple(out))
    if t is Implies:
        return _simp(Or((Not(phi.left), phi.right)), ne)
    if t is Iff:
        a, b = _simp(phi.left, ne), _simp(phi.right, ne)
        if type(a) is Truth:
            return b if a.value else _simp(Not(b), ne)
        if type(b) is Truth:
            return a if b.value else _simp(Not(a), ne)
        return Iff(a, b)
    if t is Exists:
        return _simp_exists(phi.var, _simp(phi.body, ne), ne)
    if t is Forall:
        return _simp(Not(_simp_exists(phi.var, _simp(Not(phi.body), ne), ne)), ne)
    return phi


def _one_point(var, items):
    for i, f in enumerate(items):
        if type(f) is Eq:
            if f.left == Var(var) and f.right != Var(var):
                return i, f.right
            if f.right == Var(var) and f.left != Var(var):
                return i, f.left
    return None


def _simp_exists(var, body, ne):
    if type(body) is Truth:
        return body if ne or not body.value else FALSE
    if var not in free_vars(body):
        return body if ne else Exists(var, body)
    items = body.items if type(body) is And else (body,)
    hit = _one_point(var, items)
    if hit is not None:
        i, value = hit
        rest = items[:i] + items[i + 1:]
        return _simp(substitute(conj(*rest), {var: value}), ne)
    if type(body) is Or:
        return _simp(disj(*(Exists(var, f) for f in body.items)), ne)
    return Exists(var, body)


# -- text --------------------------------------------------------------------

def _args_text(args):
    return "(" + ", ".join(str(a) for a in args) + ")" if args else ""


def formula_text(phi: Formula, level: int = 0) -> str:
    """Render in the DSL's concrete syntax; parenthesised where needed."""
    t = type(phi)
    if t is Truth:
        return "true" if phi.value else "false"
    if t is Atom:
        return phi.fluent + _args_text(phi.args)
    if t is Eq:
        return f"{phi.left} = {phi.right}"
    if t is ActionEq:
        return f"{phi.var} = {phi.action}{_args_text(phi.args)}"
    if t is Not:
        b = phi.body
        if type(b) is Eq:
            return f"{b.left} != {b.right}"
        if type(b) is ActionEq:
            return f"{b.var} != {b.action}{_args_text(b.args)}"
        return "~" + formula_text(b, 4)
    if t is And:
        s, mine = " & ".join(formula_text(f, 4) for f in phi.items), 3
    elif t is Or:
        s, mine = " | ".join(formula_text(f, 3) for f in phi.items), 2
    elif t is Implies:
        s, mine = f"{formula_text(phi.left, 2)} -> {formula_text(phi.right, 1)}", 1
    elif t is Iff:
        s, mine = f"{formula_text(phi.left, 1)} <-> {formula_text(phi.right, 1)}", 0
    elif t is Exists or t is Forall:
        q = "exists" if t is Exists else "forall"
        s, mine = f"{q} {phi.var}. {formula_text(phi.body, 0)}", 0
    else:
        raise TypeError(f"not a formula: {phi!r}")
    return f"({s})" if mine < level else s
