"""Text format for theories and refinement mappings.

A theory file::

    domain: 123, W, Cf
    fluents: At/2, Done/1, Raining/0
    action move(s, o, d) possible when o != d & At(s, o)
    ssa At(s, l) <- (exists o. a = move(s, o, l)) | At(s, l) & ~(exists d. a = move(s, l, d))
    init { At(123, W) }
    init model { Raining }
    init model { }

``init { }`` lists facts shared by every initial model; each ``init model``
block adds one model. Atoms not listed are false. Fluents without an
``ssa`` line keep their value forever. Inside an ``ssa`` right-hand side
the identifier ``a`` stands for the action being performed.

A mapping file::

    map action go(s, d) = pi o . move(s, o, d)
    map fluent Here(s, l) = At(s, l)

Program syntax, loosest first: ``p | q``, ``p || q``, ``p ; q``,
``pi x . p``, ``p*``; tests are ``(phi)?`` and ``nil`` is the empty
program. ``if phi then p else q endif`` and ``while phi do p endwhile``
expand to their usual encodings.

Identifiers are object constants when declared in ``domain:``, and
variables otherwise.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .bat import ActionType, BasicActionTheory, SuccessorStateAxiom
from .congolog import (NIL, Act, Choice, Conc, Pick, Seq, Star, Test, if_then_else,
                       program_text, while_do)
from .errors import DslSyntaxError, WorkbenchError
from .kernel import (FALSE, TRUE, ActionEq, And, Atom, Const, Eq, Exists, Forall, Iff,
                     Implies, Not, Or, Signature, Var, WorldState, atom_text, formula_text)
from .mapping import ActionRefinement, FluentRefinement, RefinementMapping

ACTION_VAR = "a"

KEYWORDS = {
    "domain", "fluents", "action", "possible", "when", "ssa", "init", "model", "map",
    "fluent", "forall", "exists", "true", "false", "pi", "nil", "if", "then", "else",
    "endif", "while", "do", "endwhile",
}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z0-9_][A-Za-z0-9_']*)
  | (?P<op><->|->|<-|!=|\|\||[(){},.:;|&~=?*/])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str      # ident, op, eof
    text: str
    line: int
    column: int


def tokenize(text: str, source: str | None = None) -> list:
    out = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DslSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1, source)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind in ("ident", "op"):
            out.append(Token(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, text: str, source: str | None):
        self.source = source
        self.toks = tokenize(text, source)
        self.pos = 0
        # vocabulary used while parsing formulas and programs
        self.domain = set()
        self.fluents = {}
        self.actions = {}
        self.action_var = None

    # -- token helpers --------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise DslSyntaxError(message, tok.line, tok.column, self.source)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "eof"

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.pos += 1
        return tok

    def name(self, what: str = "identifier") -> str:
        tok = self.tok
        if tok.kind != "ident" or tok.text in KEYWORDS:
            self.error(f"expected {what}, found {tok.text or 'end of input'!r}")
        self.pos += 1
        return tok.text

    def params(self) -> tuple:
        if not self.accept("("):
            return ()
        out = []
        if not self.at(")"):
            out.append(self.variable_name())
            while self.accept(","):
                out.append(self.variable_name())
        self.expect(")")
        if len(set(out)) != len(out):
            self.error("repeated parameter name")
        return tuple(out)

    def variable_name(self) -> str:
        tok = self.tok
        name = self.name("variable")
        if name in self.domain:
            self.error(f"{name} is an object constant, not a variable", tok)
        return name

    # -- formulas -------------------------------------------------------------

    def formula(self, scope: frozenset):
        left = self.implication(scope)
        if self.accept("<->"):
            return Iff(left, self.implication(scope))
        return left

    def implication(self, scope):
        left = self.disjunction(scope)
        if self.accept("->"):
            return Implies(left, self.implication(scope))
        return left

    def disjunction(self, scope):
        items = [self.conjunction(scope)]
        while self.accept("|"):
            items.append(self.conjunction(scope))
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self, scope):
        items = [self.unary(scope)]
        while self.accept("&"):
            items.append(self.unary(scope))
        return items[0] if len(items) == 1 else And(tuple(items))

    def unary(self, scope):
        if self.accept("~"):
            return Not(self.unary(scope))
        if self.at("forall") or self.at("exists"):
            kind = Forall if self.tok.text == "forall" else Exists
            self.pos += 1
            var = self.variable_name()
            self.expect(".")
            return kind(var, self.formula(scope | {var}))
        return self.primary(scope)

    def term(self, scope):
        tok = self.tok
        name = self.name("term")
        if name in self.domain:
            return Const(name)
        if name in scope:
            return Var(name)
        self.error(f"unknown identifier {name}", tok)

    def primary(self, scope):
        tok = self.tok
        if self.accept("true"):
            return TRUE
        if self.accept("false"):
            return FALSE
        if self.accept("("):
            inner = self.formula(scope)
            self.expect(")")
            return inner
        if tok.kind != "ident" or tok.text in KEYWORDS:
            self.error(f"expected a formula, found {tok.text or 'end of input'!r}")
        nxt = self.peek().text
        if tok.text in self.fluents and nxt not in ("=", "!="):
            self.pos += 1
            args = ()
            if self.accept("("):
                args = [self.term(scope)]
                while self.accept(","):
                    args.append(self.term(scope))
                self.expect(")")
                args = tuple(args)
            if len(args) != self.fluents[tok.text]:
                self.error(f"{tok.text} expects {self.fluents[tok.text]} arguments, got {len(args)}", tok)
            return Atom(tok.text, args)
        if nxt == "(":
            self.error(f"unknown fluent {tok.text}", tok)
        if self.action_var is not None and tok.text == self.action_var and tok.text not in scope:
            self.pos += 1
            negate = self.tok.text == "!="
            if not (self.accept("=") or self.accept("!=")):
                self.error("expected '=' or '!=' after the action variable")
            atok = self.tok
            aname = self.name("action name")
            if aname not in self.actions:
                self.error(f"unknown action {aname}", atok)
            args = ()
            if self.accept("("):
                args = [self.term(scope)]
                while self.accept(","):
                    args.append(self.term(scope))
                self.expect(")")
                args = tuple(args)
            if len(args) != self.actions[aname]:
                self.error(f"{aname} expects {self.actions[aname]} arguments, got {len(args)}", atok)
            eq = ActionEq(self.action_var, aname, args)
            return Not(eq) if negate else eq
        left = self.term(scope)
        if self.accept("="):
            return Eq(left, self.term(scope))
        if self.accept("!="):
            return Not(Eq(left, self.term(scope)))
        self.error("expected '=' or '!=' after a term")

    # -- programs -------------------------------------------------------------

    def program(self, scope: frozenset):
        left = self.concurrent(scope)
        if self.accept("|"):
            return Choice(left, self.program(scope))
        return left

    def concurrent(self, scope):
        left = self.sequence(scope)
        if self.accept("||"):
            return Conc(left, self.concurrent(scope))
        return left

    def sequence(self, scope):
        left = self.pick(scope)
        if self.accept(";"):
            return Seq(left, self.sequence(scope))
        return left

    def pick(self, scope):
        if self.accept("pi"):
            var = self.variable_name()
            self.expect(".")
            return Pick(var, self.pick(scope | {var}))
        return self.postfix(scope)

    def postfix(self, scope):
        p = self.atomic(scope)
        while self.accept("*"):
            p = Star(p)
        return p

    def atomic(self, scope):
        tok = self.tok
        if self.accept("nil"):
            return NIL
        if self.accept("if"):
            cond = self.formula(scope)
            self.expect("then")
            then = self.program(scope)
            self.expect("else")
            orelse = self.program(scope)
            self.expect("endif")
            return if_then_else(cond, then, orelse)
        if self.accept("while"):
            cond = self.formula(scope)
            self.expect("do")
            body = self.program(scope)
            self.expect("endwhile")
            return while_do(cond, body)
        if tok.kind == "ident" and tok.text in self.actions:
            self.pos += 1
            args = ()
            if self.accept("("):
                args = [self.term(scope)]
                while self.accept(","):
                    args.append(self.term(scope))
                self.expect(")")
                args = tuple(args)
            if len(args) != self.actions[tok.text]:
                self.error(f"{tok.text} expects {self.actions[tok.text]} arguments, got {len(args)}", tok)
            return Act(tok.text, args)
        # a test, or a parenthesised program
        start = self.pos
        try:
            cond = self.formula(scope)
            self.expect("?")
            return Test(cond)
        except DslSyntaxError as formula_error:
            self.pos = start
            if not self.accept("("):
                raise formula_error
            inner = self.program(scope)
            self.expect(")")
            return inner

    # -- statements -------------------------------------------------------------

    def prescan(self):
        """Collect declared symbols so later statements may refer to earlier ones freely."""
        toks = self.toks
        for i, t in enumerate(toks[:-1]):
            if t.kind != "ident":
                continue
            nxt = toks[i + 1]
            if t.text in ("domain", "fluents") and nxt.text == ":":
                j = i + 2
                while toks[j].kind == "ident" and toks[j].text not in KEYWORDS:
                    if t.text == "domain":
                        self.domain.add(toks[j].text)
                        j += 1
                    elif toks[j + 1].text == "/" and toks[j + 2].text.isdigit():
                        self.fluents.setdefault(toks[j].text, int(toks[j + 2].text))
                        j += 3
                    else:
                        break
                    if toks[j].text != ",":
                        break
                    j += 1
            if t.text == "action" and (i == 0 or toks[i - 1].text != "map") and nxt.kind == "ident":
                k = i + 2
                arity = 0
                if toks[k].text == "(" and toks[k + 1].text != ")":
                    arity = 1
                    k += 2
                    while toks[k].text == ",":
                        arity += 1
                        k += 2
                self.actions.setdefault(nxt.text, arity)


def parse_theory(text: str, source: str | None = None, name: str = "") -> BasicActionTheory:
    p = _Parser(text, source)
    p.prescan()
    domain, fluents, actions, ssas = [], [], [], {}
    common, models = {}, []
    seen_domain = seen_fluents = False
    decl_tok = {}
    while p.tok.kind != "eof":
        tok = p.tok
        if p.accept("domain"):
            if seen_domain:
                p.error("second domain declaration", tok)
            seen_domain = True
            p.expect(":")
            if p.tok.kind == "ident" and p.tok.text not in KEYWORDS:
                domain.append(p.name("object name"))
                while p.accept(","):
                    domain.append(p.name("object name"))
            if len(set(domain)) != len(domain):
                p.error("repeated object name in domain", tok)
        elif p.accept("fluents"):
            if seen_fluents:
                p.error("second fluents declaration", tok)
            seen_fluents = True
            p.expect(":")

            def one():
                ftok = p.tok
                fname = p.name("fluent name")
                p.expect("/")
                atok = p.tok
                arity = p.name("arity")
                if not arity.isdigit():
                    p.error("arity must be a number", atok)
                if any(f == fname for f, _ in fluents):
                    p.error(f"fluent {fname} declared twice", ftok)
                if fname in p.domain:
                    p.error(f"{fname} is both a fluent and an object", ftok)
                fluents.append((fname, int(arity)))

            if p.tok.kind == "ident" and p.tok.text not in KEYWORDS:
                one()
                while p.accept(","):
                    one()
        elif p.accept("action"):
            atok = p.tok
            aname = p.name("action name")
            if any(a.name == aname for a in actions):
                p.error(f"action {aname} declared twice", atok)
            params = p.params()
            p.expect("possible")
            p.expect("when")
            pre = p.formula(frozenset(params))
            actions.append(ActionType(aname, params, pre))
        elif p.accept("ssa"):
            ftok = p.tok
            fname = p.name("fluent name")
            if fname not in p.fluents:
                p.error(f"unknown fluent {fname}", ftok)
            if fname in ssas:
                p.error(f"second successor-state axiom for {fname}", ftok)
            params = p.params()
            if len(params) != p.fluents[fname]:
                p.error(f"{fname} expects {p.fluents[fname]} parameters", ftok)
            if ACTION_VAR in params or ACTION_VAR in p.domain:
                p.error(f"{ACTION_VAR!r} is reserved for the action in successor-state axioms", ftok)
            p.expect("<-")
            p.action_var = ACTION_VAR
            rhs = p.formula(frozenset(params))
            p.action_var = None
            ssas[fname] = SuccessorStateAxiom(fname, params, rhs, ACTION_VAR)
        elif p.accept("init"):
            target = {}
            if p.accept("model"):
                models.append(target)
            else:
                target = common
            p.expect("{")
            if not p.at("}"):
                _literal(p, target)
                while p.accept(","):
                    _literal(p, target)
            p.expect("}")
        else:
            p.error(f"expected a declaration, found {tok.text!r}")
    if not models:
        models = [{}]
    sig = Signature(tuple(domain), tuple(fluents))
    initial = []
    for extra in models:
        facts = {**common, **extra}
        initial.append(WorldState(sig, [a for a, v in facts.items() if v]))
    ordered = tuple(ssas.get(f) or SuccessorStateAxiom.frame(f, n) for f, n in fluents)
    try:
        return BasicActionTheory(sig, tuple(actions), ordered, tuple(initial), name=name)
    except WorkbenchError as exc:
        raise DslSyntaxError(str(exc), None, None, source) from None


def _literal(p: _Parser, target: dict):
    negative = p.accept("~")
    tok = p.tok
    fname = p.name("fluent name")
    if fname not in p.fluents:
        p.error(f"unknown fluent {fname}", tok)
    args = []
    if p.accept("("):
        if not p.at(")"):
            args.append(_object(p))
            while p.accept(","):
                args.append(_object(p))
        p.expect(")")
    if len(args) != p.fluents[fname]:
        p.error(f"{fname} expects {p.fluents[fname]} arguments, got {len(args)}", tok)
    key = (fname, tuple(args))
    if target.get(key, not negative) == negative:
        p.error(f"{atom_text(*key)} is listed both true and false", tok)
    target[key] = not negative


def _object(p: _Parser) -> str:
    tok = p.tok
    name = p.name("object name")
    if name not in p.domain:
        p.error(f"{name} is not a declared object", tok)
    return name


def parse_mapping(text: str, hl: BasicActionTheory, ll: BasicActionTheory,
                  source: str | None = None) -> RefinementMapping:
    p = _Parser(text, source)
    p.domain = set(ll.sig.domain)
    p.fluents = dict(ll.sig.arity)
    p.actions = {a.name: len(a.params) for a in ll.actions}
    acts, fls = {}, {}
    while p.tok.kind != "eof":
        tok = p.tok
        p.expect("map")
        if p.accept("action"):
            ntok = p.tok
            name = p.name("high-level action")
            if name not in hl._memo["types"]:
                p.error(f"unknown high-level action {name}", ntok)
            if name in acts:
                p.error(f"action {name} mapped twice", ntok)
            params = p.params()
            p.expect("=")
            acts[name] = ActionRefinement(name, params, p.program(frozenset(params)))
        elif p.accept("fluent"):
            ntok = p.tok
            name = p.name("high-level fluent")
            if name not in hl.sig.arity:
                p.error(f"unknown high-level fluent {name}", ntok)
            if name in fls:
                p.error(f"fluent {name} mapped twice", ntok)
            params = p.params()
            p.expect("=")
            fls[name] = FluentRefinement(name, params, p.formula(frozenset(params)))
        else:
            p.error("expected 'action' or 'fluent' after 'map'", tok)
    # declaration order of the high-level theory, then anything else
    return RefinementMapping(hl, ll, acts.values(), fls.values())


def parse_formula(text: str, sig: Signature, variables=(), actions=None,
                  action_var: str | None = None):
    """Parse one formula against a signature (used by the CLI and tests)."""
    p = _Parser(text, None)
    p.domain = set(sig.domain)
    p.fluents = dict(sig.arity)
    p.actions = dict(actions or {})
    p.action_var = action_var
    phi = p.formula(frozenset(variables))
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r} after formula")
    return phi


def parse_program(text: str, bat: BasicActionTheory, variables=()):
    p = _Parser(text, None)
    p.domain = set(bat.sig.domain)
    p.fluents = dict(bat.sig.arity)
    p.actions = {a.name: len(a.params) for a in bat.actions}
    prog = p.program(frozenset(variables))
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r} after program")
    return prog


def parse_actions(text: str, bat: BasicActionTheory) -> list:
    """Comma-separated ground actions, e.g. ``takeRoad(123,Rd_a,W,L1),unload(123)``."""
    from .bat import GroundAction
    p = _Parser(text, None)
    p.domain = set(bat.sig.domain)
    out = []
    while p.tok.kind != "eof":
        tok = p.tok
        name = p.name("action name")
        try:
            bat.action_type(name)
        except WorkbenchError as exc:
            p.error(str(exc), tok)
        args = []
        if p.accept("("):
            if not p.at(")"):
                args.append(_object(p))
                while p.accept(","):
                    args.append(_object(p))
            p.expect(")")
        a = GroundAction(name, tuple(args))
        try:
            bat._checked(a)
        except WorkbenchError as exc:
            p.error(str(exc), tok)
        out.append(a)
        if not p.accept(",") and not p.accept(";"):
            break
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return out


# -- pretty printing ------------------------------------------------------------

def _params_text(params) -> str:
    return "(" + ", ".join(params) + ")" if params else ""


def _facts_text(atoms) -> str:
    return "{ " + ", ".join(atom_text(f, a) for f, a in atoms) + " }" if atoms else "{ }"


def theory_text(bat: BasicActionTheory) -> str:
    sig = bat.sig
    lines = ["domain: " + ", ".join(sig.domain),
             "fluents: " + ", ".join(f"{f}/{n}" for f, n in sig.fluents)]
    for at in bat.actions:
        lines.append(f"action {at.name}{_params_text(at.params)} possible when {formula_text(at.precondition)}")
    for ssa in bat._memo["ssa"]:
        if ssa == SuccessorStateAxiom.frame(ssa.fluent, len(ssa.params)):
            continue
        lines.append(f"ssa {ssa.fluent}{_params_text(ssa.params)} <- {formula_text(ssa.rhs)}")
    models = bat.initial_models
    common = frozenset.intersection(*(w.atoms for w in models))
    order = {f: i for i, (f, _) in enumerate(sig.fluents)}

    def sort(atoms):
        return sorted(atoms, key=lambda fa: (order[fa[0]], [sig.index[x] for x in fa[1]]))

    lines.append("init " + _facts_text(sort(common)))
    if len(models) > 1:
        for w in models:
            lines.append("init model " + _facts_text(sort(w.atoms - common)))
    return "\n".join(lines) + "\n"


def mapping_text(m: RefinementMapping) -> str:
    lines = []
    for at in m.hl.actions:
        r = m.actions[at.name]
        lines.append(f"map action {r.name}{_params_text(r.params)} = {program_text(r.program)}")
    for f, _ in m.hl.sig.fluents:
        r = m.fluents[f]
        lines.append(f"map fluent {r.name}{_params_text(r.params)} = {formula_text(r.formula)}")
    return "\n".join(lines) + "\n"
