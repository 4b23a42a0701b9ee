import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import holds
from strategies import DOMAIN, SIG, VARS, formulas, states
from scabstract import kernel as k
from scabstract.dsl import parse_formula
from scabstract.errors import ArityMismatch, UnboundVariable, UnknownFluent

from conftest import A_VEC, road


def ev(phi, w, env=None):
    return k.evaluate(phi, w, env)


# -- worked-example spot values ---------------------------------------------------

def test_low_level_start_has_shipment_at_warehouse(logistics):
    w = logistics.ll.initial_models[0]
    assert ev(k.atom("At_LL", "123", "W"), w)


def test_truth_constant():
    assert ev(k.TRUE, k.WorldState(SIG))
    assert not ev(k.FALSE, k.WorldState(SIG))


def test_destination_reached_after_four_roads(logistics):
    ll = logistics.ll
    w = ll.run(A_VEC + (road("Rd_f", "L2", "L4"), road("Rd_g", "L4", "Cf")), ll.initial_models[0])
    phi = parse_formula("exists l. Dest_LL(123, l) & At_LL(123, l)", ll.sig)
    assert ev(phi, w)
    # independent check: enumerate l by hand
    assert any(w.holds("Dest_LL", ("123", l)) and w.holds("At_LL", ("123", l)) for l in ll.sig.domain)


def test_substitute_replaces_free_variables():
    phi = k.Atom("At_HL", (k.Var("sID"), k.Var("o")))
    assert k.substitute(phi, {"sID": "123", "o": "W"}) == k.atom("At_HL", "123", "W")


def test_substitute_leaves_bound_variables():
    phi = k.Exists("l", k.Atom("P", (k.Var("l"), k.Var("x"))))
    assert k.substitute(phi, {"x": "A"}) == k.Exists("l", k.Atom("P", (k.Var("l"), k.Const("A"))))


def test_substitute_renames_on_capture():
    phi = k.Exists("l", k.Atom("R", (k.Var("l"), k.Var("x"))))
    out = k.substitute(phi, {"x": k.Var("l")})
    assert out.var != "l"
    assert out.body == k.Atom("R", (k.Var(out.var), k.Var("l")))


def test_rt_b_precondition_tracks_priority(logistics):
    hl = logistics.hl
    at = hl.action_type("takeRoute")
    ground = k.substitute(at.precondition, dict(zip(at.params, ("123", "Rt_B", "L2", "Cf"))))
    assert not k.free_vars(ground)
    for w in hl.initial_models:
        # put the shipment at L2 so only the priority clause can fail
        moved = k.WorldState(w.sig, {fa for fa in w.atoms if fa[0] != "At_HL"} | {("At_HL", ("123", "L2"))})
        assert ev(ground, moved) == (not moved.holds("Priority", ("123",)))


def test_unbound_variable_is_reported():
    with pytest.raises(UnboundVariable):
        ev(k.Atom("Q", (k.Var("x"),)), k.WorldState(SIG))


def test_unknown_fluent_and_arity():
    w = k.WorldState(SIG)
    with pytest.raises(UnknownFluent):
        ev(k.atom("Nope"), w)
    with pytest.raises(ArityMismatch):
        ev(k.atom("Q", "o1", "o2"), w)
    with pytest.raises(ArityMismatch):
        k.WorldState.build(SIG, [("Q", ())])


def test_state_equality_is_structural():
    a = k.WorldState(SIG, [("P", ()), ("Q", ("o1",))])
    b = k.WorldState(SIG, [("Q", ("o1",)), ("P", ())])
    assert a == b and hash(a) == hash(b)
    assert str(a) == "{P, Q(o1)}"


# -- properties ---------------------------------------------------------------------

@settings(max_examples=300, deadline=None)
@given(formulas(), states())
def test_evaluation_matches_substitution_oracle(phi, w):
    assert ev(phi, w) == holds(phi, w.atoms, DOMAIN)


@settings(max_examples=300, deadline=None)
@given(formulas(), states())
def test_double_negation_and_de_morgan(phi, w):
    assert ev(k.Not(k.Not(phi)), w) == ev(phi, w)
    psi = k.Not(phi)
    assert ev(k.Not(k.And((phi, psi))), w) == ev(k.Or((k.Not(phi), k.Not(psi))), w)
    assert ev(k.Not(k.Or((phi, psi))), w) == ev(k.And((k.Not(phi), k.Not(psi))), w)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(VARS).flatmap(lambda v: st.tuples(st.just(v), formulas(frozenset({v}), 2))), states())
def test_quantifier_expansion(pair, w):
    var, body = pair
    instances = [ev(k.substitute(body, {var: n}), w) for n in DOMAIN]
    assert ev(k.Exists(var, body), w) == any(instances)
    assert ev(k.Forall(var, body), w) == all(instances)


@settings(max_examples=300, deadline=None)
@given(formulas(), states())
def test_evaluation_is_deterministic(phi, w):
    assert ev(phi, w) == ev(phi, w)


@settings(max_examples=300, deadline=None)
@given(formulas(), states())
def test_simplify_preserves_truth(phi, w):
    assert ev(k.simplify(phi), w) == ev(phi, w)


@settings(max_examples=200, deadline=None)
@given(formulas(frozenset({"x", "y"}), 2), states())
def test_solve_finds_exactly_the_satisfying_bindings(phi, w):
    expected = [{"x": a, "y": b} for a in DOMAIN for b in DOMAIN
                if ev(phi, w, {"x": a, "y": b})]
    assert list(k.solve(phi, ["x", "y"], w)) == expected


@settings(max_examples=200, deadline=None)
@given(formulas(frozenset({"x", "y"}), 2), states(), st.sampled_from(DOMAIN))
def test_partial_evaluation_is_consistent(phi, w, a):
    v = k.peval(phi, w, {"x": a})
    if v is not None:
        assert all(ev(phi, w, {"x": a, "y": b}) == v for b in DOMAIN)


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_formula_text_parses_back(phi):
    assert parse_formula(k.formula_text(phi), SIG) == phi
