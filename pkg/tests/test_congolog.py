import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import A_VEC, C_VEC, cached_fixture, ga, road, route
from oracles import bounded_traces, partial_traces
from strategies import formulas, programs
from scabstract import congolog as cg
from scabstract import kernel as k
from scabstract.bat import reachable_states
from scabstract.dsl import parse_program, parse_theory
from scabstract.errors import ConfigurationBudgetExceeded

# three always-possible actions; u sets F, v clears it, w leaves it alone
FREE = parse_theory("""
domain: o1, o2
fluents: F/0
action u possible when true
action v possible when true
action w possible when true
ssa F <- a = u | F & a != v
init model { }
init model { F }
""")
W0, W1 = FREE.initial_models


def traces(p, w, depth=4):
    return bounded_traces(p, w, FREE, depth)


def prog(text):
    return parse_program(text, FREE)


# -- single steps ------------------------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(formulas(fluents=(("F", 0),)), st.sampled_from([W0, W1]))
def test_tests_never_move_and_are_final_when_true(phi, w):
    p = cg.Test(phi)
    assert cg.ground_trans(p, w, FREE) == ()
    assert cg.ground_final(p, w) == k.evaluate(phi, w)


def test_blocked_action_has_no_transition(logistics):
    ll = logistics.ll
    p = cg.seq(cg.act("unload", "123"), cg.act("getSignature", "123"))
    assert cg.ground_trans(p, ll.initial_models[0], ll) == ()


def test_pick_finds_the_open_roads_out_of_the_warehouse(logistics):
    ll = logistics.ll
    w = ll.initial_models[0]
    p = parse_program("pi t . takeRoad(123, t, W, L1)", ll)
    got = [a for a, _ in cg.ground_trans(p, w, ll)]
    expected = [road(t, "W", "L1") for t in ll.sig.domain
                if w.holds("CnRoad", (t, "W", "L1")) and not w.holds("Closed", (t,))]
    assert got == expected == [road("Rd_a", "W", "L1")]


@pytest.mark.parametrize("w", [W0, W1])
def test_final_rules(w):
    assert cg.ground_final(cg.NIL, w)
    assert cg.ground_final(cg.Star(cg.act("u")), w)
    for phi in (k.atom("F"), k.Not(k.atom("F"))):
        for p in (cg.NIL, cg.act("u"), cg.Star(cg.act("v"))):
            assert cg.ground_final(cg.Seq(cg.Test(phi), p), w) == (k.evaluate(phi, w) and cg.ground_final(p, w))


# -- executions --------------------------------------------------------------------

def test_nil_has_one_empty_execution():
    assert cg.do_executions(cg.NIL, W0, FREE) == [cg.Execution((), W0)]


def test_deliver_refinement_at_destination(logistics):
    ll, m = logistics.ll, logistics.mapping
    w = ll.run(A_VEC + (road("Rd_f", "L2", "L4"), road("Rd_g", "L4", "Cf")), ll.initial_models[0])
    execs = cg.do_executions(m.map_action(ga("deliver", "123")), w, ll)
    assert [e.trace for e in execs] == [C_VEC]


def test_rt_b_refinement_blocked_for_express_shipment(logistics):
    ll, m = logistics.ll, logistics.mapping
    w = ll.run(A_VEC, ll.initial_models[0])
    assert cg.do_executions(m.map_action(route("Rt_B", "L2", "Cf")), w, ll) == []


def test_star_executions_terminate():
    execs = cg.do_executions(prog("(u | v)*"), W0, FREE)
    assert cg.Execution((), W0) in execs
    assert all(len(e.trace) <= 4 for e in execs)


def test_configuration_budget():
    with pytest.raises(ConfigurationBudgetExceeded):
        cg.do_executions(prog("(u | v | w)* ; (u | v | w)*"), W0, FREE, budget=5)


def test_if_and_while_abbreviations():
    p = prog("if F then v else u endif")
    assert {e.trace for e in cg.do_executions(p, W0, FREE)} == {(ga("u"),)}
    assert {e.trace for e in cg.do_executions(p, W1, FREE)} == {(ga("v"),)}
    loop = prog("while ~F do u endwhile")
    assert {e.trace for e in cg.do_executions(loop, W0, FREE)} == {(ga("u"),)}
    assert {e.trace for e in cg.do_executions(loop, W1, FREE)} == {()}


# -- situation-determinedness ---------------------------------------------------------

def test_shared_prefix_choice_is_not_determined():
    res = cg.is_situation_determined(prog("(u ; v) | (u ; w)"), W0, FREE)
    assert not res
    assert res.witness == (ga("u"),)


def test_factored_choice_is_determined():
    assert cg.is_situation_determined(prog("u ; (v | w)"), W0, FREE)


@pytest.mark.parametrize("name", ["logistics", "logistics-guarded", "abpqr", "overlap"])
def test_fixture_templates_are_determined(name):
    p = cached_fixture(name)
    assert p.mapping.check_templates_sd(reachable_states(p.ll).nodes) is None


@settings(max_examples=200, deadline=None)
@given(programs(2), st.sampled_from([W0, W1]))
def test_situation_determined_iff_every_trace_leaves_one_residual(p, w):
    res = cg.is_situation_determined(p, w, FREE)
    multi = [t for t in partial_traces(p, w, FREE, 4) if len(cg.configurations_after(p, w, t, FREE)) > 1]
    if res:
        assert not multi
    else:
        assert len(cg.configurations_after(p, w, res.witness, FREE)) > 1


# -- algebraic laws -------------------------------------------------------------

@settings(max_examples=300, deadline=None)
@given(programs(2), programs(2), st.sampled_from([W0, W1]))
def test_interleaving_is_symmetric(p, q, w):
    assert traces(cg.Conc(p, q), w) == traces(cg.Conc(q, p), w)
    assert partial_traces(cg.Conc(p, q), w, FREE, 4) == partial_traces(cg.Conc(q, p), w, FREE, 4)


@settings(max_examples=300, deadline=None)
@given(programs(2), st.sampled_from([W0, W1]))
def test_star_unrolls_once(p, w):
    star = cg.Star(p)
    unrolled = cg.Choice(cg.NIL, cg.Seq(p, star))
    assert traces(star, w) == traces(unrolled, w)
    # and at every configuration the star reaches
    for t in partial_traces(star, w, FREE, 2):
        for r in cg.configurations_after(star, w, t, FREE):
            s = FREE.run(t, w)
            if type(r) is cg.Star:
                assert traces(r, s, 3) == traces(cg.Choice(cg.NIL, cg.Seq(r.body, r)), s, 3)


def _star_free(p):
    t = type(p)
    if t is cg.Star:
        return False
    if t in (cg.Act, cg.Test):
        return True
    if t is cg.Seq:
        return _star_free(p.first) and _star_free(p.second)
    if t is cg.Pick:
        return _star_free(p.body)
    return _star_free(p.left) and _star_free(p.right)


@settings(max_examples=300, deadline=None)
@given(programs(3), st.sampled_from([W0, W1]))
def test_executions_match_direct_recursion(p, w):
    execs = cg.do_executions(p, w, FREE)
    got = {e.trace for e in execs}
    assert all(FREE.run(e.trace, w) == e.state for e in execs)
    assert got <= traces(p, w, 12)
    if _star_free(p):
        assert got == traces(p, w, 12)


@settings(max_examples=200, deadline=None)
@given(programs(3), st.sampled_from([W0, W1]))
def test_engine_is_deterministic(p, w):
    assert cg.do_executions(p, w, FREE) == cg.do_executions(p, w, FREE)
    assert cg.ground_trans(p, w, FREE) == cg.ground_trans(p, w, FREE)


@settings(max_examples=200, deadline=None)
@given(programs(3))
def test_program_text_parses_back(p):
    assert parse_program(cg.program_text(p), FREE) == p
