from itertools import chain, combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ABC, A_VEC, PLAN, cached_fixture, ga, route
from strategies import formulas
from scabstract import congolog as cg
from scabstract import kernel as k
from scabstract.abstraction import m_isomorphic
from scabstract.bat import reachable_states
from scabstract.dsl import parse_formula
from scabstract.errors import UnmappedSymbol
from scabstract.mapping import hl_reachable_ll_states, map_action_sequence, map_formula
from scabstract.project import build_project, fixture_text, load_fixture

from oracles import all_ground_actions

FOCUS = ("123", "W", "L1", "L2", "Cf", "Rt_A", "Rt_B", "Rt_C")


def text(m, s):
    return parse_formula(s, m.ll.sig)


def test_delivered_maps_to_unloaded_and_signed(logistics):
    m = logistics.mapping
    assert map_formula(k.atom("Delivered", "123"), m) == text(m, "Unloaded(123) & Signed(123)")


def test_truth_maps_to_itself(logistics):
    assert map_formula(k.TRUE, logistics.mapping) == k.TRUE


def test_negated_priority(logistics):
    m = logistics.mapping
    assert map_formula(k.Not(k.atom("Priority", "123")), m) == text(m, "~(BadWeather | Express(123))")


def test_empty_sequence_maps_to_nil(logistics):
    assert map_action_sequence([], logistics.mapping) == cg.NIL


def test_deliver_maps_to_unload_then_sign(logistics):
    assert map_action_sequence([ga("deliver", "123")], logistics.mapping) == \
        cg.seq(cg.act("unload", "123"), cg.act("getSignature", "123"))


def test_plan_program_has_the_worked_trace(logistics):
    m, ll = logistics.mapping, logistics.ll
    execs = cg.do_executions(map_action_sequence(PLAN, m), ll.initial_models[0], ll)
    assert execs
    assert ABC in [e.trace for e in execs]


def test_missing_fluent_mapping_is_rejected():
    bad = fixture_text("logistics.map").replace("map fluent Dest_HL(sID, l) = Dest_LL(sID, l)\n", "")
    with pytest.raises(UnmappedSymbol):
        build_project(fixture_text("logistics_hl.sc"), fixture_text("logistics_ll.sc"), bad)


def test_initial_states_are_in_the_arena(logistics, abpqr):
    for p in (logistics, abpqr):
        arena = hl_reachable_ll_states(p.mapping)
        assert set(p.ll.initial_models) <= set(arena.nodes)


def test_arena_edges_replay(logistics):
    m = logistics.mapping
    arena = hl_reachable_ll_states(m)
    for n in arena.nodes:
        for e in arena.successors(n):
            assert m.ll.run(e.via, n) == e.target
            assert any(ex.trace == e.via for ex in m.executions(e.label, n))


def test_arena_has_no_hl_reachable_mid_route_states(logistics):
    m = logistics.mapping
    mid = m.ll.run(A_VEC[:1], m.ll.initial_models[0])
    assert mid in reachable_states(m.ll).nodes
    assert mid not in hl_reachable_ll_states(m).nodes


def test_empty_mapping_gives_single_node():
    p = build_project("domain:\nfluents:\n", "domain:\nfluents: F/0\naction A possible when true\n", "")
    arena = hl_reachable_ll_states(p.mapping)
    assert len(arena.nodes) == 1 and arena.edge_count() == 0


def test_isomorphism_with_initial_models(logistics):
    m = logistics.mapping
    l0 = m.ll.initial_models[0]
    expected = k.evaluate(text(m, "BadWeather | Express(123)"), l0)
    assert expected
    for h in m.hl.initial_models:
        assert m_isomorphic(h, l0, m) == (h.holds("Priority", ("123",)) == expected)


def test_identity_isomorphism():
    p = load_fixture("abpqr")
    # a state is m-isomorphic to its renamed copy
    for h in reachable_states(p.hl).nodes:
        l = k.WorldState(p.ll.sig, {(f + "_l", args) for f, args in h.atoms})
        assert m_isomorphic(h, l, p.mapping)


def test_states_after_one_route_are_isomorphic(logistics):
    m = logistics.mapping
    h = m.hl.step(route("Rt_A", "W", "L2"), m.hl.initial_models[0])
    l = m.ll.run(A_VEC, m.ll.initial_models[0])
    assert m_isomorphic(h, l, m)


# -- properties -----------------------------------------------------------------

def _hl_formulas(name, depth=2):
    hl = cached_fixture(name).hl
    if not hl.sig.domain:
        # nullary vocabulary over an empty domain: no terms at all
        return formulas(frozenset(), depth, hl.sig.fluents, ("unused",), equalities=False)
    domain = tuple(d for d in FOCUS if d in hl.sig.domain)
    return formulas(frozenset(), depth, hl.sig.fluents, domain)


def _all_states(sig):
    atoms = list(sig.ground_atoms())
    subsets = chain.from_iterable(combinations(atoms, r) for r in range(len(atoms) + 1))
    return [k.WorldState(sig, s) for s in subsets]


def _pairs(name):
    p = cached_fixture(name)
    m = p.mapping
    lls = reachable_states(p.ll).nodes if p.ll.sig.domain else _all_states(p.ll.sig)
    return [(m.project_state(l), l) for l in lls]


@pytest.mark.parametrize("name", ["logistics", "abpqr", "overlap"])
@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_formula_transport_on_isomorphic_pairs(name, data):
    phi = data.draw(_hl_formulas(name))
    m = cached_fixture(name).mapping
    mapped = map_formula(phi, m)
    for h, l in _pairs(name):
        assert m_isomorphic(h, l, m)
        assert k.evaluate(phi, h) == k.evaluate(mapped, l)


@settings(max_examples=300, deadline=None)
@given(data=st.data())
def test_mapping_commutes_with_connectives(data):
    m = cached_fixture("logistics").mapping
    phi = data.draw(_hl_formulas("logistics", 1))
    psi = data.draw(_hl_formulas("logistics", 1))
    mf = m.map_formula
    assert mf(k.Not(phi)) == k.Not(mf(phi))
    assert mf(k.And((phi, psi))) == k.And((mf(phi), mf(psi)))
    assert mf(k.Or((phi, psi))) == k.Or((mf(phi), mf(psi)))
    assert mf(k.Implies(phi, psi)) == k.Implies(mf(phi), mf(psi))
    assert mf(k.Exists("x", phi)) == k.Exists("x", mf(phi))
    assert mf(k.Forall("x", phi)) == k.Forall("x", mf(phi))


def test_instance_table_covers_every_movable_template(logistics):
    """Brute force over every ground high-level action in the first two arena states."""
    m = logistics.mapping
    arena = hl_reachable_ll_states(m)
    for w in arena.nodes[:2]:
        table = m.instance_table(w)
        for alpha in all_ground_actions(m.hl):
            prog = m.map_action(alpha)
            moves = cg.ground_trans(prog, w, m.ll) or cg.ground_final(prog, w)
            assert bool(moves) == (alpha in table), alpha
