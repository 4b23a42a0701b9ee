import pytest
from hypothesis import given, settings

from strategies import SIG, formulas
from scabstract import kernel as k
from scabstract.dsl import (mapping_text, parse_actions, parse_formula, parse_mapping, parse_theory,
                            theory_text, tokenize)
from scabstract.errors import ArityMismatch, DslSyntaxError, TheoryError, VocabularyClash
from scabstract.project import FIXTURES, build_project, fixture_text, load_fixture

THEORY_FILES = sorted({f for hl, ll, _ in FIXTURES.values() for f in (hl, ll)})


@pytest.mark.parametrize("filename", THEORY_FILES)
def test_theory_text_parses_back(filename):
    bat = parse_theory(fixture_text(filename))
    again = parse_theory(theory_text(bat))
    assert again.initial_models == bat.initial_models
    assert theory_text(again) == theory_text(bat)
    assert [a.precondition for a in again.actions] == [a.precondition for a in bat.actions]


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_mapping_text_parses_back(name):
    p = load_fixture(name)
    m = parse_mapping(mapping_text(p.mapping), p.hl, p.ll)
    assert mapping_text(m) == mapping_text(p.mapping)
    assert m.actions == p.mapping.actions and m.fluents == p.mapping.fluents


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_formula_text_parses_back(phi):
    assert parse_formula(k.formula_text(phi), SIG) == phi


def test_comments_and_layout_are_ignored():
    a = parse_theory("domain: o\nfluents: F/1\n# comment\ninit { F(o) }\n")
    b = parse_theory("domain:o fluents:F/1 init{F(o)}   # trailing")
    assert a.initial_models == b.initial_models


def test_syntax_errors_report_line_and_column():
    with pytest.raises(DslSyntaxError) as exc:
        parse_theory("domain: o\nfluents: F/1\naction A possible when F(o) &\n", source="t.sc")
    e = exc.value
    assert (e.line, e.source) == (4, "t.sc")
    assert str(e).startswith("t.sc:4:")


def test_unexpected_character():
    with pytest.raises(DslSyntaxError) as exc:
        tokenize("domain: o\n  $")
    assert (exc.value.line, exc.value.column) == (2, 3)


def test_unknown_fluent_and_arity():
    with pytest.raises(DslSyntaxError) as exc:
        parse_theory("domain: o\nfluents: F/1\naction A possible when G(o)\n")
    assert (exc.value.line, exc.value.column) == (3, 24)
    with pytest.raises((ArityMismatch, DslSyntaxError)):
        parse_theory("domain: o\nfluents: F/1\naction A possible when F(o, o)\n")


def test_free_variable_in_precondition():
    with pytest.raises((TheoryError, DslSyntaxError)):
        parse_theory("domain: o\nfluents: F/1\naction A possible when F(x)\n")


def test_unknown_action_in_a_trace_has_a_position(logistics):
    with pytest.raises(DslSyntaxError) as exc:
        parse_actions("takeRoad(123, Rd_a, W, L1), fly(123)", logistics.ll)
    assert exc.value.line == 1 and "fly" in str(exc.value)


def test_shared_symbols_are_rejected():
    hl = "domain: o\nfluents: F/0\naction A possible when true\n"
    with pytest.raises(VocabularyClash):
        build_project(hl, hl, "")


def test_different_domains_are_rejected():
    with pytest.raises(VocabularyClash):
        build_project("domain: o\nfluents:\n", "domain: p\nfluents:\n", "")
