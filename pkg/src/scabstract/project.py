"""Loading a high-level theory, a low-level theory and a mapping together."""
from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .bat import DEFAULT_STATE_BUDGET, BasicActionTheory
from .dsl import parse_mapping, parse_theory
from .errors import VocabularyClash, WorkbenchError
from .mapping import RefinementMapping

FIXTURES = {
    # name: (high-level file, low-level file, mapping file)
    "logistics": ("logistics_hl.sc", "logistics_ll.sc", "logistics.map"),
    "logistics-repaired": ("logistics_hl_repaired.sc", "logistics_ll.sc", "logistics.map"),
    "logistics-guarded": ("logistics_hl_guarded.sc", "logistics_ll_guarded.sc", "logistics.map"),
    "abpqr": ("abpqr_hl.sc", "abpqr_ll.sc", "abpqr.map"),
    "overlap": ("overlap_hl.sc", "overlap_ll.sc", "overlap.map"),
}


@dataclass
class WorkbenchProject:
    hl: BasicActionTheory
    ll: BasicActionTheory
    mapping: RefinementMapping
    sources: tuple = ()
    options: dict = field(default_factory=dict)


def check_vocabularies(hl: BasicActionTheory, ll: BasicActionTheory):
    """The two theories share objects but no fluent or action symbols."""
    if set(hl.sig.domain) != set(ll.sig.domain):
        only_hl = sorted(set(hl.sig.domain) - set(ll.sig.domain))
        only_ll = sorted(set(ll.sig.domain) - set(hl.sig.domain))
        raise VocabularyClash(f"object domains differ (high level only: {only_hl}, "
                              f"low level only: {only_ll})")
    hl_syms = set(hl.sig.arity) | {a.name for a in hl.actions}
    ll_syms = set(ll.sig.arity) | {a.name for a in ll.actions}
    shared = sorted(hl_syms & ll_syms)
    if shared:
        raise VocabularyClash(f"symbols used at both levels: {', '.join(shared)}")


def build_project(hl_text: str, ll_text: str, map_text: str, sources=(None, None, None),
                  check_sd: bool = True, budget: int = DEFAULT_STATE_BUDGET) -> WorkbenchProject:
    hl = parse_theory(hl_text, sources[0], name="high")
    ll = parse_theory(ll_text, sources[1], name="low")
    check_vocabularies(hl, ll)
    m = parse_mapping(map_text, hl, ll, sources[2])
    if check_sd:
        from .bat import reachable_states
        m.require_sd_templates(reachable_states(ll, budget=budget).nodes)
    return WorkbenchProject(hl, ll, m, tuple(sources), {"budget": budget})


def parse_project(hl_path, ll_path, map_path, check_sd: bool = True,
                  budget: int = DEFAULT_STATE_BUDGET) -> WorkbenchProject:
    paths = [Path(p) for p in (hl_path, ll_path, map_path)]
    texts = [p.read_text() for p in paths]
    return build_project(*texts, sources=tuple(str(p) for p in paths),
                         check_sd=check_sd, budget=budget)


def fixture_text(filename: str) -> str:
    return resources.files("scabstract.fixtures").joinpath(filename).read_text()


def load_fixture(name: str, check_sd: bool = True, **replace) -> WorkbenchProject:
    """Load a bundled fixture by name.

    ``replace`` maps ``hl``/``ll``/``map`` to ``(old, new)`` text
    substitutions, which is how tests build mutated variants.
    """
    try:
        files = FIXTURES[name]
    except KeyError:
        raise WorkbenchError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}") from None
    texts = [fixture_text(f) for f in files]
    for i, key in enumerate(("hl", "ll", "map")):
        if key in replace:
            old, new = replace[key]
            if old not in texts[i]:
                raise WorkbenchError(f"{old!r} does not occur in {files[i]}")
            texts[i] = texts[i].replace(old, new)
    return build_project(*texts, sources=files, check_sd=check_sd)
