import sys
from functools import lru_cache

import pytest

from scabstract.bat import GroundAction
from scabstract.project import load_fixture

L3_CLAUSE = "\n    & (d = L3 -> ~(BadWeather | Express(sID)))"


@lru_cache(maxsize=None)
def cached_fixture(name):
    """Loaded once per session; fixtures are immutable apart from internal caches."""
    return load_fixture(name)


def ga(name, *args):
    return GroundAction(name, tuple(args))


def road(t, o, d):
    return ga("takeRoad", "123", t, o, d)


def route(r, o, d):
    return ga("takeRoute", "123", r, o, d)


# the worked example's low-level trace, split by high-level action
A_VEC = (road("Rd_a", "W", "L1"), road("Rd_b", "L1", "L2"))
B_VEC = (road("Rd_f", "L2", "L4"), road("Rd_g", "L4", "Cf"))
C_VEC = (ga("unload", "123"), ga("getSignature", "123"))
ABC = A_VEC + B_VEC + C_VEC

PLAN = (route("Rt_A", "W", "L2"), route("Rt_C", "L2", "Cf"), ga("deliver", "123"))
PLAN_B = (route("Rt_A", "W", "L2"), route("Rt_B", "L2", "Cf"), ga("deliver", "123"))


@pytest.fixture(scope="session")
def logistics():
    return load_fixture("logistics")


@pytest.fixture(scope="session")
def repaired():
    return load_fixture("logistics-repaired")


@pytest.fixture(scope="session")
def guarded():
    return load_fixture("logistics-guarded")


@pytest.fixture(scope="session")
def abpqr():
    return load_fixture("abpqr")


@pytest.fixture(scope="session")
def overlap():
    return load_fixture("overlap")


@pytest.fixture(scope="session")
def unsound_logistics():
    """Low-level L3 restriction removed, high-level Rt_B restriction kept."""
    return load_fixture("logistics", ll=(L3_CLAUSE, ""))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
