import sys
from pathlib import Path

import pytest

from atlkctl.modelio import parse_model
from atlkctl.system import Run, make_system

DATA = Path(__file__).parent / "data"


def toy_system(env_actions=("d",)):
    """Agent 1 moves from x0 to x1 by playing a and stays by playing b; x1 is
    absorbing; agent 2 and the environment are inert. p marks x1."""
    local = {"1": ["x0", "x1"], "2": ["y0"], "e": ["e0"]}
    actions = {"1": ["a", "b"], "2": ["c"], "e": list(env_actions)}
    transition = {}
    for own in local["1"]:
        for a in actions["1"]:
            for d in env_actions:
                nxt = "x1" if own == "x1" or a == "a" else "x0"
                transition[((own, "y0", "e0"), (a, "c", d))] = (nxt, "y0", "e0")
    return make_system(["1", "2"], local, actions, [("x0", "y0", "e0")], transition, {"p": [("x1", "y0", "e0")]})


@pytest.fixture
def toy1():
    return parse_model((DATA / "toy1.json").read_text())


@pytest.fixture
def toy1_two_env_actions():
    return toy_system(("d", "d2"))


@pytest.fixture
def r0():
    return Run((("x0", "y0", "e0"),))


def pytest_terminal_summary(terminalreporter):
    module = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    RESULTS = getattr(module, "RESULTS", [])
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
