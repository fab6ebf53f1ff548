from pathlib import Path

import numpy as np
import pytest

from ephs.components import PPS, PPS_INTERFACE, Reversible, _causal, _itf, register
from ephs.pattern import PortAttribute

FIXTURES = Path(__file__).parent / "fixtures"


class FlippedPPS(PPS):
    sign = -1.0


class Transformer(Reversible):
    """Identity transformer; a stand-in for building causality loops."""

    def compute_efforts(self, grid, x, e_in):
        return {"out": e_in["in"]}

    def flows(self, grid, x, e, f_in):
        return {"in": -f_in["out"]}, {}


MOMENTUM = PortAttribute.power("k", "momentum", "node")
TRANSFORMER_INTERFACE = _itf(**{"in": MOMENTUM, "out": MOMENTUM})

register("pps.flipped", lambda params: FlippedPPS(
    "pps.flipped", "reversible", PPS_INTERFACE, _causal(PPS_INTERFACE, out=("p",)),
    dict(params)))
register("test.transformer", lambda params: Transformer(
    "test.transformer", "reversible", TRANSFORMER_INTERFACE,
    _causal(TRANSFORMER_INTERFACE, out=("out",)), dict(params)))


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary --------------------------------------------------------
# Tests named test_criterion_NN_* each stand for one acceptance criterion;
# their outcomes are collected and printed as one line per criterion.

_CRITERIA: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    name = item.name
    if not name.startswith("test_criterion_"):
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        num = int(name.split("_")[2])
        label = " ".join(name.split("_")[3:])
        _CRITERIA[num] = (label, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        label, status = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d} {status}  {label}")
