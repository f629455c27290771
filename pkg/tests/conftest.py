import sys
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from stratmc.measure_space import coarsest_partition, finest_partition
from stratmc.verification import counterexample_function

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

F = Fraction


@pytest.fixture
def three_valued():
    """4 on [0,1/2], 2 on (1/2,3/4], 6 on (3/4,1]."""
    return counterexample_function()


@pytest.fixture
def halves():
    return coarsest_partition(2), finest_partition(2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.format_line(number))
