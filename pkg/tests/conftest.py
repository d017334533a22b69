from __future__ import annotations

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def walk3():
    from labanlite.synth_decode import synth_walk

    return synth_walk(3, "L")


@pytest.fixture(scope="session")
def walk2():
    from labanlite.synth_decode import synth_walk

    return synth_walk(2, "L")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
