import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("fraclp", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("fraclp")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance verdict line; all lines are printed in the terminal summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number: int, title: str, ok: bool, detail: str = ""):
        lines.append((number, f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}  {detail}".rstrip()))
        print(lines[-1][1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, text in sorted(lines):
            terminalreporter.write_line(text)
