import os
import sys
from contextlib import contextmanager

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")

_acceptance = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Context manager recording one acceptance criterion as pass or fail."""
    results = request.config.stash.setdefault(_acceptance, {})

    @contextmanager
    def run(number, title):
        try:
            yield
        except BaseException:
            results[number] = (title, False)
            print(f"criterion {number:2d} FAIL  {title}")
            raise
        results[number] = (title, True)
        print(f"criterion {number:2d} PASS  {title}")

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_acceptance, None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, ok = results[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}")
