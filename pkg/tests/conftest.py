import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE = {}


class _Criterion:
    """Context manager that records one acceptance verdict.

    Set ``passed`` and ``detail`` inside the block; an exception records a
    failure with its message and propagates.
    """

    def __init__(self, number, title):
        self.number, self.title = number, title
        self.passed, self.detail = False, ""

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        if exc is not None and not self.detail:
            self.detail = f"{kind.__name__}: {exc}"
        ACCEPTANCE[self.number] = (self.title, bool(self.passed) and exc is None, self.detail)
        line = f"criterion {self.number:>2} {'PASS' if ACCEPTANCE[self.number][1] else 'FAIL'}: {self.title}"
        print(line + (f" ({self.detail})" if self.detail else ""))
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if passed else 'FAIL'}: {title}"
                                    + (f" ({detail})" if detail else ""))
