import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def naive_bspline(kv, i, p, x):
    """Textbook recursive B-spline value (right-continuous, closed at x=1)."""
    if p == 0:
        if kv[i] <= x < kv[i + 1]:
            return 1.0
        # the last non-empty span owns the right end point
        if x == kv[-1] and kv[i] < kv[i + 1] == kv[-1]:
            return 1.0
        return 0.0
    out = 0.0
    if kv[i + p] > kv[i]:
        out += (x - kv[i]) / (kv[i + p] - kv[i]) * naive_bspline(kv, i, p - 1, x)
    if kv[i + p + 1] > kv[i + 1]:
        out += (kv[i + p + 1] - x) / (kv[i + p + 1] - kv[i + 1]) * naive_bspline(kv, i + 1, p - 1, x)
    return out


def naive_bspline_deriv(kv, i, p, x, d):
    """d-th derivative via the recursive difference formula."""
    if d == 0:
        return naive_bspline(kv, i, p, x)
    out = 0.0
    if kv[i + p] > kv[i]:
        out += p / (kv[i + p] - kv[i]) * naive_bspline_deriv(kv, i, p - 1, x, d - 1)
    if kv[i + p + 1] > kv[i + 1]:
        out -= p / (kv[i + p + 1] - kv[i + 1]) * naive_bspline_deriv(kv, i + 1, p - 1, x, d - 1)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion."""
    def _report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
