import math
import sys

import pytest

from payguard import backend


@pytest.fixture(params=backend.available())
def kernel_backend(request):
    """Run the test once per built kernel backend."""
    with backend.use(request.param):
        yield request.param


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one line per release criterion the acceptance module recorded."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria", sep="-")
    for criterion, ok, detail in sorted(results):
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"[criterion {criterion}] {verdict}: {detail}")


def assert_close(got, want, tol=1e-12, msg=""):
    assert math.isfinite(got), f"non-finite value {got} {msg}"
    assert abs(got - want) <= tol, f"{got} != {want} (tol {tol}) {msg}"


def assert_tensors_close(a, b, tol=1e-12):
    assert a.shape == b.shape, f"shape {a.shape} != {b.shape}"
    worst = max((abs(x - y) for x, y in zip(a.data, b.data)), default=0.0)
    assert worst <= tol, f"max elementwise diff {worst} > {tol}"


def rel_err(a, b, floor=1e-7):
    return abs(a - b) / max(abs(a), abs(b), floor)
