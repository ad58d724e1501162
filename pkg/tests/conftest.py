import random

import pytest

from graphfield.polyfields import Grading, random_polyfield


@pytest.fixture
def rng():
    return random.Random(12345)


def random_fields(rng, d, count, psi_max=2, x_max=2, terms=3, grading=None):
    g = grading or Grading.even(d)
    return [random_polyfield(rng, g, rng.randint(0, psi_max), x_max, terms) for _ in range(count)]


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k, (ok, detail) in sorted(results.items()):
        if k:
            terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    if 0 in results:
        terminalreporter.write_line(results[0][1])
