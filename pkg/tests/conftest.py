import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hyperpattern.hypergraph import TemporalHypergraph  # noqa: E402


@pytest.fixture
def toy_graph():
    # anchor {0,1} at t=10; node 2 later joins both, then all three
    return TemporalHypergraph.from_edges([
        ((0, 3), 1.0), ((1, 3), 2.0), ((2, 4), 3.0), ((3, 4), 4.0),
        ((0, 1), 10.0), ((0, 2), 11.0), ((1, 2), 12.0), ((0, 1, 2), 13.0), ((4, 5), 20.0),
    ])


# criterion number -> (PASS | FAIL | SKIP, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.fixture
def criterion():
    def record(n: int, passed: bool | None, detail: str) -> None:
        ACCEPTANCE[n] = ("SKIP" if passed is None else "PASS" if passed else "FAIL", detail)
        print(f"criterion {n}: {ACCEPTANCE[n][0]} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}  {status:4s}  {detail}")
