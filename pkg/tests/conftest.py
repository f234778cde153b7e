import numpy as np
import pytest

from scms.code import DegreeDistribution, TannerGraph, sample_irregular

DESK = "3:0.15,4:0.85;7:0.35,8:0.65"


@pytest.fixture(scope="session")
def desk_code() -> TannerGraph:
    """Rate-1/2 irregular code, N=2000, used by the Monte-Carlo checks."""
    return sample_irregular(DegreeDistribution.parse(DESK), 2000, 1)


@pytest.fixture(scope="session")
def small_code() -> TannerGraph:
    return sample_irregular(DegreeDistribution.regular(3, 6), 96, 5)


@pytest.fixture
def mixed_fixture() -> TannerGraph:
    """8 variables, 4 checks; variable degrees 1,2,2,2,2,3,2,1 and check degrees 4,4,3,4 (15 edges)."""
    H = np.array([
        [1, 1, 0, 0, 1, 1, 0, 0],
        [0, 1, 1, 0, 0, 1, 1, 0],
        [0, 0, 1, 1, 0, 0, 1, 0],
        [0, 0, 0, 1, 1, 1, 0, 1],
    ])
    return TannerGraph.from_matrix(H)


_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture(scope="session")
def acceptance_report():
    """``report(n, ok, detail)`` records one line for criterion ``n``."""

    def report(n: int, ok: bool, detail: str) -> bool:
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
        _ACCEPTANCE[n] = line
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
