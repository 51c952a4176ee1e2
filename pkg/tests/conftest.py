import pytest

from invsq import coeffs as cf
from invsq import propagators as pr


@pytest.fixture(scope="session")
def fs316():
    """sigma1 = 3/16, r0 = 1: zeta = t^{1/4}."""
    return cf.power_solution(cf.make_profile("power_law", 3 / 16, 1.0))


@pytest.fixture(scope="session")
def plan40(fs316):
    return pr.make_plan(fs316, 3, 0, 1 / 16, 40.0, 256)


@pytest.fixture(scope="session")
def plan40_free(fs316):
    return pr.make_plan(fs316, 3, 0, 0.0, 40.0, 256)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line per acceptance criterion; shown in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def report(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
