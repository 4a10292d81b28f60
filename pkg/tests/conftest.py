import pytest
from hypothesis import HealthCheck, settings

from covertdns.tables import FAMILIES
from helpers import ACCEPTANCE_LINES, MODES, cached_session

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def family_series():
    """One 1000-domain session per family and mode; family i uses seed 11 + i."""
    return {(f, m): cached_session(f, m, 11 + i)[1] for i, f in enumerate(FAMILIES) for m in MODES}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
