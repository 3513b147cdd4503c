import os

from hypothesis import HealthCheck, settings

from dpverify.exactring import parse_ring
from dpverify.ideals import span

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def ideal(ring_text, *gens):
    R = parse_ring(ring_text)
    return span(R, [R(g) for g in gens])


# acceptance criteria report one line each at the end of the run
CRITERIA: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])
