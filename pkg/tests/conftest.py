import math

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qwplab import PotentialSpec, UncertaintyState

settings.register_profile("qwplab", deadline=None, derandomize=True, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qwplab")


@st.composite
def states(draw, hbar=1.0):
    """Physical triples with U between hbar^2/4 and about 3 hbar^2."""
    dx2 = draw(st.floats(0.2, 3.0))
    excess = draw(st.floats(0.0, 10.0))
    dxp = draw(st.floats(-1.0, 1.0))
    U = 0.25 * hbar * hbar * (1.0 + excess)
    return UncertaintyState(dx2, (U + dxp * dxp) / dx2, dxp)


@st.composite
def potentials(draw, kind=None):
    kind = kind or draw(st.sampled_from(["linear", "harmonic", "inverted"]))
    m = draw(st.floats(1.0, 2.0))
    B = draw(st.floats(-2.0, 2.0))
    if kind == "linear":
        return PotentialSpec(0.0, B, 0.0, m)
    if kind == "harmonic":
        return PotentialSpec.harmonic(draw(st.floats(0.5, 2.0)), m, B)
    return PotentialSpec.inverted(draw(st.floats(0.05, 0.5)), m, B)


def close(a, b, tol):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


@pytest.fixture
def hbar():
    return 1.0


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(label, name, deviation, tol):
        passed = bool(deviation <= tol)
        line = (f"{'PASS' if passed else 'FAIL'}  [{label:>3s}] {name:<46s} "
                f"max_dev={deviation:.3e}  tol={tol:g}")
        lines[label] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for label in sorted(lines, key=lambda s: (int(s.rstrip("ab")), s)):
            terminalreporter.write_line(lines[label])
