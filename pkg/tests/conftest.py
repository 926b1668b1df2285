import numpy as np
import pytest

from newton_atlas import Polynomial, construct
from newton_atlas.dynamics import Region

QUARTIC_C = 2 + 1j


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def quadratic():
    return construct([(1, 1), (-1, 1)])


def cubic():
    w = np.exp(2j * np.pi / 3)
    return construct([(1, 1), (w, 1), (w.conjugate(), 1)])


def parabolic_quadratic():
    # z^2/(1+z): p = z, q = z
    return construct([(0, 1)], Polynomial([0, 1]))


def quartic():
    # p = (z-1)(z+1), q = c z^2 / 2: two petals, two free critical points in each
    return construct([(1, 1), (-1, 1)], Polynomial([0, 0, QUARTIC_C / 2]))


QUARTIC_REGION = Region(0j, 8.0, 8.0)


def random_certificate(rng, k_max=5, m_max=3, n_max=4, sep=0.1):
    """Roots in the unit disk at mutual distance >= sep, q with coefficients in the unit disk."""
    while True:
        k = int(rng.integers(1, k_max + 1))
        n = int(rng.integers(0, n_max + 1))
        pts = []
        while len(pts) < k:
            z = complex(*rng.uniform(-1, 1, 2))
            if abs(z) < 1 and all(abs(z - w) >= sep for w in pts):
                pts.append(z)
        ms = [int(m) for m in rng.integers(1, m_max + 1, size=k)]
        qc = [0j]
        for _ in range(n):
            r, t = np.sqrt(rng.uniform(0.05, 1)), rng.uniform(0, 2 * np.pi)
            qc.append(r * np.exp(1j * t))
        if k + n >= 2:
            return list(zip(pts, ms)), Polynomial(qc)


# acceptance reporting: one PASS/FAIL line per criterion in the terminal summary

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when not in ("setup", "call"):
        return
    number, title = marker.args
    if report.when == "setup" and report.passed:
        return
    detail = getattr(item, "criterion_detail", "")
    if report.failed:
        msg = str(report.longrepr).strip().splitlines()[-1] if report.longrepr else ""
        detail = (detail + "; " if detail else "") + msg
    _CRITERIA[number] = (title, report.outcome, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome, detail = _CRITERIA[number]
        status = "PASS" if outcome == "passed" else "FAIL"
        line = f"criterion {number} {status}: {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach a short summary string to the running acceptance test."""

    def set_detail(text):
        request.node.criterion_detail = text

    return set_detail
