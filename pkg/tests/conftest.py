import numpy as np
import pytest

from specdet import SpectralCube, accumulate_stats

# the canonical 3-pixel cube; every fixture value below is hand-computed
FIXTURE_PIXELS = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


@pytest.fixture
def fixture_cube():
    return SpectralCube.from_pixels(FIXTURE_PIXELS)


@pytest.fixture
def fixture_stats():
    return accumulate_stats(FIXTURE_PIXELS)


def random_spd(rng, n, low=0.1, high=10.0):
    """SPD matrix with eigenvalues uniform in [low, high]."""
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    a = q @ np.diag(rng.uniform(low, high, n)) @ q.T
    return (a + a.T) / 2


def random_moments(rng, n):
    """(m, R) with R = K + m m^T, K SPD, so that 1 - m^T R^-1 m > 0."""
    k = random_spd(rng, n)
    m = rng.normal(size=n)
    r = k + np.outer(m, m)
    return m, (r + r.T) / 2


# -- acceptance reporting --------------------------------------------------------

def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion")
    config._acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("acceptance")
    if m is None or report.when != "call":
        return
    number, title = m.args
    item.config._acceptance[number] = (title, report.passed)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config._acceptance
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, passed = results[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:>2}. {title}")
