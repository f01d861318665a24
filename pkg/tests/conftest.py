import pytest

from qcdma.wavepacket import FrequencyGrid, gaussian_spectral


@pytest.fixture(scope="session")
def grid():
    return FrequencyGrid()


@pytest.fixture(scope="session")
def small_grid():
    return FrequencyGrid(n_samples=1024)


@pytest.fixture(scope="session")
def gauss(grid):
    return gaussian_spectral(grid)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, name, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}")
