import os

# the thread-independence checks need more than one numba worker even on a
# single-core box; this has to happen before numba is first imported
os.environ.setdefault("NUMBA_NUM_THREADS", "4")

import pytest  # noqa: E402

from chowrobbins.engine import EngineConfig, run_certifier  # noqa: E402


@pytest.fixture(scope="session")
def small_run():
    """d <= 40 certified from a short horizon, every code with |d| <= 45, n <= 4000 kept."""
    return run_certifier(EngineConfig(d_max=40, horizon=8000, band_below=64,
                                      report_d=45, report_n=4000))


def pytest_configure(config):
    config.acceptance_lines = {}


@pytest.fixture
def verdict(request, capsys):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""

    def report(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        request.config.acceptance_lines[number] = line
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.acceptance_lines
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
