import time
from contextlib import contextmanager

import pytest

from ivri.orbit import find_stable_orbit

_RESULTS = {}


@pytest.fixture(scope="session")
def orbit15():
    """Limit cycle under constant input 15 at the default step."""
    return find_stable_orbit(15.0)


@pytest.fixture
def criterion():
    """Context manager recording the outcome, runtime and measured values of one acceptance criterion.

    Usage: ``with criterion(4, "orbit") as info: ...; info["period"] = p``.
    """

    @contextmanager
    def run(number, label):
        info = {}
        tic = time.perf_counter()
        try:
            yield info
        except BaseException as exc:
            reason = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
            _RESULTS[number] = ("FAIL", label, time.perf_counter() - tic, info, reason)
            print(_format(number, _RESULTS[number]))
            raise
        _RESULTS[number] = ("PASS", label, time.perf_counter() - tic, info, "")
        print(_format(number, _RESULTS[number]))

    return run


def _format(number, result):
    status, label, runtime, info, reason = result
    values = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in info.items())
    line = f"criterion {number:2d} {status}: {label} [{runtime:.2f}s] {values}"
    return line + (f" -- {reason}" if reason else "")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        terminalreporter.write_line(_format(number, _RESULTS[number]))
