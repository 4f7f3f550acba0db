import numpy as np
import pytest

from delay_esc.quadmap import benchmark_map


@pytest.fixture(scope="session")
def qmap():
    return benchmark_map()


@pytest.fixture(scope="session")
def H_bench():
    return -np.array([[2.0, 2.0], [2.0, 4.0]])


@pytest.fixture(scope="session")
def K_bench():
    return np.array([0.005, 0.005])


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one ``(id, passed, text)`` line per acceptance criterion."""
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, text in sorted(_ACCEPTANCE, key=lambda r: int(r[0])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {cid:>2}: {text}")
    passed = sum(ok for _, ok, _ in _ACCEPTANCE)
    terminalreporter.write_line(f"{passed}/{len(_ACCEPTANCE)} criteria passed")
