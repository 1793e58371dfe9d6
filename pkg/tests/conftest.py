import numpy as np
import pytest

from crw_qed.model import SystemParams


@pytest.fixture
def resonant():
    return SystemParams(omega_c=5.0, xi=1.0, Omega=5.0, J=1.5, n_sites=401)


@pytest.fixture
def detuned():
    return SystemParams(omega_c=5.0, xi=1.0, Omega=6.0, J=1.5, n_sites=401)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion, printed at the end of the run."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[number] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
