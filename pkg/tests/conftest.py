import time

import numpy as np
import pytest

from itqsl import make_state, normalize, validate_hermitian

SUITE_BUDGET_S = 60.0
_acceptance_lines: list[str] = []
_session_start = [0.0]


def record_criterion(label: str, passed: bool, detail: str = "") -> None:
    line = f"{'PASS' if passed else 'FAIL'}  {label}"
    if detail:
        line += f"  [{detail}]"
    _acceptance_lines.append(line)
    print(line)


def pytest_sessionstart(session):
    _session_start[0] = time.perf_counter()


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _session_start[0]
    ok = elapsed < SUITE_BUDGET_S
    # only meaningful for a full run that includes the acceptance module
    if _acceptance_lines:
        record_criterion("C10 full suite under 60 s", ok, f"{elapsed:.1f} s")
        if not ok and session.exitstatus == 0:
            session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    elapsed = time.perf_counter() - _session_start[0]
    if not any(line.split("  ")[1].startswith("C10") for line in _acceptance_lines):
        record_criterion("C10 full suite under 60 s", elapsed < SUITE_BUDGET_S, f"{elapsed:.1f} s")
    terminalreporter.section("acceptance criteria")
    for line in _acceptance_lines:
        terminalreporter.write_line(line)


def random_hermitian(rng, d, scale=1.0):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return validate_hermitian(scale * (a + a.conj().T) / 2)


def random_state(rng, d):
    return normalize(make_state(rng.normal(size=d) + 1j * rng.normal(size=d)))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
