"""Shared scenario fixtures and the acceptance summary printer.

The full method sweep, the drive ramp and the balancing runs are computed
once per session and shared between the scenario tests and the acceptance
suite.
"""

import time

import pytest

from vdclink.config import default_config

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def comparison(cfg):
    from vdclink.sim import compare_methods

    t0 = time.perf_counter()
    cmp = compare_methods(cfg)
    cmp.runtime_s = time.perf_counter() - t0
    return cmp


@pytest.fixture(scope="session")
def drive_trace(cfg):
    from vdclink.sim import run_drive_scenario

    return run_drive_scenario(cfg)


@pytest.fixture(scope="session")
def balancing(cfg):
    from vdclink.sim import run_balancing_scenario

    return run_balancing_scenario(cfg, enabled=True), run_balancing_scenario(cfg, enabled=False)
