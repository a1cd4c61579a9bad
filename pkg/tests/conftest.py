"""Shared fixtures and the acceptance summary printed after the run."""

import numpy as np
import pytest

from epidiff import instances as inst

# (number, title, passed, detail) appended by tests/test_acceptance.py
ACCEPTANCE: list = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def gscad():
    """Group SCAD on two pairs with q = 2, lam = 1, a = 3."""
    return inst.group_scad([(0, 1), (2, 3)], 2.0, 1.0, 3.0)


@pytest.fixture(scope="session")
def soc():
    return inst.qcone_indicator(3, 2.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(f"[{num:>2}] {'PASS' if passed else 'FAIL'}  {title}: {detail}")
