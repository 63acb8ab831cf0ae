from __future__ import annotations

import sys

import pytest

from chiral_magic.potential import build_u1, build_u2

# first magic angles at high truncation; used as fixed inputs
ALPHA_U2 = 0.8537985486521791
ALPHA_U1 = 0.5856635583895586
ALPHA_U1_CPLX = complex(0.9628424289, 0.9873408656)
THETA_TABLE = 2.808850897


@pytest.fixture(scope="session")
def u1():
    return build_u1()


@pytest.fixture(scope="session")
def u2():
    return build_u2()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
