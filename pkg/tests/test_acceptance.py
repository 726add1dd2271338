"""The acceptance gate: one test per criterion, at the stated tolerances.

The criteria share one session-scoped context so the underlying runs are
simulated once; each test prints its pass/fail line.
"""

import pytest

from frontlab.verify import CRITERIA, VerifyContext


@pytest.fixture(scope="session")
def ctx():
    return VerifyContext()


@pytest.mark.parametrize("criterion", CRITERIA,
                         ids=[f"criterion_{i + 1}" for i in range(len(CRITERIA))])
def test_criterion(criterion, ctx, capsys):
    result = criterion(ctx)
    line = (f"[{'PASS' if result.passed else 'FAIL'}] criterion {result.cid}: "
            f"{result.name} | {result.measured} | expected {result.expected}")
    with capsys.disabled():
        print(line)
    assert result.passed, line
