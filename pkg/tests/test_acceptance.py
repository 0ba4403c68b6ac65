"""All acceptance criteria at their stated tolerances, one PASS/FAIL line each.

Lines are printed as each criterion finishes and again in the terminal summary.
Criterion 10 is the extended Monte Carlo run (about half an hour on one core).
"""
import pytest

from nonherm import verify

from conftest import ACCEPTANCE_LINES

SLOW = {6, 8, 10}


def _param(i):
    marks = [pytest.mark.slow] if i in SLOW else []
    return pytest.param(i, id=f"criterion_{i:02d}", marks=marks)


@pytest.mark.parametrize("cid", [_param(i) for i in sorted(verify.CRITERIA)])
def test_criterion(cid, capsys):
    result = verify.CRITERIA[cid](verify.DEFAULT_SEED)
    line = result.line() + (f" [{result.notes}]" if result.notes else "")
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert result.passed, line
