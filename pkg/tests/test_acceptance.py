"""Full-size acceptance criteria; each test prints one pass/fail line."""

import os

import pytest

from lzero import acceptance

SUITE = acceptance.Suite.quick() if os.environ.get("LZERO_ACCEPTANCE") == "quick" else acceptance.Suite()


@pytest.fixture(scope="module")
def suite():
    return SUITE


@pytest.mark.slow
@pytest.mark.parametrize("number,criterion", list(enumerate(acceptance.CRITERIA, start=1)),
                         ids=[fn.__name__ for fn in acceptance.CRITERIA])
def test_criterion(number, criterion, suite, capsys):
    res = acceptance.run_criterion(criterion, suite)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.number == number
    assert res.passed, res.line()
