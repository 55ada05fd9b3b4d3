"""The thirteen acceptance criteria, each at its stated tolerance.

One pass/fail line per criterion is printed in the terminal summary (and on
stdout with ``-s``). A red criterion fails its test; nothing is relaxed here.
"""

import pytest

from conftest import ACCEPTANCE_LINES
from lindjump.validation import CHECKS


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    res = CHECKS[number]()
    line = res.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.passed, line
