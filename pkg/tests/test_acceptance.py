"""Acceptance criteria 1-12 at full size.

Each criterion prints one ``[PASS]``/``[FAIL]`` line with its metric and
tolerance (run with ``-s`` to see them live; ``pytest -v`` shows the test id).
"""

import pytest

from exterior_ot.verify import CRITERIA, run_check

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=[CRITERIA[k][0] for k in sorted(CRITERIA)])
def test_criterion(number, capsys):
    name, fn = CRITERIA[number]
    result = run_check(name, fn, {}, seed=0)
    with capsys.disabled():
        print(f"\n{result.line()}")
    assert result.passed, result.as_dict()
