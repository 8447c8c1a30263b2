"""Acceptance criteria, one test each. The table of results is printed at the
end of the run (see ``conftest.py``); run with ``-s`` to also see each line as
it completes."""

import pytest

from bias_probe import acceptance

RESULTS: list = []

CHECKS = {
    1: acceptance.criterion_1,
    2: acceptance.criterion_2,
    3: acceptance.criterion_3,
    4: acceptance.criterion_4,
    5: acceptance.criterion_5,
    6: acceptance.criterion_6,
    7: acceptance.criterion_7,
    8: acceptance.criterion_8,
    9: acceptance.criterion_9,
    10: acceptance.criterion_10,
}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number):
    result = CHECKS[number]()
    RESULTS.append(result)
    print("\n" + result.line())
    if result.passed is None:
        pytest.skip(result.note)
    assert result.passed, f"{result.line()}\nmeasured: {result.measured}"
