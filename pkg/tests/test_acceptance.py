"""The twelve acceptance criteria, each at its stated tolerance.

Every criterion prints a single [PASS]/[FAIL] line; the lines are also
collected into a summary section at the end of the pytest report.
"""
import pytest

from conftest import ACCEPTANCE_LINES
from smolkin import acceptance


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(acceptance.CHECKS), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number):
    result = acceptance.run(number)
    line = result.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert result.passed, line
