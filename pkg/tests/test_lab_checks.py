import pytest

from LD_Algebra_Lab.lab_checks import (FAILED, PASSED, QUICK, CheckContext, CheckResult, check_braids,
                                       check_cancellation, check_order, expanded_once, run_check)
from LD_Algebra_Lab.lab_config import Config
from LD_Algebra_Lab.term_utils import X, parse_term


@pytest.fixture
def context(tables, cache_dir):
    return CheckContext(tables, Config(cache_dir=str(cache_dir), max_k=10).validate(), QUICK)


class TestOrderChecks:
    def test_open_cases_fail_the_order_check(self, tables, cache_dir):
        starved = CheckContext(tables, Config(cache_dir=str(cache_dir), fuel=1, max_k=10).validate(), QUICK)
        result = CheckResult("order")
        check_order(starved, result)
        assert result.status == FAILED
        assert any("left undecided" in message for message in result.failures)

    def test_order(self, context):
        result = run_check("order", context)
        assert not result.failures, result.failures
        assert result.checked > 0

    def test_cancellation(self, context):
        result = CheckResult("cancellation")
        check_cancellation(context, result)
        assert result.status == PASSED, result.failures
        assert result.checked == QUICK.cancellation_triples

    def test_braids(self, context):
        result = CheckResult("braids")
        check_braids(context, result)
        assert not result.failures, result.failures

    def test_expanded_once(self):
        assert expanded_once(X) == X
        assert expanded_once(parse_term("x(xx)")) == parse_term("(xx)(xx)")
