import pytest

from qdisk import EvaluationContext


@pytest.fixture
def ctx():
    return EvaluationContext("0.5")


@pytest.fixture
def ctx7():
    return EvaluationContext("0.7")
