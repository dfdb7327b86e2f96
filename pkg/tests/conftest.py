import pytest

from quboplan import MqoInstance


@pytest.fixture
def two_query_instance() -> MqoInstance:
    """Two queries, four plans (costs 2, 4, 3, 1), one savings pair worth 5.

    The optimal selection is {p2, p3} at cost 4 + 3 - 5 = 2.
    """
    return MqoInstance.of(
        {"q1": {"p1": 2.0, "p2": 4.0}, "q2": {"p3": 3.0, "p4": 1.0}},
        {("p2", "p3"): 5.0},
    )
