import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quboplan import (
    BudgetError,
    InstanceError,
    MqoInstance,
    UnknownPlanError,
    brute_force_mqo,
    cost,
    generate_instance,
    validate_solution,
)

TOL = 1e-9


def exhaustive_optimum(instance):
    """Independent oracle: enumerate every valid selection with itertools."""
    best = None
    for combo in itertools.product(*(instance.plans_of[q] for q in instance.queries)):
        c = cost(instance, combo)
        if best is None or c < best[1] - TOL:
            best = (frozenset(combo), c)
    return best


class TestCost:
    def test_example_pair_with_savings(self, two_query_instance):
        assert cost(two_query_instance, {"p2", "p3"}) == pytest.approx(2.0, abs=TOL)

    def test_empty_selection_is_zero(self, two_query_instance):
        assert cost(two_query_instance, frozenset()) == 0.0

    def test_pair_without_savings(self, two_query_instance):
        assert cost(two_query_instance, {"p1", "p4"}) == pytest.approx(3.0, abs=TOL)

    def test_unknown_plan_names_the_id(self, two_query_instance):
        with pytest.raises(UnknownPlanError, match="p9"):
            cost(two_query_instance, {"p1", "p9"})

    def test_invalid_selection_still_costed(self, two_query_instance):
        # Both plans of q1 plus p3: 2 + 4 + 3 - 5 (only p2/p3 share).
        assert cost(two_query_instance, {"p1", "p2", "p3"}) == pytest.approx(4.0, abs=TOL)

    def test_savings_outside_selection_change_nothing(self, two_query_instance):
        base = cost(two_query_instance, {"p1", "p4"})
        richer = MqoInstance.of(
            {"q1": {"p1": 2.0, "p2": 4.0}, "q2": {"p3": 3.0, "p4": 1.0}},
            {("p2", "p3"): 5.0, ("p2", "p4"): 1.5},
        )
        assert cost(richer, {"p1", "p4"}) == pytest.approx(base, abs=TOL)

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=30, deadline=None)
    def test_order_invariance(self, seed):
        rng = np.random.default_rng(seed)
        instance = generate_instance(4, 3, 0.5, seed=seed)
        plans = list(instance.plans)
        picked = [p for p in plans if rng.random() < 0.5]
        reference = cost(instance, picked)
        # A hand-rolled evaluator iterating in reversed order.
        total = sum(instance.cost[p] for p in reversed(picked))
        sel = set(picked)
        for (a, b), v in reversed(sorted(instance.savings.items())):
            if a in sel and b in sel:
                total -= v
        assert total == pytest.approx(reference, abs=TOL)


class TestValidate:
    def test_example_optimum_is_valid(self, two_query_instance):
        report = validate_solution(two_query_instance, {"p2", "p3"})
        assert report.valid
        assert report.counts == {"q1": 1, "q2": 1}
        assert report.violations == ()

    def test_double_and_missing(self, two_query_instance):
        report = validate_solution(two_query_instance, {"p1", "p2"})
        assert not report.valid
        assert set(report.violations) == {"q1", "q2"}
        assert report.counts == {"q1": 2, "q2": 0}

    def test_empty_selection_violates_everything(self, two_query_instance):
        report = validate_solution(two_query_instance, frozenset())
        assert not report.valid
        assert set(report.violations) == {"q1", "q2"}


class TestBruteForce:
    def test_example_optimum(self, two_query_instance):
        selection, value = brute_force_mqo(two_query_instance)
        assert selection == frozenset({"p2", "p3"})
        assert value == pytest.approx(2.0, abs=TOL)

    def test_single_query_picks_cheapest(self):
        instance = MqoInstance.of({"q": {"a": 3.0, "b": 1.0}})
        assert brute_force_mqo(instance) == (frozenset({"b"}), 1.0)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_matches_independent_enumeration(self, seed):
        instance = generate_instance(3, 2, 0.6, seed=seed)
        selection, value = brute_force_mqo(instance)
        oracle_sel, oracle_val = exhaustive_optimum(instance)
        assert value == pytest.approx(oracle_val, abs=TOL)
        assert validate_solution(instance, selection).valid
        assert cost(instance, selection) == pytest.approx(oracle_val, abs=TOL)

    def test_optimum_not_beaten_by_any_valid_selection(self, two_query_instance):
        _sel, value = brute_force_mqo(two_query_instance)
        for combo in itertools.product(("p1", "p2"), ("p3", "p4")):
            assert value <= cost(two_query_instance, combo) + TOL

    def test_budget_error_states_count(self):
        instance = generate_instance(10, 3, 0.0, seed=0)
        with pytest.raises(BudgetError, match="59049"):
            brute_force_mqo(instance, budget=1000)

    def test_lexicographic_tie_break(self):
        instance = MqoInstance.of({"q": {"a": 1.0, "b": 1.0}})
        assert brute_force_mqo(instance)[0] == frozenset({"a"})


class TestGenerate:
    def test_same_seed_bit_identical(self):
        a = generate_instance(6, 3, 0.3, seed=99)
        b = generate_instance(6, 3, 0.3, seed=99)
        assert a.dumps() == b.dumps()

    def test_density_zero_means_no_savings(self):
        assert generate_instance(5, 2, 0.0, seed=1).savings == {}

    def test_paper_scale_plan_count(self):
        instance = generate_instance(537, 2, 0.0, seed=0)
        assert len(instance.plans) == 1074

    def test_each_query_is_its_own_cluster(self):
        instance = generate_instance(4, 2, 0.5, seed=2)
        assert instance.cluster_of == {q: q for q in instance.queries}

    def test_costs_and_savings_within_ranges(self):
        instance = generate_instance(5, 2, 1.0, (3.0, 4.0), (0.5, 0.75), seed=3)
        assert all(3.0 <= c <= 4.0 for c in instance.cost.values())
        assert instance.savings
        assert all(0.5 <= v <= 0.75 for v in instance.savings.values())

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(n_queries=0, plans_per_query=2, savings_density=0.5),
            dict(n_queries=2, plans_per_query=2, savings_density=1.5),
            dict(n_queries=2, plans_per_query=2, savings_density=0.5, cost_range=(5.0, 1.0)),
            dict(n_queries=2, plans_per_query=2, savings_density=0.5, savings_range=(0.0, 1.0)),
        ],
    )
    def test_rejects_bad_parameters(self, kwargs):
        with pytest.raises(ValueError):
            generate_instance(seed=0, **kwargs)


class TestInstanceInvariants:
    def test_intra_query_savings_rejected(self):
        with pytest.raises(InstanceError, match="q1"):
            MqoInstance.of({"q1": {"p1": 1.0, "p2": 2.0}}, {("p1", "p2"): 1.0})

    def test_nonpositive_savings_rejected(self, two_query_instance):
        with pytest.raises(InstanceError):
            MqoInstance.of(
                {"q1": {"p1": 1.0}, "q2": {"p2": 1.0}}, {("p1", "p2"): 0.0}
            )

    def test_negative_cost_rejected(self):
        with pytest.raises(InstanceError):
            MqoInstance.of({"q1": {"p1": -1.0}})

    def test_unknown_plan_in_savings_rejected(self):
        with pytest.raises(InstanceError, match="zz"):
            MqoInstance.of({"q1": {"p1": 1.0}, "q2": {"p2": 1.0}}, {("p1", "zz"): 1.0})

    def test_query_without_plans_rejected(self):
        with pytest.raises(InstanceError):
            MqoInstance.of({"q1": {}})

    def test_serialization_round_trip(self, two_query_instance):
        doc = two_query_instance.to_json_dict()
        again = MqoInstance.from_json_dict(doc)
        assert again == two_query_instance
        assert again.dumps() == two_query_instance.dumps()

    def test_clusters_default_on_load(self, tmp_path, two_query_instance):
        path = tmp_path / "inst.json"
        doc = two_query_instance.to_json_dict()
        del doc["clusters"]
        import json

        path.write_text(json.dumps(doc))
        loaded = MqoInstance.load(path)
        assert loaded.cluster_of == {"q1": "q1", "q2": "q2"}

    def test_combination_count(self, two_query_instance):
        assert two_query_instance.combination_count() == 4
        assert math.prod(
            len(two_query_instance.plans_of[q]) for q in two_query_instance.queries
        ) == 4
