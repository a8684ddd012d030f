"""Cost model and budget-constrained allocation."""

import math

import numpy as np
import pytest

from scaling.budget import (Allocation, CostModel, allocate, budget_sweep, model_size_grid,
                            total_cost)
from scaling.errors import DomainError, InfeasibleBudgetError
from scaling.laws import PUBLISHED_LAWS, DataSize, JointLaw, ModelSize

ROBUSTNESS = PUBLISHED_LAWS["joint/standard/robustness"]
EFFECTIVENESS = PUBLISHED_LAWS["joint/standard/effectiveness"]

# one dollar-priced unit per parameter keeps the optimum away from both ends
UNIT_MODEL = CostModel(model_unit=1.0)


class TestCostModel:

    def test_defaults(self):
        cm = CostModel()
        assert cm.per_data == pytest.approx(0.6)
        assert cm.per_model == pytest.approx((3.22e-8 + 0.43) * 1e-6)

    def test_total_cost(self):
        cm = CostModel(z_data=2.0, z_train=1.0, z_infer=1.0, model_unit=1.0)
        assert total_cost(cm, 10, 5) == pytest.approx(30.0)
        assert total_cost(cm, ModelSize(10), DataSize(5)) == pytest.approx(30.0)

    def test_negative_size(self):
        with pytest.raises(DomainError):
            total_cost(CostModel(), -1, 5)

    @pytest.mark.parametrize("kwargs", [{"z_data": -0.1}, {"model_unit": 0.0},
                                        {"data_unit": -1.0}])
    def test_invalid_factors(self, kwargs):
        with pytest.raises(DomainError):
            CostModel(**kwargs)

    def test_from_config_ignores_unknown_keys(self):
        cm = CostModel.from_config({"z_data": "1.5", "currency": "USD"})
        assert cm.z_data == 1.5
        assert cm.z_infer == 0.43


class TestAllocate:

    @pytest.mark.parametrize("weight", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_within_budget(self, weight):
        allocation = allocate(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, weight)
        assert isinstance(allocation, Allocation)
        assert allocation.cost <= 5000
        assert allocation.cost == pytest.approx(
            total_cost(UNIT_MODEL, allocation.model_size, allocation.data_size))
        assert allocation.objective == pytest.approx(
            weight * allocation.predicted_robustness
            + (1 - weight) * allocation.predicted_effectiveness)

    def test_published_cost_model_within_budget(self):
        allocation = allocate(5000, ROBUSTNESS, EFFECTIVENESS, CostModel())
        assert allocation.cost <= 5000
        assert allocation.model_size.value >= 1
        assert allocation.data_size.value >= 1

    def test_matches_grid_oracle(self):
        """The allocation is at least as good as a dense 2-D feasible grid."""
        budget, weight = 5000.0, 0.5
        cm = UNIT_MODEL
        f = np.geomspace(1, (budget - cm.per_data) / cm.per_model, 2000)[:, None]
        d = np.geomspace(1, (budget - cm.per_model) / cm.per_data, 2000)[None, :]
        feasible = cm.per_model * f + cm.per_data * d <= budget
        objective = weight * ROBUSTNESS(f, d) + (1 - weight) * EFFECTIVENESS(f, d)
        oracle = float(np.min(np.where(feasible, objective, np.inf)))
        allocation = allocate(budget, ROBUSTNESS, EFFECTIVENESS, cm, weight)
        assert allocation.objective <= oracle * 1.001

    def test_robustness_prefers_smaller_models(self):
        robust = allocate(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, weight=1.0)
        effective = allocate(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, weight=0.0)
        assert robust.model_size.value < effective.model_size.value

    def test_flat_model_law_spends_everything_on_data(self):
        flat = JointLaw(1e3, 1e3, 1e-9, 1.0, 0.0)
        allocation = allocate(5000, flat, flat, UNIT_MODEL, weight=1.0)
        assert allocation.model_size.value == 1
        assert allocation.data_size.value == math.floor((5000 - 0.43) / 0.6)

    def test_deterministic(self):
        a = allocate(10000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, 0.3)
        b = allocate(10000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, 0.3)
        assert a == b

    def test_infeasible_budget(self):
        with pytest.raises(InfeasibleBudgetError):
            allocate(1.0, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL)

    def test_weight_out_of_range(self):
        with pytest.raises(DomainError):
            allocate(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, weight=1.5)

    def test_free_data_rejected(self):
        with pytest.raises(DomainError):
            allocate(5000, ROBUSTNESS, EFFECTIVENESS, CostModel(z_data=0.0))

    def test_to_dict(self):
        result = allocate(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL).to_dict()
        assert isinstance(result["model_size"], int)
        assert isinstance(result["data_size"], int)
        assert result["budget"] == 5000.0


class TestBudgetSweep:

    def test_grid_spans_feasible_sizes(self):
        grid = model_size_grid(5000, UNIT_MODEL, 50)
        assert grid[0] == pytest.approx(1.0)
        assert grid[-1] == pytest.approx((5000 - 0.6) / 0.43)
        assert np.all(np.diff(grid) > 0)

    def test_robustness_is_u_shaped(self):
        sweep = budget_sweep(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL)
        rob = np.array([p.predicted_robustness for p in sweep])
        signs = np.sign(np.diff(rob))
        assert np.count_nonzero(np.diff(signs) != 0) == 1
        assert 0 < int(np.argmin(rob)) < len(rob) - 1

    def test_spends_full_budget(self):
        for point in budget_sweep(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, grid=20):
            assert total_cost(UNIT_MODEL, point.model_size, point.data_size) \
                == pytest.approx(5000)

    def test_explicit_sizes_drop_infeasible(self):
        sweep = budget_sweep(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL,
                             model_sizes=[1, 100, 20000])
        assert [p.model_size for p in sweep] == [1.0, 100.0]

    def test_infeasible_budget(self):
        with pytest.raises(InfeasibleBudgetError):
            budget_sweep(0.5, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL)

    def test_grid_of_one(self):
        assert list(model_size_grid(5000, UNIT_MODEL, 1)) == [pytest.approx(1.0)]
        allocation = allocate(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, grid=1)
        assert allocation.model_size.value == 1
        assert allocation.data_size.value == math.floor(
            (5000 - UNIT_MODEL.per_model) / UNIT_MODEL.per_data)
        with pytest.raises(DomainError):
            model_size_grid(5000, UNIT_MODEL, 0)


class TestAllocationOptimality:

    @pytest.mark.parametrize("budget", [5000.0, 10000.0])
    def test_robust_optimum_at_smaller_model(self, budget):
        """
        Both losses are U-shaped along the budget line and robustness bottoms
        out at the smaller model. Holds with model_unit=1; at the published
        per-million pricing the two optima sit within a few percent of each other.
        """
        sweep = budget_sweep(budget, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL)
        sizes = np.array([p.model_size for p in sweep])
        rob = np.array([p.predicted_robustness for p in sweep])
        eff = np.array([p.predicted_effectiveness for p in sweep])
        for losses in (rob, eff):
            best = int(np.argmin(losses))
            assert 0 < best < len(losses) - 1
            assert np.all(np.diff(losses[:best + 1]) <= 0)
            assert np.all(np.diff(losses[best:]) >= 0)
        assert sizes[np.argmin(rob)] <= sizes[np.argmin(eff)]

    def test_matches_grid_oracle_at_larger_budget(self):
        budget, weight = 10000.0, 0.5
        cm = UNIT_MODEL
        f = np.geomspace(1, (budget - cm.per_data) / cm.per_model, 2000)[:, None]
        d = np.geomspace(1, (budget - cm.per_model) / cm.per_data, 2000)[None, :]
        feasible = cm.per_model * f + cm.per_data * d <= budget
        objective = weight * ROBUSTNESS(f, d) + (1 - weight) * EFFECTIVENESS(f, d)
        oracle = float(np.min(np.where(feasible, objective, np.inf)))
        allocation = allocate(budget, ROBUSTNESS, EFFECTIVENESS, cm, weight)
        assert allocation.objective <= oracle * 1.001

    @pytest.mark.parametrize("weight", [0.0, 0.5, 1.0])
    def test_more_budget_never_hurts(self, weight):
        objectives = [allocate(b, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, weight).objective
                      for b in (2000, 5000, 10000, 20000)]
        assert all(later <= earlier for earlier, later in zip(objectives, objectives[1:]))

    def test_larger_budget_sweep_dominates(self):
        sizes = np.geomspace(1, 11000, 50)
        small = budget_sweep(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, model_sizes=sizes)
        large = budget_sweep(10000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, model_sizes=sizes)
        assert len(small) == len(large) == 50
        for a, b in zip(small, large):
            assert a.model_size == b.model_size
            assert b.data_size > a.data_size
            assert b.predicted_robustness < a.predicted_robustness
            assert b.predicted_effectiveness < a.predicted_effectiveness

    @pytest.mark.parametrize("weight", [0.0, 0.5, 1.0])
    def test_agrees_with_sweep(self, weight):
        sweep = budget_sweep(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL)
        objectives = [weight * p.predicted_robustness + (1 - weight) * p.predicted_effectiveness
                      for p in sweep]
        best = int(np.argmin(objectives))
        allocation = allocate(5000, ROBUSTNESS, EFFECTIVENESS, UNIT_MODEL, weight)
        assert allocation.objective == pytest.approx(objectives[best], rel=1e-3)
        assert sweep[max(best - 1, 0)].model_size - 1 <= allocation.model_size.value \
            <= sweep[min(best + 1, len(sweep) - 1)].model_size + 1

    def test_random_laws_match_integer_enumeration(self):
        """With one dollar per unit of either size, every integer split is enumerable."""
        cm = CostModel(z_data=1.0, z_train=0.0, z_infer=1.0, model_unit=1.0)
        budget = 200.0
        rng = np.random.default_rng(0)
        model = np.arange(1, 200, dtype=np.float64)
        data = budget - model
        for _ in range(20):
            law = JointLaw(model_scale=float(rng.uniform(1, 50)),
                           data_scale=float(rng.uniform(1, 50)),
                           model_exponent=float(rng.uniform(0.3, 1.5)),
                           data_exponent=float(rng.uniform(0.3, 1.5)),
                           offset=float(rng.uniform(0, 1)))
            oracle = float(np.min(law(model, data)))
            allocation = allocate(budget, law, law, cm)
            assert allocation.cost <= budget
            assert allocation.objective == pytest.approx(oracle, rel=1e-9)
