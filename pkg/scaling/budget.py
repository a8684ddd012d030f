"""
Dollar cost model and budget-constrained (model size, data size) allocation.

Cost is linear: z_data per data unit plus (z_train + z_infer) per model unit.
Both joint laws decrease in data size, so for a given model size the best
use of the remaining budget is to spend all of it on data; allocation is
therefore a 1-D search over model size.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

from scaling.errors import DomainError, InfeasibleBudgetError
from scaling.laws import DataSize, JointLaw, ModelSize, eval_joint_law

logger = logging.getLogger(__name__)

DEFAULT_GRID = 400


@dataclass(frozen=True)
class CostModel:
    """
    Cost factors in dollars. Defaults are the published factors; the unit
    multipliers convert raw sizes into the units those factors are quoted in
    (one query-passage pair, one million parameters).
    """

    z_data: float = 0.6
    z_train: float = 3.22e-8
    z_infer: float = 0.43
    data_unit: float = 1.0
    model_unit: float = 1e-6

    def __post_init__(self):
        for name in ("z_data", "z_train", "z_infer"):
            if not getattr(self, name) >= 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)}")
        for name in ("data_unit", "model_unit"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "CostModel":
        """Create a cost model from a configuration mapping"""
        names = cls.__dataclass_fields__.keys()
        return cls(**{k: float(v) for k, v in config.items() if k in names})

    @property
    def per_data(self) -> float:
        """Dollars per raw data item"""
        return self.z_data * self.data_unit

    @property
    def per_model(self) -> float:
        """Dollars per raw parameter"""
        return (self.z_train + self.z_infer) * self.model_unit


Size = Union[ModelSize, DataSize, float, int]


def _raw(size: Size) -> float:
    value = float(size.value) if isinstance(size, (ModelSize, DataSize)) else float(size)
    if not value >= 0:
        raise DomainError(f"sizes must be >= 0, got {value}")
    return value


def total_cost(cm: CostModel, model: Size, data: Size) -> float:
    """Dollars to prepare data, train and serve a model of the given sizes"""
    return cm.per_data * _raw(data) + cm.per_model * _raw(model)


@dataclass(frozen=True)
class Allocation:
    model_size: ModelSize
    data_size: DataSize
    cost: float
    predicted_robustness: float
    predicted_effectiveness: float
    objective: float
    budget: float
    weight: float

    def to_dict(self) -> Dict[str, Any]:
        result = asdict(self)
        result["model_size"] = self.model_size.value
        result["data_size"] = self.data_size.value
        return result


class SweepPoint(NamedTuple):
    model_size: float
    data_size: float
    predicted_robustness: float
    predicted_effectiveness: float


def _check_budget(budget: float, cm: CostModel) -> float:
    if cm.per_data <= 0 or cm.per_model <= 0:
        raise DomainError("cost model must put a positive price on both data and model size")
    floor_cost = total_cost(cm, 1, 1)
    if not budget > floor_cost:
        raise InfeasibleBudgetError(
            f"budget ${budget:,.2f} does not exceed the minimum cost ${floor_cost:,.6f}")
    # largest model that still leaves one data unit
    return (budget - cm.per_data) / cm.per_model


def model_size_grid(budget: float, cm: CostModel, grid: int = DEFAULT_GRID) -> np.ndarray:
    """Log-spaced model sizes from 1 to the largest feasible size"""
    if grid < 1:
        raise DomainError(f"grid must have at least one point, got {grid}")
    f_max = _check_budget(budget, cm)
    return np.exp(np.linspace(0.0, math.log(f_max), grid))


def _data_for(budget: float, cm: CostModel, model: np.ndarray) -> np.ndarray:
    return (budget - cm.per_model * model) / cm.per_data


def _integer_data(budget: float, cm: CostModel, model: int) -> int:
    data = math.floor(float(_data_for(budget, cm, model)))
    while data >= 1 and total_cost(cm, model, data) > budget:
        data -= 1
    return data


def _best_integer_point(budget: float, cm: CostModel, model: float,
                        objective_at: Callable[[int, int], float]) -> Tuple[int, int]:
    """Best of the floor and ceiling of a continuous model size, data filling the rest"""
    best = None
    for candidate in sorted({max(1, math.floor(model)), max(1, math.ceil(model))}):
        data = _integer_data(budget, cm, candidate)
        if data < 1:
            continue
        value = objective_at(candidate, data)
        key = (math.inf if math.isnan(value) else value, candidate)
        if best is None or key < best[0]:
            best = (key, candidate, data)
    if best is None:
        # budget exceeds the cost of (1, 1), so one parameter always fits
        return 1, max(1, _integer_data(budget, cm, 1))
    return best[1], best[2]


def allocate(budget: float, robustness_law: JointLaw, effectiveness_law: JointLaw,
             cm: CostModel, weight: float = 0.5, grid: int = DEFAULT_GRID) -> Allocation:
    """
    Choose the feasible (model, data) minimizing
    weight * robustness + (1 - weight) * effectiveness

    Args:
        budget: Dollars available
        robustness_law: Joint law predicting robustness CE
        effectiveness_law: Joint law predicting effectiveness CE
        cm: Cost model
        weight: Robustness weight in [0, 1]
        grid: Number of log-spaced model sizes scanned before refinement

    Returns:
        Allocation with integer sizes whose cost does not exceed the budget
    """
    if not 0.0 <= weight <= 1.0:
        raise DomainError(f"weight must lie in [0, 1], got {weight}")
    log_f = np.log(model_size_grid(budget, cm, grid))

    def objective(log_model):
        model = np.exp(log_model)
        data = _data_for(budget, cm, model)
        return (weight * eval_joint_law(robustness_law, model, data)
                + (1.0 - weight) * eval_joint_law(effectiveness_law, model, data))

    values = np.asarray(objective(log_f), dtype=np.float64)
    values = np.where(np.isnan(values), np.inf, values)
    best = int(np.argmin(values))  # lowest index wins ties
    best_log_f, best_value = float(log_f[best]), float(values[best])
    lo, hi = log_f[max(best - 1, 0)], log_f[min(best + 1, len(log_f) - 1)]
    if hi > lo:
        refined = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-9})
        if refined.fun < best_value:
            best_log_f = float(refined.x)

    def objective_at(model: int, data: int) -> float:
        return float(weight * eval_joint_law(robustness_law, model, data)
                     + (1.0 - weight) * eval_joint_law(effectiveness_law, model, data))

    model, data = _best_integer_point(budget, cm, math.exp(best_log_f), objective_at)
    rob = float(eval_joint_law(robustness_law, model, data))
    eff = float(eval_joint_law(effectiveness_law, model, data))
    allocation = Allocation(
        model_size=ModelSize(model),
        data_size=DataSize(data),
        cost=total_cost(cm, model, data),
        predicted_robustness=rob,
        predicted_effectiveness=eff,
        objective=weight * rob + (1.0 - weight) * eff,
        budget=float(budget),
        weight=float(weight),
    )
    logger.info("✓ Allocated model=%d data=%d cost=$%.2f objective=%.5f",
                model, data, allocation.cost, allocation.objective)
    return allocation


def budget_sweep(budget: float, robustness_law: JointLaw, effectiveness_law: JointLaw,
                 cm: CostModel, grid: int = DEFAULT_GRID,
                 model_sizes: Optional[Sequence[float]] = None) -> List[SweepPoint]:
    """
    Predicted losses along model size when the rest of the budget buys data

    Args:
        budget: Dollars available
        robustness_law: Joint law predicting robustness CE
        effectiveness_law: Joint law predicting effectiveness CE
        cm: Cost model
        grid: Number of log-spaced model sizes (ignored if model_sizes given)
        model_sizes: Explicit model sizes to evaluate

    Returns:
        One SweepPoint per model size that leaves at least one data unit
    """
    if model_sizes is None:
        sizes = model_size_grid(budget, cm, grid)
    else:
        _check_budget(budget, cm)
        sizes = np.asarray(model_sizes, dtype=np.float64)
    data = _data_for(budget, cm, sizes)
    feasible = (sizes >= 1) & (data >= 1)
    sizes, data = sizes[feasible], data[feasible]
    if len(sizes) == 0:
        return []
    rob = np.atleast_1d(eval_joint_law(robustness_law, sizes, data))
    eff = np.atleast_1d(eval_joint_law(effectiveness_law, sizes, data))
    return [SweepPoint(float(f), float(d), float(r), float(e))
            for f, d, r, e in zip(sizes, data, rob, eff)]
