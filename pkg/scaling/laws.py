"""
Scaling-law value types and closed-form loss predictions.

Losses are contrastive entropies in nats. Sizes are accepted as positive
reals (laws are continuous); ModelSize/DataSize are the integer forms used
when ingesting experiment records.
"""

import math
from dataclasses import dataclass
from typing import Dict, NamedTuple, NewType, Union

import numpy as np

from scaling.errors import DomainError


Loss = NewType("Loss", float)
"""Non-negative contrastive entropy, in nats"""

SizeLike = Union[float, int, np.ndarray, "ModelSize", "DataSize"]


def _checked_count(value, what: str) -> int:
    if isinstance(value, bool) or not math.isfinite(value) or value < 1 \
            or int(value) != value:
        raise DomainError(f"{what} must be an integer >= 1, got {value}")
    return int(value)


@dataclass(frozen=True)
class ModelSize:
    """Count of non-embedding parameters"""

    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", _checked_count(self.value, "model size"))

    def __float__(self) -> float:
        return float(self.value)


@dataclass(frozen=True)
class DataSize:
    """Count of annotated query-passage pairs"""

    value: int

    def __post_init__(self):
        object.__setattr__(self, "value", _checked_count(self.value, "data size"))

    def __float__(self) -> float:
        return float(self.value)


def _as_size_array(size: SizeLike) -> np.ndarray:
    if isinstance(size, (ModelSize, DataSize)):
        size = size.value
    arr = np.asarray(size, dtype=np.float64)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"sizes must be finite and positive, got {size}")
    return arr


def _unwrap(result: np.ndarray):
    return float(result) if np.ndim(result) == 0 else result


@dataclass(frozen=True)
class PowerLaw:
    """
    Single-variable law L(x) = (scale / x) ** exponent + offset

    Covers both the model-size form (scale=M, exponent=mu, offset=delta_f)
    and the data-size form (scale=D, exponent=eta, offset=delta_D).
    """

    scale: float
    exponent: float
    offset: float = 0.0

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"scale must be > 0, got {self.scale}")
        if not self.exponent > 0:
            raise DomainError(f"exponent must be > 0, got {self.exponent}")
        if not self.offset >= 0:
            raise DomainError(f"offset must be >= 0, got {self.offset}")

    def __call__(self, size: SizeLike):
        return eval_power_law(self, size)

    def reducible(self, size: SizeLike):
        """Loss above the irreducible offset"""
        x = _as_size_array(size)
        return _unwrap((self.scale / x) ** self.exponent)

    def coefficients(self) -> Dict[str, float]:
        return {"scale": self.scale, "exponent": self.exponent, "offset": self.offset}


@dataclass(frozen=True)
class JointLaw:
    """
    Data-model joint law

        L(f, D) = [ (M / f) ** (mu / eta) + D_scale / D ] ** eta + delta
    """

    model_scale: float
    data_scale: float
    model_exponent: float
    data_exponent: float
    offset: float = 0.0

    def __post_init__(self):
        for name in ("model_scale", "data_scale", "model_exponent", "data_exponent"):
            value = getattr(self, name)
            if not value > 0:
                raise DomainError(f"{name} must be > 0, got {value}")
        if not self.offset >= 0:
            raise DomainError(f"offset must be >= 0, got {self.offset}")

    def __call__(self, model: SizeLike, data: SizeLike):
        return eval_joint_law(self, model, data)

    def model_curve(self, model_sizes: SizeLike, data: SizeLike):
        """Loss along model size with data size held fixed"""
        return eval_joint_law(self, model_sizes, data)

    def data_curve(self, data_sizes: SizeLike, model: SizeLike):
        """Loss along data size with model size held fixed"""
        return eval_joint_law(self, model, data_sizes)

    def coefficients(self) -> Dict[str, float]:
        return {
            "model_scale": self.model_scale,
            "data_scale": self.data_scale,
            "model_exponent": self.model_exponent,
            "data_exponent": self.data_exponent,
            "offset": self.offset,
        }


def eval_power_law(law: PowerLaw, size: SizeLike):
    """
    Evaluate (scale / size) ** exponent + offset

    Args:
        law: Fitted or published power law
        size: Positive size (scalar or array)

    Returns:
        Predicted loss, a float for scalar input
    """
    x = _as_size_array(size)
    return _unwrap((law.scale / x) ** law.exponent + law.offset)


def eval_joint_law(law: JointLaw, model: SizeLike, data: SizeLike):
    """Evaluate the joint law; model and data broadcast against each other"""
    f = _as_size_array(model)
    d = _as_size_array(data)
    ratio = law.model_exponent / law.data_exponent
    inner = (law.model_scale / f) ** ratio + law.data_scale / d
    return _unwrap(inner ** law.data_exponent + law.offset)


def required_scale(law: PowerLaw, current_size: float,
                   improvement_fraction: float) -> float:
    """
    Size at which the reducible loss shrinks by improvement_fraction

    Solves (scale / x') ** exponent = (1 - p) * (scale / x) ** exponent,
    i.e. x' = x * (1 - p) ** (-1 / exponent).
    """
    if not 0.0 < improvement_fraction < 1.0:
        raise DomainError(
            f"improvement fraction must lie in (0, 1), got {improvement_fraction}")
    _as_size_array(current_size)
    if not law.reducible(current_size) > 0:
        raise DomainError("current loss is already at the irreducible offset")
    return float(current_size) * (1.0 - improvement_fraction) ** (-1.0 / law.exponent)


class ScaleRequirement(NamedTuple):
    effectiveness_size: float
    robustness_size: float
    required_size: float
    effectiveness_factor: float
    robustness_factor: float


def required_scales(effectiveness_law: PowerLaw, robustness_law: PowerLaw,
                    current_size: float, improvement_fraction: float) -> ScaleRequirement:
    """Size needed to improve both aspects by the same fraction"""
    eff = required_scale(effectiveness_law, current_size, improvement_fraction)
    rob = required_scale(robustness_law, current_size, improvement_fraction)
    return ScaleRequirement(
        effectiveness_size=eff,
        robustness_size=rob,
        required_size=max(eff, rob),
        effectiveness_factor=eff / float(current_size),
        robustness_factor=rob / float(current_size),
    )


# Published coefficient rows, keyed variable/setting/aspect
PUBLISHED_LAWS: Dict[str, Union[PowerLaw, JointLaw]] = {
    "model/msmarco/ood": PowerLaw(3.70e4, 0.55, 0.05),
    "model/msmarco/effectiveness": PowerLaw(3.48e4, 0.55, 0.05),
    "model/t2ranking/robustness": PowerLaw(4.23e6, 0.46, 0.96),
    "model/t2ranking/effectiveness": PowerLaw(1.12e7, 0.48, 0.07),
    "data/msmarco/ood": PowerLaw(4.34e3, 0.83, 0.08),
    "data/msmarco/effectiveness": PowerLaw(3.71e3, 1.11, 0.05),
    "data/t2ranking/robustness": PowerLaw(1.93e5, 0.51, 0.12),
    "data/t2ranking/effectiveness": PowerLaw(5.41e4, 0.52, 0.19),
    "model/adversarial/adversarial": PowerLaw(6.94e5, 1.14, 0.22),
    "model/adversarial/effectiveness": PowerLaw(8.34e5, 0.87, 0.38),
    "data/adversarial/adversarial": PowerLaw(2.81e3, 0.80, 0.07),
    "data/adversarial/effectiveness": PowerLaw(3.74e3, 0.87, 0.28),
    "joint/standard/robustness": JointLaw(2.11e3, 2.99e3, 0.10, 0.78, 0.01),
    "joint/standard/effectiveness": JointLaw(3.47e4, 2.14e3, 0.38, 1.10, 0.04),
    "joint/pareto/robustness": JointLaw(1.96e4, 2.57e3, 0.25, 0.80, 0.02),
    "joint/pareto/effectiveness": JointLaw(8.34e5, 2.17e3, 0.57, 1.38, 0.03),
}
