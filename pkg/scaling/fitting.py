"""
Least-squares recovery of scaling-law coefficients from (size, loss)
observations.

Fits live in log space. For single-variable laws the irreducible offset is
profiled: every candidate offset turns the problem into a closed-form linear
regression of ln(loss - offset) on ln(size), and the offset maximizing R^2
is kept. Linear-space fitting gives different coefficients; log space
matches the log-linear form the laws are stated in.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from scaling.errors import DomainError, FitFailureError, InsufficientDataError, ScalingError
from scaling.laws import DataSize, JointLaw, ModelSize, PowerLaw, eval_joint_law

logger = logging.getLogger(__name__)

OFFSET_GRID_SIZE = 200
OFFSET_TOLERANCE = 1e-6
DEFAULT_OFFSET_FRACTION = 0.99

JOINT_MAX_ITER = 2000
JOINT_MAX_RESTARTS = 10
JOINT_REL_TOLERANCE = 1e-10

# Worse than any feasible 1 - R^2 (which is at most 1 for a least-squares line)
_INFEASIBLE = 2.0


@dataclass(frozen=True)
class FitPoint:
    """One observed (size, loss) pair"""

    size: float
    loss: float

    def __post_init__(self):
        if not (np.isfinite(self.size) and self.size > 0):
            raise DomainError(f"fit point size must be > 0, got {self.size}")
        if not (np.isfinite(self.loss) and self.loss > 0):
            raise DomainError(f"fit point loss must be > 0, got {self.loss}")


@dataclass(frozen=True)
class FitReport:
    law: Union[PowerLaw, JointLaw]
    r_squared: float
    residuals: Tuple[float, ...]
    # simplex iterations spent by a joint fit, summed over restarts
    iterations: int = 0


JointRecord = Tuple[Union[ModelSize, float], Union[DataSize, float], float]


def _arrays(points: Sequence[FitPoint]) -> Tuple[np.ndarray, np.ndarray]:
    sizes = np.array([p.size for p in points], dtype=np.float64)
    losses = np.array([p.loss for p in points], dtype=np.float64)
    return sizes, losses


def _log_linear(log_sizes: np.ndarray, losses: np.ndarray, offset: float):
    """Regress ln(loss - offset) on ln(size); None when the offset is infeasible"""
    if np.any(losses <= offset):
        return None
    y = np.log(losses - offset)
    slope, intercept = np.polyfit(log_sizes, y, 1)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if slope >= 0 or ss_tot == 0.0:
        return None
    ss_res = float(np.sum((y - (intercept + slope * log_sizes)) ** 2))
    return slope, intercept, ss_res / ss_tot


def _unexplained(offset: float, log_sizes: np.ndarray, losses: np.ndarray) -> float:
    fit = _log_linear(log_sizes, losses, offset)
    return _INFEASIBLE if fit is None else fit[2]


def fit_power_law(points: Sequence[FitPoint],
                  offset_bounds: Optional[Tuple[float, float]] = None) -> FitReport:
    """
    Fit L(x) = (scale / x) ** exponent + offset by log-space least squares

    Args:
        points: At least 3 observations with distinct sizes
        offset_bounds: (low, high) search range for the offset; defaults to
            (0, 0.99 * min observed loss)

    Returns:
        FitReport with the R^2-maximizing law and log-space residuals
    """
    if len(points) < 3:
        raise InsufficientDataError(f"need at least 3 points, got {len(points)}")
    sizes, losses = _arrays(points)
    if len(np.unique(sizes)) != len(sizes):
        raise InsufficientDataError("fit points must have distinct sizes")

    min_loss = float(losses.min())
    low, high = offset_bounds or (0.0, DEFAULT_OFFSET_FRACTION * min_loss)
    if not 0.0 <= low < min_loss or high < low:
        raise DomainError(
            f"offset bounds ({low}, {high}) must satisfy 0 <= low < min loss ({min_loss}) "
            f"and low <= high")

    log_sizes = np.log(sizes)
    grid = np.linspace(low, high, OFFSET_GRID_SIZE)
    scores = np.array([_unexplained(d, log_sizes, losses) for d in grid])
    best = int(np.argmin(scores))  # first minimum, i.e. smallest offset on ties
    if scores[best] >= _INFEASIBLE:
        raise FitFailureError("no feasible offset: losses do not decrease with size")

    offset = float(grid[best])
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, len(grid) - 1)]
    if hi > lo:
        refined = minimize_scalar(_unexplained, bounds=(lo, hi), method="bounded",
                                  args=(log_sizes, losses),
                                  options={"xatol": OFFSET_TOLERANCE})
        if refined.fun < scores[best]:
            offset = float(refined.x)

    slope, intercept, _ = _log_linear(log_sizes, losses, offset)
    exponent = -float(slope)
    law = PowerLaw(scale=float(np.exp(intercept / exponent)), exponent=exponent, offset=offset)
    residuals = np.log(losses - law.offset) - law.exponent * (np.log(law.scale) - log_sizes)
    r2 = r_squared(points, law)
    logger.info("Fitted power law scale=%.4g exponent=%.4f offset=%.4g (R^2=%.5f)",
                law.scale, law.exponent, law.offset, r2)
    return FitReport(law=law, r_squared=r2, residuals=tuple(float(r) for r in residuals))


def r_squared(points: Sequence[FitPoint], law: PowerLaw) -> float:
    """
    Coefficient of determination in log space, over ln(loss - offset)

    Returns -inf when the observations have no variance (a fit failure
    sentinel rather than an exception).
    """
    if len(points) < 2:
        raise InsufficientDataError(f"need at least 2 points, got {len(points)}")
    sizes, losses = _arrays(points)
    if np.any(losses <= law.offset):
        raise DomainError("every loss must exceed the law's offset")
    y = np.log(losses - law.offset)
    predicted = law.exponent * (np.log(law.scale) - np.log(sizes))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return float("-inf")
    ss_res = float(np.sum((y - predicted) ** 2))
    return 1.0 - ss_res / ss_tot


def points_from_law(law: PowerLaw, sizes: Iterable[float], noise: float = 0.0,
                    rng: Optional[np.random.Generator] = None) -> List[FitPoint]:
    """Synthesize observations, optionally with multiplicative Gaussian noise"""
    sizes = np.asarray(list(sizes), dtype=np.float64)
    losses = np.asarray(law(sizes), dtype=np.float64)
    if noise > 0:
        rng = rng if rng is not None else np.random.default_rng()
        losses = losses * (1.0 + noise * rng.standard_normal(losses.shape))
    return [FitPoint(float(s), float(l)) for s, l in zip(sizes, losses)]


def _marginal_init(sizes: np.ndarray, losses: np.ndarray,
                   fallback_scale: float) -> PowerLaw:
    order = np.argsort(sizes)
    points = [FitPoint(float(s), float(l)) for s, l in zip(sizes[order], losses[order])]
    try:
        return fit_power_law(points).law
    except ScalingError as e:
        logger.debug("Marginal initialization fell back to defaults: %s", e)
        return PowerLaw(scale=fallback_scale, exponent=0.5, offset=0.0)


def _joint_from_params(theta: np.ndarray) -> JointLaw:
    return JointLaw(
        model_scale=float(np.exp(theta[0])),
        data_scale=float(np.exp(theta[1])),
        model_exponent=float(np.exp(theta[2])),
        data_exponent=float(np.exp(theta[3])),
        offset=float(theta[4] ** 2),
    )


def fit_joint_law(records: Sequence[JointRecord]) -> FitReport:
    """
    Fit the five-coefficient data-model joint law

    Minimizes the sum of squared ln-loss residuals with Nelder-Mead simplex
    descent, started from single-variable fits on the largest-data and
    largest-model slices. Each descent runs at most JOINT_MAX_ITER
    iterations; a fresh simplex restarts from the best point, at most
    JOINT_MAX_RESTARTS times, until a restart improves the objective by less
    than 1e-10 relative.

    Args:
        records: (model size, data size, loss) triples; at least 6 spanning
            two or more model sizes and two or more data sizes

    Returns:
        FitReport whose law is a JointLaw
    """
    if len(records) < 6:
        raise InsufficientDataError(f"need at least 6 records, got {len(records)}")
    f = np.array([float(r[0]) for r in records], dtype=np.float64)
    d = np.array([float(r[1]) for r in records], dtype=np.float64)
    loss = np.array([float(r[2]) for r in records], dtype=np.float64)
    if np.any(f <= 0) or np.any(d <= 0) or np.any(loss <= 0):
        raise DomainError("joint records need positive sizes and losses")
    if len(np.unique(f)) < 2 or len(np.unique(d)) < 2:
        raise InsufficientDataError("joint fit needs at least 2 model sizes and 2 data sizes")

    at_max_data = d == d.max()
    at_max_model = f == f.max()
    model_init = _marginal_init(f[at_max_data], loss[at_max_data], float(np.exp(np.log(f).mean())))
    data_init = _marginal_init(d[at_max_model], loss[at_max_model], float(np.exp(np.log(d).mean())))
    offset0 = min(model_init.offset, data_init.offset, 0.5 * float(loss.min()))
    x = np.array([
        np.log(model_init.scale),
        np.log(data_init.scale),
        np.log(model_init.exponent),
        np.log(data_init.exponent),
        np.sqrt(offset0),
    ])

    log_loss = np.log(loss)

    def objective(theta: np.ndarray) -> float:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            law = _joint_from_params(theta)
            ratio = law.model_exponent / law.data_exponent
            inner = (law.model_scale / f) ** ratio + law.data_scale / d
            predicted = inner ** law.data_exponent + law.offset
            value = float(np.sum((log_loss - np.log(predicted)) ** 2))
        return value if np.isfinite(value) else np.inf

    steps = np.diag([0.3, 0.3, 0.1, 0.1, 0.05])
    best = objective(x)
    iterations = 0
    for restart in range(JOINT_MAX_RESTARTS):
        result = minimize(objective, x, method="Nelder-Mead", options={
            "maxiter": JOINT_MAX_ITER,
            "xatol": 1e-10,
            "fatol": JOINT_REL_TOLERANCE * max(best, 1e-300),
            "initial_simplex": np.vstack([x, x + steps]),
        })
        iterations += int(result.nit)
        previous = best
        if result.fun < best:
            best, x = float(result.fun), result.x
        logger.debug("Joint fit restart %d: objective %.6g", restart, best)
        if previous - best <= JOINT_REL_TOLERANCE * max(previous, 1e-300):
            break

    if not np.isfinite(best):
        raise FitFailureError("joint fit objective is not finite")
    law = _joint_from_params(x)
    residuals = log_loss - np.log(eval_joint_law(law, f, d))
    ss_tot = float(np.sum((log_loss - log_loss.mean()) ** 2))
    r2 = 1.0 - float(np.sum(residuals ** 2)) / ss_tot if ss_tot > 0 else float("-inf")
    logger.info("Fitted joint law %s (R^2=%.5f)", law.coefficients(), r2)
    return FitReport(law=law, r_squared=r2, residuals=tuple(float(r) for r in residuals),
                     iterations=iterations)
