#!/usr/bin/env python3
"""
Pareto-frontier analysis over (robustness CE, effectiveness CE) points.

Both coordinates are losses: lower is better. A point dominates another when
it is no worse on both coordinates and strictly better on at least one.
"""

import logging
from dataclasses import dataclass
from typing import Iterator, List, NamedTuple, Sequence, Tuple

import numpy as np

from scaling.errors import DegenerateRangeError, DomainError

logger = logging.getLogger(__name__)

OMEGA0_EPSILON = 0.01


@dataclass(frozen=True)
class PerfPoint:
    robustness: float
    effectiveness: float
    label: str = ""

    def __post_init__(self):
        for name in ("robustness", "effectiveness"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} loss must be finite and > 0, got {value}")

    def dominates(self, other: "PerfPoint") -> bool:
        return (self.robustness <= other.robustness
                and self.effectiveness <= other.effectiveness
                and (self.robustness < other.robustness
                     or self.effectiveness < other.effectiveness))


@dataclass(frozen=True)
class Frontier:
    """Non-dominated points, ascending in effectiveness loss"""

    points: Tuple[PerfPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if not self.points:
            raise DomainError("a frontier holds at least one point")
        for a, b in zip(self.points, self.points[1:]):
            if not (a.effectiveness < b.effectiveness and a.robustness > b.robustness):
                raise DomainError(f"frontier points out of order: {a.label!r}, {b.label!r}")

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[PerfPoint]:
        return iter(self.points)

    @property
    def labels(self) -> List[str]:
        return [p.label for p in self.points]


class Omega0Estimate(NamedTuple):
    omega0: float
    ratio: float
    knee: PerfPoint


class NormalizedPoint(NamedTuple):
    x: float
    y: float
    label: str


def _frontier_indices(points: Sequence[PerfPoint]) -> List[int]:
    order = sorted(range(len(points)),
                   key=lambda i: (points[i].effectiveness, points[i].robustness, i))
    kept: List[int] = []
    best_robustness = np.inf
    for i in order:
        # strictly lower robustness than everything with lower-or-equal effectiveness
        if points[i].robustness < best_robustness:
            kept.append(i)
            best_robustness = points[i].robustness
    return kept


def extract_non_dominated(points: Sequence[PerfPoint]) -> Frontier:
    """
    Points not dominated by any other input point

    Sort by effectiveness loss then sweep, keeping a point only if its
    robustness loss beats every point before it. O(n log n). Exact
    duplicates keep the first by input order.
    """
    if not points:
        raise DomainError("cannot extract a frontier from no points")
    frontier = Frontier(tuple(points[i] for i in _frontier_indices(points)))
    logger.debug("Frontier keeps %d of %d points", len(frontier), len(points))
    return frontier


def nondominated_fronts(points: Sequence[PerfPoint]) -> List[List[int]]:
    """
    Non-dominated sorting into ranked fronts of input indices

    Front 0 is the frontier; front k holds the points dominated only by
    points in earlier fronts. Exact duplicates share a front.
    """
    if not points:
        return []
    values = np.array([(p.robustness, p.effectiveness) for p in points])
    le = np.all(values[:, None, :] <= values[None, :, :], axis=2)
    lt = np.any(values[:, None, :] < values[None, :, :], axis=2)
    dominated_by = le & lt  # [i, j]: i dominates j
    counts = dominated_by.sum(axis=0)
    fronts: List[List[int]] = []
    current = [int(i) for i in np.flatnonzero(counts == 0)]
    while current:
        fronts.append(current)
        for i in current:
            counts = counts - dominated_by[i]
        counts[current] = -1
        current = [int(i) for i in np.flatnonzero(counts == 0)]
    return fronts


def knee_point(frontier: Frontier) -> PerfPoint:
    """
    Frontier point farthest from the chord joining its endpoints

    Distances are measured after min-max normalizing both coordinates over
    the frontier. Ties go to the lower robustness loss.
    """
    points = frontier.points
    if len(points) == 1:
        return points[0]
    xy = np.array([(p.robustness, p.effectiveness) for p in points])
    xy = (xy - xy.min(axis=0)) / (xy.max(axis=0) - xy.min(axis=0))
    start, end = xy[0], xy[-1]
    chord = end - start
    offsets = xy - start
    distances = np.abs(chord[0] * offsets[:, 1] - chord[1] * offsets[:, 0]) / np.hypot(*chord)
    candidates = np.flatnonzero(np.isclose(distances, distances.max(), rtol=0.0, atol=1e-12))
    return min((points[i] for i in candidates), key=lambda p: p.robustness)


def estimate_omega0(frontier: Frontier) -> Omega0Estimate:
    """
    Initial robustness weight from the knee's robustness/effectiveness ratio

    The ratio is clamped into [0.01, 0.99] for use as a weight; the
    unclamped ratio is kept as the weight-update target.
    """
    knee = knee_point(frontier)
    ratio = knee.robustness / knee.effectiveness
    omega0 = float(np.clip(ratio, OMEGA0_EPSILON, 1.0 - OMEGA0_EPSILON))
    logger.info("Knee '%s' (R=%.4f, E=%.4f): omega0=%.3f (ratio %.4f)",
                knee.label, knee.robustness, knee.effectiveness, omega0, ratio)
    return Omega0Estimate(omega0=omega0, ratio=ratio, knee=knee)


def inverse_normalize_values(values: Sequence[float]) -> np.ndarray:
    """Map v -> (max - v) / (max - min), so the lowest loss scores 1"""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < 2:
        raise DegenerateRangeError("inverse normalization needs at least 2 values")
    low, high = float(arr.min()), float(arr.max())
    if high == low:
        raise DegenerateRangeError(f"all values equal {low}; range is zero")
    return (high - arr) / (high - low)


def inverse_normalize(points: Sequence[PerfPoint]) -> List[NormalizedPoint]:
    """
    Plot-space scores in [0, 1]: x from robustness, y from effectiveness

    Output order matches input order.
    """
    xs = inverse_normalize_values([p.robustness for p in points])
    ys = inverse_normalize_values([p.effectiveness for p in points])
    return [NormalizedPoint(float(x), float(y), p.label) for x, y, p in zip(xs, ys, points)]
