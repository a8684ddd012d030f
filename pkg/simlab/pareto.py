#!/usr/bin/env python3
"""
Dynamic robustness weight for Pareto training

The combined loss is omega * l_R + (1 - omega) * l_E. After each step omega
moves against the gap between the observed loss ratio l_E / l_R and its
target 1 / omega0, and is clamped into [0, 1].
"""

import logging
from typing import List, Optional

import numpy as np

from scaling.errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_WEIGHT_LR = 0.1


def pareto_weight_update(omega: float, l_E: float, l_R: float,
                         omega0_target: float, lr: float = DEFAULT_WEIGHT_LR) -> float:
    """
    One weight update: clamp(omega - lr * (l_E / l_R - 1 / omega0_target), 0, 1)

    Args:
        omega: Current robustness weight in [0, 1]
        l_E: Effectiveness loss
        l_R: Robustness loss, > 0
        omega0_target: Target robustness/effectiveness ratio, > 0
        lr: Weight learning rate

    Returns:
        Updated weight in [0, 1]
    """
    if not 0.0 <= omega <= 1.0:
        raise DomainError(f"omega must lie in [0, 1], got {omega}")
    if not l_R > 0:
        raise DomainError(f"robustness loss must be > 0, got {l_R}")
    if not omega0_target > 0:
        raise DomainError(f"omega0 target must be > 0, got {omega0_target}")
    if not lr > 0:
        raise DomainError(f"lr must be > 0, got {lr}")
    return float(np.clip(omega - lr * (l_E / l_R - 1.0 / omega0_target), 0.0, 1.0))


class ParetoWeighting:
    """
    Stateful weight schedule for one training run

    Args:
        omega0: Initial weight
        target: Ratio whose inverse is the fixed point of l_E / l_R;
            defaults to omega0
        lr: Weight learning rate
        ema: Optional smoothing factor applied to both losses before each
            update; None uses the instantaneous batch losses
    """

    def __init__(self, omega0: float, target: Optional[float] = None,
                 lr: float = DEFAULT_WEIGHT_LR, ema: Optional[float] = None):
        if not 0.0 <= omega0 <= 1.0:
            raise DomainError(f"omega0 must lie in [0, 1], got {omega0}")
        if ema is not None and not 0.0 <= ema < 1.0:
            raise DomainError(f"ema must lie in [0, 1), got {ema}")
        self.omega = float(omega0)
        self.target = float(target if target is not None else omega0)
        self.lr = lr
        self.ema = ema
        self.trajectory: List[float] = [self.omega]
        self._smoothed: Optional[tuple] = None

    def combine(self, l_E: float, l_R: float) -> float:
        return self.omega * l_R + (1.0 - self.omega) * l_E

    def update(self, l_E: float, l_R: float) -> float:
        if self.ema is not None:
            if self._smoothed is None:
                self._smoothed = (l_E, l_R)
            else:
                b = self.ema
                self._smoothed = (b * self._smoothed[0] + (1 - b) * l_E,
                                  b * self._smoothed[1] + (1 - b) * l_R)
            l_E, l_R = self._smoothed
        self.omega = pareto_weight_update(self.omega, l_E, l_R, self.target, self.lr)
        self.trajectory.append(self.omega)
        return self.omega
