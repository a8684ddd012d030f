"""
Scaling laws for retrieval robustness and effectiveness: closed-form laws,
least-squares fitting and budget-constrained allocation.
"""

from scaling.budget import Allocation, CostModel, allocate, budget_sweep, total_cost
from scaling.errors import (DegenerateRangeError, DomainError, FitFailureError,
                            InfeasibleBudgetError, InsufficientDataError, ParseError,
                            SchemaError, ScalingError, TrainingDivergedError)
from scaling.fitting import FitPoint, FitReport, fit_joint_law, fit_power_law, r_squared
from scaling.laws import (PUBLISHED_LAWS, DataSize, JointLaw, ModelSize, PowerLaw,
                          eval_joint_law, eval_power_law, required_scale, required_scales)
