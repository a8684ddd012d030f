#!/usr/bin/env python3
"""
Contrastive training of the shared linear encoder

Five strategies, all plain gradient descent:

    standard        random negatives from the distractor corpus
    hard_negative   a strategy_mix share of each pair's negatives are its
                    nearest corpus documents by ground-truth cosine
    denoising       a strategy_mix share of positives get extra noise
    adversarial     fixed mix of the robustness loss (promoted negatives)
                    and the clean effectiveness loss
    pareto          the same two losses, mixed by a dynamic weight
"""

import logging
import math
from dataclasses import asdict, dataclass, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from analysis.frontier import Omega0Estimate, PerfPoint, estimate_omega0, extract_non_dominated
from analysis.metrics import evaluate
from scaling.errors import DomainError, TrainingDivergedError
from simlab.attack import DEFAULT_EPSILON, DEFAULT_STEPS, adversarial_perturb, attack_case_set
from simlab.encoder import EncoderParams, contrastive_loss, contrastive_loss_and_grad
from simlab.pareto import ParetoWeighting
from simlab.task import Task

logger = logging.getLogger(__name__)

STRATEGIES = ("standard", "hard_negative", "denoising", "adversarial", "pareto")
DENOISING_NOISE_FACTOR = 3.0
PILOT_WEIGHTS = (0.25, 0.5, 0.75)
_SIMILARITY_CHUNK = 1024


@dataclass(frozen=True)
class TrainConfig:
    strategy: str = "standard"
    steps: int = 2000
    batch: int = 32
    negatives: int = 256
    omega0: float = 0.5
    weight_lr: float = 0.1
    encoder_lr: float = 0.01
    strategy_mix: float = 0.5
    seed: int = 0
    init_scale: float = 0.1
    omega_target: Optional[float] = None
    adv_epsilon: float = DEFAULT_EPSILON
    adv_steps: int = DEFAULT_STEPS
    loss_ema: Optional[float] = None
    log_every: int = 100
    # passes over the training pairs; overrides steps when set
    epochs: Optional[float] = None
    lr_decay: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise DomainError(f"unknown strategy '{self.strategy}', expected one of {STRATEGIES}")
        if self.steps < 0:
            raise DomainError(f"steps must be >= 0, got {self.steps}")
        if self.epochs is not None and not self.epochs > 0:
            raise DomainError(f"epochs must be > 0, got {self.epochs}")
        for name in ("batch", "negatives", "adv_steps", "log_every"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("weight_lr", "encoder_lr", "init_scale", "adv_epsilon"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0.0 < self.omega0 < 1.0:
            raise DomainError(f"omega0 must lie in (0, 1), got {self.omega0}")
        if not 0.0 <= self.strategy_mix <= 1.0:
            raise DomainError(f"strategy_mix must lie in [0, 1], got {self.strategy_mix}")
        if self.omega_target is not None and not self.omega_target > 0:
            raise DomainError(f"omega_target must be > 0, got {self.omega_target}")

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "TrainConfig":
        """Create a train config from a configuration mapping, ignoring unknown keys"""
        return cls(**{k: v for k, v in config.items() if k in cls.__dataclass_fields__})

    def total_steps(self, train_pairs: int) -> int:
        """Optimizer steps for a training set of train_pairs pairs"""
        if self.epochs is None:
            return self.steps
        return max(1, math.ceil(self.epochs * train_pairs / self.batch))

    def learning_rate(self, step: int, total: int) -> float:
        """Encoder step size at `step`, linearly annealed towards zero with lr_decay"""
        if not self.lr_decay or total <= 0:
            return self.encoder_lr
        return self.encoder_lr * (1.0 - step / total)


@dataclass(frozen=True)
class RunResult:
    effectiveness_ce: float
    ood_ce: float
    adversarial_ce: float
    robustness_ce: float
    omega_trajectory: Tuple[float, ...]
    loss_trajectory: Tuple[Tuple[float, float], ...]
    strategy: str
    model_size: int
    data_size: int
    seed: int

    def to_dict(self, trajectories: bool = True) -> Dict[str, Any]:
        result = asdict(self)
        result["omega_trajectory"] = list(self.omega_trajectory)
        result["loss_trajectory"] = [list(pair) for pair in self.loss_trajectory]
        if not trajectories:
            del result["omega_trajectory"], result["loss_trajectory"]
        return result


def hard_negative_pool(task: Task, depth: int) -> np.ndarray:
    """
    Indices of each training positive's `depth` most similar corpus documents

    Similarity is ground-truth cosine; the corpus holds no training
    positives, so a pair's own positive is never returned.
    """
    depth = min(depth, len(task.corpus))
    corpus = task.corpus / np.linalg.norm(task.corpus, axis=1, keepdims=True)
    pool = np.empty((len(task.train_positives), depth), dtype=np.int64)
    for start in range(0, len(task.train_positives), _SIMILARITY_CHUNK):
        chunk = task.train_positives[start:start + _SIMILARITY_CHUNK]
        similarity = (chunk / np.linalg.norm(chunk, axis=1, keepdims=True)) @ corpus.T
        top = np.argpartition(-similarity, depth - 1, axis=1)[:, :depth]
        order = np.argsort(-np.take_along_axis(similarity, top, axis=1), axis=1, kind="stable")
        pool[start:start + len(chunk)] = np.take_along_axis(top, order, axis=1)
    return pool


def evaluate_encoder(params: EncoderParams, task: Task,
                     config: TrainConfig) -> Tuple[float, float, float]:
    """(effectiveness, ood, adversarial) CE of an encoder"""
    effectiveness = evaluate(params.score, task.test)
    ood = evaluate(params.score, task.ood)
    attacked = attack_case_set(params, task.test, config.adv_epsilon, config.adv_steps)
    return effectiveness, ood, evaluate(params.score, attacked)


class Trainer:
    """One seeded training run of one strategy on one task"""

    def __init__(self, task: Task, config: TrainConfig):
        self.task = task
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        tc = task.config
        self.params = EncoderParams.initialize(tc.encode_dim, tc.ambient_dim,
                                               config.init_scale, self.rng)
        self.hard_count = 0
        self.hard_pool = None
        if config.strategy == "hard_negative":
            self.hard_count = int(round(config.strategy_mix * config.negatives))
            if self.hard_count > 0:
                self.hard_pool = hard_negative_pool(task, self.hard_count)
        self.weighting = None
        if config.strategy == "pareto":
            self.weighting = ParetoWeighting(config.omega0, config.omega_target,
                                             config.weight_lr, config.loss_ema)
        self.total_steps = config.total_steps(task.config.train_pairs)
        self.loss_trajectory: List[Tuple[float, float]] = []
        self._held_l_R = float("nan")

    def sample_batch(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        config, task = self.config, self.task
        idx = self.rng.integers(0, len(task.train_queries), config.batch)
        queries = task.train_queries[idx]
        positives = task.train_positives[idx]
        negative_idx = self.rng.integers(0, len(task.corpus), (config.batch, config.negatives))
        if self.hard_pool is not None:
            k = min(self.hard_count, self.hard_pool.shape[1])
            negative_idx[:, :k] = self.hard_pool[idx, :k]
        negatives = task.corpus[negative_idx]
        if config.strategy == "denoising":
            noisy = self.rng.random(config.batch) < config.strategy_mix
            noise = DENOISING_NOISE_FACTOR * task.config.positive_noise * \
                self.rng.standard_normal(positives.shape)
            positives = positives + noisy[:, None] * noise
        return queries, positives, negatives

    def robustness_batch(self, queries: np.ndarray, negatives: np.ndarray) -> np.ndarray:
        return adversarial_perturb(self.params, queries[:, None, :], negatives,
                                   self.config.adv_epsilon, self.config.adv_steps)

    def measures_robustness(self, step: int) -> bool:
        """Whether a non-robust strategy attacks its batch at this step"""
        last = step == self.total_steps - 1
        return step == 0 or last or (step + 1) % self.config.log_every == 0

    def step(self, step: int) -> Tuple[float, float]:
        """
        One gradient step; returns (l_E, l_R) on the sampled batch

        Adversarial and pareto runs attack every batch. The other strategies
        never train on promoted negatives, so their l_R is measured on the
        first step, every log_every steps and the last step, and the last
        measured value is carried in between.
        """
        config = self.config
        queries, positives, negatives = self.sample_batch()
        l_E, grad_E = contrastive_loss_and_grad(self.params, queries, positives, negatives)

        if config.strategy in ("adversarial", "pareto"):
            promoted = self.robustness_batch(queries, negatives)
            l_R, grad_R = contrastive_loss_and_grad(self.params, queries, positives, promoted)
            omega = config.strategy_mix if self.weighting is None else self.weighting.omega
            gradient = omega * grad_R + (1.0 - omega) * grad_E
        else:
            if self.measures_robustness(step):
                promoted = self.robustness_batch(queries, negatives)
                self._held_l_R = contrastive_loss(self.params, queries, positives, promoted)
            l_R = self._held_l_R
            gradient = grad_E

        if not (np.isfinite(l_E) and np.isfinite(l_R) and np.all(np.isfinite(gradient))):
            raise TrainingDivergedError(step, l_E if not np.isfinite(l_E) else l_R)
        self.params = self.params.step(gradient, config.learning_rate(step, self.total_steps))
        if not np.all(np.isfinite(self.params.weights)):
            raise TrainingDivergedError(step, float("nan"))
        if self.weighting is not None:
            # a saturated robustness loss can underflow to exactly zero
            self.weighting.update(l_E, max(l_R, np.finfo(float).tiny))
        return l_E, l_R

    def omega_trajectory(self) -> Tuple[float, ...]:
        if self.weighting is not None:
            return tuple(self.weighting.trajectory)
        if self.config.strategy == "adversarial":
            return (self.config.strategy_mix,)
        return (0.0,)

    def run(self) -> RunResult:
        config, task = self.config, self.task
        for step in range(self.total_steps):
            l_E, l_R = self.step(step)
            self.loss_trajectory.append((l_E, l_R))
            if (step + 1) % config.log_every == 0:
                logger.debug("[%s] step %d/%d: l_E=%.4f l_R=%.4f%s", config.strategy, step + 1,
                             self.total_steps, l_E, l_R,
                             f" omega={self.weighting.omega:.3f}" if self.weighting else "")

        effectiveness, ood, adversarial = evaluate_encoder(self.params, task, config)
        result = RunResult(
            effectiveness_ce=effectiveness,
            ood_ce=ood,
            adversarial_ce=adversarial,
            robustness_ce=0.5 * (ood + adversarial),
            omega_trajectory=self.omega_trajectory(),
            loss_trajectory=tuple(self.loss_trajectory),
            strategy=config.strategy,
            model_size=self.params.model_size,
            data_size=task.config.train_pairs,
            seed=config.seed,
        )
        logger.info("✓ %s run (pairs=%d, seed=%d): effectiveness %.4f, ood %.4f, "
                    "adversarial %.4f", config.strategy, result.data_size, config.seed,
                    effectiveness, ood, adversarial)
        return result


def train(task: Task, config: TrainConfig) -> RunResult:
    """
    Train an encoder on the task and evaluate it

    Args:
        task: Generated task
        config: Strategy and optimization settings

    Returns:
        RunResult with in-distribution, OOD and adversarial CE plus the
        weight and loss trajectories
    """
    return Trainer(task, config).run()


def pilot_omega0(task: Task, config: TrainConfig,
                 weights: Sequence[float] = PILOT_WEIGHTS) -> Omega0Estimate:
    """
    Estimate omega0 from fixed-weight adversarial runs

    Each weight gives one (robustness, effectiveness) point; omega0 comes
    from the knee of their frontier.
    """
    if not weights:
        raise DomainError("pilot needs at least one weight")
    points = []
    for weight in weights:
        result = train(task, replace(config, strategy="adversarial", strategy_mix=weight))
        points.append(PerfPoint(result.robustness_ce, result.effectiveness_ce,
                                f"adversarial@{weight:g}"))
    return estimate_omega0(extract_non_dominated(points))
