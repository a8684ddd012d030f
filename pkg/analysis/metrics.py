#!/usr/bin/env python3
"""
Contrastive entropy (CE) and its benchmark average (ACE).

CE of one ranking instance is the negative log softmax probability of the
positive passage among itself and its sampled negatives. It is the single
metric used for both effectiveness and robustness.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from scaling.errors import DomainError
from scaling.laws import Loss

logger = logging.getLogger(__name__)

DEFAULT_NEGATIVES = 256

Scorer = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RankingInstance:
    """Score of one positive passage and of its sampled negatives"""

    positive_score: float
    negative_scores: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "positive_score", float(self.positive_score))
        object.__setattr__(self, "negative_scores",
                           tuple(float(s) for s in self.negative_scores))
        if not self.negative_scores:
            raise DomainError("a ranking instance needs at least one negative score")


@dataclass(frozen=True)
class EvalSet:
    """One scored test collection"""

    instances: Tuple[RankingInstance, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        if not self.instances:
            raise DomainError(f"eval set '{self.label}' is empty")


@dataclass(frozen=True, eq=False)
class CaseSet:
    """
    Unscored test collection: query i ranks positives[i] against the rows
    of negatives[i].

    Shapes: queries (n, a), positives (n, a), negatives (n, N, a).
    """

    queries: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray
    label: str = ""

    def __post_init__(self):
        queries = np.array(self.queries, dtype=np.float64)
        positives = np.array(self.positives, dtype=np.float64)
        negatives = np.array(self.negatives, dtype=np.float64)
        if queries.ndim != 2 or queries.shape[0] == 0:
            raise DomainError(f"queries must be a non-empty (n, a) array, got {queries.shape}")
        if positives.shape != queries.shape:
            raise DomainError(f"positives shape {positives.shape} != queries shape {queries.shape}")
        if negatives.ndim != 3 or negatives.shape[0] != queries.shape[0] \
                or negatives.shape[2] != queries.shape[1] or negatives.shape[1] == 0:
            raise DomainError(f"negatives must have shape (n, N, a), got {negatives.shape}")
        for name, arr in (("queries", queries), ("positives", positives), ("negatives", negatives)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.queries.shape[0]

    @property
    def num_negatives(self) -> int:
        return self.negatives.shape[1]

    def with_negatives(self, negatives: np.ndarray, label: str) -> "CaseSet":
        return CaseSet(self.queries, self.positives, negatives, label)


def contrastive_entropies(positive_scores: np.ndarray, negative_scores: np.ndarray) -> np.ndarray:
    """
    Vectorized CE: positive_scores (...,), negative_scores (..., N)

    Computed as log(1 + exp(logsumexp(negatives) - positive)), which never
    exponentiates a raw score.
    """
    positive_scores = np.asarray(positive_scores, dtype=np.float64)
    negative_scores = np.asarray(negative_scores, dtype=np.float64)
    if np.isnan(positive_scores).any() or np.isnan(negative_scores).any():
        raise DomainError("contrastive entropy is undefined for NaN scores")
    return np.logaddexp(0.0, logsumexp(negative_scores, axis=-1) - positive_scores)


def contrastive_entropy(instance: RankingInstance) -> Loss:
    """CE of one instance, in nats"""
    return Loss(float(contrastive_entropies(instance.positive_score,
                                            np.array(instance.negative_scores))))


def _mean(values: Sequence[float]) -> float:
    # compensated summation keeps the mean independent of accumulation order
    return math.fsum(values) / len(values)


def set_contrastive_entropy(eval_set: EvalSet) -> Loss:
    """Mean CE over the instances of one set"""
    return Loss(_mean([contrastive_entropy(i) for i in eval_set.instances]))


def average_contrastive_entropy(sets: Sequence[EvalSet]) -> Loss:
    """
    Unweighted mean of per-set CE

    Every set counts once regardless of how many instances it holds.
    """
    if not sets:
        raise DomainError("average contrastive entropy needs at least one eval set")
    return Loss(_mean([set_contrastive_entropy(s) for s in sets]))


def score_case_set(scorer: Scorer, cases: CaseSet) -> EvalSet:
    """
    Score every (query, candidate) pair of a case set

    The scorer receives one query vector and a stack of candidate documents
    (positive first, then negatives) and returns one score per row; a scalar
    return is broadcast to every candidate.
    """
    instances: List[RankingInstance] = []
    for query, positive, negatives in zip(cases.queries, cases.positives, cases.negatives):
        documents = np.vstack([positive[None, :], negatives])
        scores = np.asarray(scorer(query, documents), dtype=np.float64)
        if scores.ndim == 0:
            scores = np.full(len(documents), float(scores))
        if scores.shape != (len(documents),):
            raise DomainError(
                f"scorer returned shape {scores.shape}, expected ({len(documents)},)")
        instances.append(RankingInstance(scores[0], scores[1:]))
    return EvalSet(tuple(instances), cases.label)


def evaluate(scorer: Scorer, cases: CaseSet) -> Loss:
    """
    Mean CE of a scorer on a test collection

    Args:
        scorer: Relevance function (query, documents) -> scores
        cases: Test collection

    Returns:
        Mean CE over the collection's instances
    """
    ce = set_contrastive_entropy(score_case_set(scorer, cases))
    logger.debug("CE on '%s' (%d queries): %.5f", cases.label, len(cases), ce)
    return ce
