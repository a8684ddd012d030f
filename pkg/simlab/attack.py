#!/usr/bin/env python3
"""
Embedding-space ranking attack

Pushes documents toward a query with sign-gradient ascent on relevance,
projected onto an l-infinity ball around the original document.
"""

import logging

import numpy as np

from analysis.metrics import CaseSet
from scaling.errors import DomainError
from simlab.encoder import EncoderParams

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.2
DEFAULT_STEPS = 5


def _relevance(params: EncoderParams, queries: np.ndarray, documents: np.ndarray) -> np.ndarray:
    return np.sum(params.encode(queries) * params.encode(documents), axis=-1)


def adversarial_perturb(params: EncoderParams, query: np.ndarray, document: np.ndarray,
                        epsilon: float = DEFAULT_EPSILON,
                        steps: int = DEFAULT_STEPS) -> np.ndarray:
    """
    Raise Rel(query, document) inside ||document' - document||_inf <= epsilon

    Args:
        params: Encoder under attack
        query: (..., a), broadcast against document
        document: (..., a)
        epsilon: Radius of the l-infinity ball
        steps: Number of sign-gradient steps of size epsilon / steps

    Returns:
        Perturbed documents; a step is kept only where it does not lower relevance
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be > 0, got {epsilon}")
    if steps < 1:
        raise DomainError(f"steps must be >= 1, got {steps}")
    query = np.asarray(query, dtype=np.float64)
    original = np.asarray(document, dtype=np.float64)
    step_size = epsilon / steps

    direction = np.sign(params.relevance_direction(query))
    current = np.array(original, copy=True)
    relevance = _relevance(params, query, current)
    for _ in range(steps):
        candidate = np.clip(current + step_size * direction,
                            original - epsilon, original + epsilon)
        candidate_relevance = _relevance(params, query, candidate)
        accept = np.asarray(candidate_relevance >= relevance)
        current = np.where(accept[..., None], candidate, current)
        relevance = np.where(accept, candidate_relevance, relevance)
    return current


def attack_case_set(params: EncoderParams, cases: CaseSet,
                    epsilon: float = DEFAULT_EPSILON,
                    steps: int = DEFAULT_STEPS) -> CaseSet:
    """The collection with every negative promoted toward its query"""
    negatives = adversarial_perturb(params, cases.queries[:, None, :], cases.negatives,
                                    epsilon, steps)
    return cases.with_negatives(negatives, "adversarial")
