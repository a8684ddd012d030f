#!/usr/bin/env python3
"""
Shared linear encoder and its contrastive ranking loss.

Queries and documents go through the same map W, and relevance is the dot
product of the encodings: Rel(q, d) = (W q) . (W d). Gradients are exact
and closed-form.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import logsumexp

from scaling.errors import DomainError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EncoderParams:
    """Encoder weights, shape (encode_dim, ambient_dim)"""

    weights: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=np.float64)
        if weights.ndim != 2:
            raise DomainError(f"weights must be a matrix, got shape {weights.shape}")
        if not np.all(np.isfinite(weights)):
            raise DomainError("weights must be finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def initialize(cls, encode_dim: int, ambient_dim: int, scale: float,
                   rng: np.random.Generator) -> "EncoderParams":
        """Gaussian weights with entry std scale / sqrt(ambient_dim)"""
        return cls(rng.normal(0.0, scale / np.sqrt(ambient_dim), (encode_dim, ambient_dim)))

    @property
    def model_size(self) -> int:
        return int(self.weights.size)

    def encode(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.weights.T

    def score(self, query: np.ndarray, documents: np.ndarray) -> np.ndarray:
        """Relevance of each document row to the query"""
        return self.encode(documents) @ self.encode(query)

    def relevance_direction(self, queries: np.ndarray) -> np.ndarray:
        """d Rel / d document = W^T W q, per query row"""
        return self.encode(queries) @ self.weights

    def step(self, gradient: np.ndarray, lr: float) -> "EncoderParams":
        return EncoderParams(self.weights - lr * gradient)


def _batch_scores(params: EncoderParams, queries: np.ndarray, positives: np.ndarray,
                  negatives: np.ndarray) -> np.ndarray:
    q = params.encode(queries)
    pos = np.sum(q * params.encode(positives), axis=-1)
    neg = np.einsum("bk,bnk->bn", q, params.encode(negatives))
    return np.concatenate([pos[:, None], neg], axis=1)


def _check_batch(queries, positives, negatives):
    if queries.ndim != 2 or positives.shape != queries.shape:
        raise DomainError(
            f"queries and positives must share shape (B, a), got {queries.shape}, {positives.shape}")
    if negatives.ndim != 3 or negatives.shape[0] != queries.shape[0] \
            or negatives.shape[2] != queries.shape[1]:
        raise DomainError(f"negatives must have shape (B, N, a), got {negatives.shape}")


def contrastive_loss(params: EncoderParams, queries: np.ndarray, positives: np.ndarray,
                     negatives: np.ndarray) -> float:
    """Batch mean of -log softmax probability of each positive"""
    _check_batch(queries, positives, negatives)
    logits = _batch_scores(params, queries, positives, negatives)
    return float(np.mean(logsumexp(logits, axis=1) - logits[:, 0]))


def contrastive_loss_and_grad(params: EncoderParams, queries: np.ndarray,
                              positives: np.ndarray,
                              negatives: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Contrastive ranking loss and its exact gradient in the shared weights

    Args:
        params: Encoder
        queries: (B, a)
        positives: (B, a)
        negatives: (B, N, a)

    Returns:
        (batch-mean loss, gradient with the shape of params.weights)
    """
    _check_batch(queries, positives, negatives)
    logits = _batch_scores(params, queries, positives, negatives)
    log_z = logsumexp(logits, axis=1)
    loss = float(np.mean(log_z - logits[:, 0]))

    probs = np.exp(logits - log_z[:, None])
    # dL/ds for the positive is (p0 - 1), for negative j it is p_j
    u = (probs[:, 0] - 1.0)[:, None] * positives + np.einsum("bn,bna->ba", probs[:, 1:], negatives)
    # Rel = q^T W^T W d, so dRel/dW = W (q d^T + d q^T)
    m = (queries.T @ u + u.T @ queries) / len(queries)
    return loss, params.weights @ m
