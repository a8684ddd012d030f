#!/usr/bin/env python3
"""
Synthetic dense-retrieval task

Documents are Gaussian vectors; each training query is its positive
document plus annotation noise. The in-distribution test collection is drawn
the same way, and the OOD collection is the same collection rotated in a
fixed 2-plane. Every random draw comes from its own seeded stream, so the
training pairs for a larger train_pairs value extend (never change) the
pairs generated for a smaller one.
"""

import logging
from dataclasses import dataclass
from typing import Any, Mapping, Optional

import numpy as np

from analysis.metrics import DEFAULT_NEGATIVES, CaseSet
from scaling.errors import DomainError

logger = logging.getLogger(__name__)

# independent streams spawned from the task seed
_BASIS, _CORPUS, _TRAIN_DOCS, _TRAIN_NOISE, _TEST, _ROTATION = range(6)


@dataclass(frozen=True)
class TaskConfig:
    ambient_dim: int = 64
    encode_dim: int = 16
    train_pairs: int = 4000
    positive_noise: float = 0.1
    ood_rotation_angle: float = 0.5
    seed: int = 0
    doc_spectrum_decay: float = 0.0
    test_queries: int = 256
    eval_negatives: int = DEFAULT_NEGATIVES
    corpus_size: int = 4096
    # noise of the test queries; defaults to positive_noise
    test_noise: Optional[float] = None

    def __post_init__(self):
        for name in ("ambient_dim", "encode_dim", "train_pairs", "test_queries",
                     "eval_negatives", "corpus_size"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.ambient_dim < 2:
            raise DomainError(f"ambient_dim must be >= 2 for the OOD rotation, got {self.ambient_dim}")
        if self.encode_dim > self.ambient_dim:
            raise DomainError(
                f"encode_dim ({self.encode_dim}) must not exceed ambient_dim ({self.ambient_dim})")
        if self.positive_noise < 0:
            raise DomainError(f"positive_noise must be >= 0, got {self.positive_noise}")
        if self.doc_spectrum_decay < 0:
            raise DomainError(f"doc_spectrum_decay must be >= 0, got {self.doc_spectrum_decay}")
        if self.test_noise is not None and self.test_noise < 0:
            raise DomainError(f"test_noise must be >= 0, got {self.test_noise}")

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "TaskConfig":
        """Create a task config from a configuration mapping, ignoring unknown keys"""
        fields = cls.__dataclass_fields__
        return cls(**{k: fields[k].type(v) if fields[k].type in (int, float) else v
                      for k, v in config.items() if k in fields})


@dataclass(frozen=True, eq=False)
class Task:
    """
    A generated task

    Attributes:
        basis: Orthonormal columns ordered by decreasing document variance
        corpus: Distractor documents that training negatives are drawn from
        train_queries / train_positives: Annotated training pairs
        test: In-distribution test collection
        ood: The test collection after the OOD rotation
    """

    config: TaskConfig
    basis: np.ndarray
    corpus: np.ndarray
    train_queries: np.ndarray
    train_positives: np.ndarray
    test: CaseSet
    ood: CaseSet
    rotation: np.ndarray


def _spectrum(config: TaskConfig) -> np.ndarray:
    return np.exp(-config.doc_spectrum_decay * np.arange(config.ambient_dim))


def _documents(rng: np.random.Generator, shape, config: TaskConfig,
               basis: np.ndarray) -> np.ndarray:
    z = rng.standard_normal(tuple(shape) + (config.ambient_dim,))
    if config.doc_spectrum_decay == 0.0:
        return z
    return (z * _spectrum(config)) @ basis.T


def plane_rotation(u: np.ndarray, v: np.ndarray, angle: float) -> np.ndarray:
    """Rotation by angle in the plane spanned by orthonormal u and v"""
    dim = len(u)
    return (np.eye(dim)
            + np.sin(angle) * (np.outer(v, u) - np.outer(u, v))
            + (np.cos(angle) - 1.0) * (np.outer(u, u) + np.outer(v, v)))


def generate_task(config: TaskConfig) -> Task:
    """
    Generate the train pairs, test collections and distractor corpus

    The OOD plane is spanned by two random orthonormal directions. With a
    zero angle the OOD collection is the in-distribution collection.
    """
    streams = [np.random.default_rng(s)
               for s in np.random.SeedSequence(config.seed).spawn(6)]
    a = config.ambient_dim

    basis, _ = np.linalg.qr(streams[_BASIS].standard_normal((a, a)))
    corpus = _documents(streams[_CORPUS], (config.corpus_size,), config, basis)

    train_positives = _documents(streams[_TRAIN_DOCS], (config.train_pairs,), config, basis)
    train_queries = train_positives + config.positive_noise * \
        streams[_TRAIN_NOISE].standard_normal(train_positives.shape)

    test_rng = streams[_TEST]
    test_positives = _documents(test_rng, (config.test_queries,), config, basis)
    test_noise = config.positive_noise if config.test_noise is None else config.test_noise
    test_queries = test_positives + test_noise * \
        test_rng.standard_normal(test_positives.shape)
    test_negatives = _documents(test_rng, (config.test_queries, config.eval_negatives),
                                config, basis)
    test = CaseSet(test_queries, test_positives, test_negatives, "in-distribution")

    plane, _ = np.linalg.qr(streams[_ROTATION].standard_normal((a, 2)))
    u, v = plane[:, 0], plane[:, 1]
    if config.ood_rotation_angle == 0.0:
        rotation = np.eye(a)
        ood = CaseSet(test.queries, test.positives, test.negatives, "ood")
    else:
        rotation = plane_rotation(u, v, config.ood_rotation_angle)
        ood = CaseSet(test.queries @ rotation.T, test.positives @ rotation.T,
                      test.negatives @ rotation.T, "ood")

    logger.debug("Generated task: %d train pairs, %d test queries x %d negatives (seed %d)",
                 config.train_pairs, config.test_queries, config.eval_negatives, config.seed)
    return Task(config=config, basis=basis, corpus=corpus, train_queries=train_queries,
                train_positives=train_positives, test=test, ood=ood, rotation=rotation)
