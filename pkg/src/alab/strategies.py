"""Informativeness measures and top-n batch selection.

Each measure maps a predictive distribution to one score per object; the
query selects the ``n`` highest-scoring objects, ties broken by ascending
object id so that reruns and brute-force oracles agree exactly.

Score ranges for a C-class problem:
  random            uniform draws in [0, 1)
  margin            -(p_top1 - p_top2), in [-1, 0]
  entropy           -sum_c p_c ln p_c, in [0, ln C]
  least_confident   -max_c p_c, in [-1, -1/C]
  least_squares     -sum_c (p_c - 1/C)^2, in [-(1 - 1/C), 0]
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from alab.errors import ContractViolation
from alab.network import PredictiveDistribution
from alab.seeding import SeedLike, child_sequence

ROW_SUM_TOLERANCE = 1e-5
PROB_CLAMP = 1e-12  # entropy log argument floor; 0 * ln 0 is taken as 0

__all__ = [
    "MeasureKind",
    "ScoreVector",
    "mean_informativeness",
    "score",
    "select_batch",
]


class MeasureKind(str, enum.Enum):
    RANDOM = "random"
    MARGIN = "margin"
    ENTROPY = "entropy"
    LEAST_CONFIDENT = "least_confident"
    LEAST_SQUARES = "least_squares"


@dataclass
class ScoreVector:
    """Scores under one measure, aligned to object ids."""

    scores: np.ndarray
    object_ids: np.ndarray
    measure: MeasureKind

    def __len__(self) -> int:
        return len(self.scores)


def _validated_probs(dist: PredictiveDistribution) -> np.ndarray:
    p = np.asarray(dist.probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != len(dist.object_ids):
        raise ContractViolation("malformed predictive distribution")
    if p.size:
        if p.min() < -ROW_SUM_TOLERANCE or p.max() > 1.0 + ROW_SUM_TOLERANCE:
            raise ContractViolation("probabilities outside [0, 1]")
        sums = p.sum(axis=1)
        off = np.abs(sums - 1.0).max()
        if off > ROW_SUM_TOLERANCE:
            raise ContractViolation(
                f"probability rows must sum to 1 within {ROW_SUM_TOLERANCE}, "
                f"worst deviation {off:.3e}"
            )
    return p


def score(
    measure: MeasureKind,
    dist: PredictiveDistribution,
    seed: SeedLike | None = None,
) -> ScoreVector:
    """Informativeness of every object in ``dist`` under ``measure``.

    The random measure draws from the caller-supplied seeded stream; the
    other measures are deterministic functions of the probabilities.
    """
    measure = MeasureKind(measure)
    p = _validated_probs(dist)
    n, num_classes = p.shape

    if measure is MeasureKind.RANDOM:
        if seed is None:
            raise ContractViolation("the random measure requires a seed")
        values = np.random.default_rng(child_sequence(seed)).random(n)
    elif measure is MeasureKind.MARGIN:
        if n:
            top2 = np.partition(p, num_classes - 2, axis=1)[:, -2:]
            values = -(top2[:, 1] - top2[:, 0])
        else:
            values = np.empty(0)
    elif measure is MeasureKind.ENTROPY:
        values = -np.sum(p * np.log(np.maximum(p, PROB_CLAMP)), axis=1)
    elif measure is MeasureKind.LEAST_CONFIDENT:
        values = -p.max(axis=1) if n else np.empty(0)
    elif measure is MeasureKind.LEAST_SQUARES:
        values = -np.sum((p - 1.0 / num_classes) ** 2, axis=1)
    else:  # pragma: no cover - closed enum
        raise ContractViolation(f"unknown measure {measure}")

    return ScoreVector(
        scores=np.asarray(values, dtype=np.float64),
        object_ids=np.asarray(dist.object_ids, dtype=np.int64),
        measure=measure,
    )


def select_batch(scores: ScoreVector, n: int) -> np.ndarray:
    """Ids of the min(n, len) highest scores, non-increasing, ties by id."""
    if n < 1:
        raise ContractViolation("batch size must be >= 1")
    if len(scores) == 0:
        raise ContractViolation("cannot select from an empty score vector")
    order = np.lexsort((scores.object_ids, -scores.scores))
    take = min(n, len(scores))
    return scores.object_ids[order[:take]].copy()


def mean_informativeness(scores: ScoreVector, batch) -> float:
    """Arithmetic mean of the scores over the ids in ``batch``."""
    batch = np.asarray(batch, dtype=np.int64)
    if len(batch) == 0:
        raise ContractViolation("mean informativeness of an empty batch is undefined")
    order = np.argsort(scores.object_ids, kind="stable")
    pos = np.searchsorted(scores.object_ids[order], batch)
    pos = np.clip(pos, 0, len(scores.object_ids) - 1)
    rows = order[pos]
    if not np.array_equal(scores.object_ids[rows], batch):
        raise ContractViolation("batch contains ids that were never scored")
    return float(scores.scores[rows].mean())
