"""Gradual pseudo-labeling over the confident subset.

Starting from a trained network, repeatedly: predict the unlabeled set, take
the confident subset (least-confident score strictly below a threshold),
assign each member its argmax class as a pseudo-label, move it into L and
retrain.  Stop as soon as the confident subset is not larger than
``min_added``.  The threshold is swept over candidates in [-1, 0] and either
picked by k-NN regression on the resulting accuracies or set to the hardest
candidate that still clears ``min_added`` on the first check.

Ground truth of pseudo-labeled objects is consulted only to report the
fraction of wrong assignments, never for training.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from alab.data.pool import ObjectPool, PoolPartition, move_to_labeled
from alab.errors import AlabError, ConfigurationError, ContractViolation
from alab.loop import LabelOracle, TrainingMode
from alab.network import NetworkState, evaluate, init_network, predict, train
from alab.seeding import child_sequence
from alab.strategies import MeasureKind, score

__all__ = [
    "PseudoLabelBatch",
    "PseudoLabelingConfig",
    "PseudoLabelingResult",
    "SweepPoint",
    "confident_subset",
    "find_threshold",
    "hardest_feasible_threshold",
    "knn_regress",
    "run_pseudo_labeling",
]


@dataclass(frozen=True)
class PseudoLabelingConfig:
    threshold: float
    min_added: int = 150
    retrain_mode: TrainingMode = TrainingMode.CUMULATIVE
    max_iterations: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not -1.0 <= self.threshold <= 0.0:
            raise ConfigurationError("threshold must lie in [-1, 0]")
        if self.min_added < 1:
            raise ConfigurationError("min_added must be >= 1")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")


@dataclass
class PseudoLabelBatch:
    iteration: int
    ids: np.ndarray
    labels: np.ndarray


@dataclass
class PseudoLabelingResult:
    final_state: NetworkState
    assignments: list[PseudoLabelBatch]
    iterations: int
    error_fraction: float
    accuracy_before: float
    accuracy_after: float

    @property
    def pseudo_labeled_total(self) -> int:
        return sum(len(batch.ids) for batch in self.assignments)


def confident_subset(dist, threshold: float) -> np.ndarray:
    """Ids whose least-confident score is strictly below ``threshold``."""
    lc = score(MeasureKind.LEAST_CONFIDENT, dist)
    return lc.object_ids[lc.scores < threshold].copy()


def run_pseudo_labeling(
    state: NetworkState,
    partition: PoolPartition,
    config: PseudoLabelingConfig,
    oracle: LabelOracle,
) -> PseudoLabelingResult:
    """Iterate confident self-labeling until fewer than min_added ids qualify.

    Mutates ``partition`` (pseudo-labeled ids move into L).  When the very
    first confidence check already fails, the input state is returned
    untouched, making the run bit-identical to the supervised baseline.
    """
    test_pool = partition.test_pool() if len(partition.test_ids) else None
    accuracy_before = (
        evaluate(state, test_pool).accuracy if test_pool is not None else float("nan")
    )

    current = state
    assignments: list[PseudoLabelBatch] = []
    wrong = 0
    total = 0
    iterations = 0
    while True:
        if partition.unlabeled_count == 0:
            break
        dist = predict(current, partition.unlabeled_pool())
        chosen = confident_subset(dist, config.threshold)
        if len(chosen) <= config.min_added:
            break
        if iterations >= config.max_iterations:
            raise AlabError(
                f"pseudo-labeling did not converge within {config.max_iterations} iterations"
            )
        rows = np.searchsorted(dist.object_ids, chosen)
        pseudo = dist.probs[rows].argmax(axis=1).astype(np.int64)
        truth = oracle.peek(chosen)
        wrong += int(np.sum(pseudo != truth))
        total += len(chosen)
        move_to_labeled(partition, chosen, labels=pseudo)
        iterations += 1
        assignments.append(PseudoLabelBatch(iteration=iterations, ids=chosen, labels=pseudo))

        net = current.config
        if config.retrain_mode is TrainingMode.CUMULATIVE:
            current = init_network(net, child_sequence(config.seed, "pseudo-reinit", iterations))
            train(current, partition.labeled_pool(), net.epochs,
                  child_sequence(config.seed, "pseudo-train", iterations))
        else:
            batch_pool = ObjectPool(
                partition.features_for(chosen), ids=chosen, labels=pseudo, validate=False
            )
            train(current, batch_pool, net.epochs,
                  child_sequence(config.seed, "pseudo-train", iterations))

    accuracy_after = (
        evaluate(current, test_pool).accuracy if test_pool is not None else float("nan")
    )
    if iterations == 0:
        accuracy_after = accuracy_before
    return PseudoLabelingResult(
        final_state=current,
        assignments=assignments,
        iterations=iterations,
        error_fraction=(wrong / total) if total else 0.0,
        accuracy_before=accuracy_before,
        accuracy_after=accuracy_after,
    )


def knn_regress(xs, ys, k: int, query: float) -> float:
    """Mean of the k nearest neighbors' targets in one dimension.

    Neighbors are ranked by |x - query| with ties broken by ascending x;
    k is capped at the number of points.
    """
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if len(xs) != len(ys) or len(xs) == 0:
        raise ContractViolation("k-NN regression needs aligned, non-empty data")
    if k < 1:
        raise ContractViolation("k must be >= 1")
    order = np.lexsort((xs, np.abs(xs - query)))
    return float(ys[order[: min(k, len(xs))]].mean())


@dataclass
class SweepPoint:
    threshold: float
    accuracy_after: float
    error_fraction: float
    all_added: bool
    iterations: int


def find_threshold(
    state: NetworkState,
    partition: PoolPartition,
    candidates,
    k: int,
    oracle: LabelOracle,
    base_config: PseudoLabelingConfig,
) -> tuple[float, list[SweepPoint]]:
    """Sweep candidate thresholds and pick the k-NN-regression maximizer.

    Every candidate starts from deep copies of (state, partition) with the
    same sub-seed, isolating the threshold as the only varying factor.  Ties
    in the regression maximum resolve toward the hardest (smallest) candidate.
    """
    candidates = np.sort(np.asarray(candidates, dtype=np.float64))
    if len(candidates) == 0:
        raise ContractViolation("no candidate thresholds given")
    initial_unlabeled = partition.unlabeled_count
    sweep: list[SweepPoint] = []
    for threshold in candidates:
        result = run_pseudo_labeling(
            state.copy(),
            partition.copy(),
            replace(base_config, threshold=float(threshold)),
            oracle,
        )
        first = len(result.assignments[0].ids) if result.assignments else 0
        sweep.append(
            SweepPoint(
                threshold=float(threshold),
                accuracy_after=result.accuracy_after,
                error_fraction=result.error_fraction,
                all_added=first == initial_unlabeled,
                iterations=result.iterations,
            )
        )
    accuracies = np.array([point.accuracy_after for point in sweep])
    predictions = np.array(
        [knn_regress(candidates, accuracies, k, float(c)) for c in candidates]
    )
    best = int(np.argmax(predictions))  # first max = smallest candidate
    return float(candidates[best]), sweep


def hardest_feasible_threshold(
    state: NetworkState,
    partition: PoolPartition,
    candidates,
    min_added: int,
) -> float | None:
    """Smallest candidate whose first confident subset exceeds ``min_added``.

    Returns None when no candidate is feasible (no pseudo-labeling possible).
    Feasibility is monotone in the threshold, so a single prediction pass
    suffices.
    """
    candidates = np.sort(np.asarray(candidates, dtype=np.float64))
    if partition.unlabeled_count == 0:
        return None
    dist = predict(state, partition.unlabeled_pool())
    lc = np.sort(score(MeasureKind.LEAST_CONFIDENT, dist).scores)
    counts = np.searchsorted(lc, candidates, side="left")
    feasible = np.nonzero(counts > min_added)[0]
    if len(feasible) == 0:
        return None
    return float(candidates[feasible[0]])
