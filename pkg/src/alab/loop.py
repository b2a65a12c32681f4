"""The acquisition loop: score, select, query, train, evaluate, record.

One run is strictly sequential and fully determined by its master seed; every
random draw comes from a named child stream (see :mod:`alab.seeding`):

  ("init",) / ("init", "eval")          initial network parameters
  ("reinit", step[, "eval"])            cumulative re-initialization per step
  ("train", step[, "eval"])             shuffle + dropout inside one train call
  ("measure", step)                     random-measure draws for selection
  ("mim", step, measure)                random-measure draws for logging
  ("split",)                            staged-release subset assignment
  ("bounds", side[, "train"])           accuracy-bound networks
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from alab.data.pool import (
    ObjectPool,
    PoolPartition,
    SplitSchedule,
    class_histogram,
    move_to_labeled,
    split_ids,
)
from alab.errors import ConfigurationError, ContractViolation
from alab.network import NetworkConfig, NetworkState, evaluate, forward, init_network, train
from alab.seeding import SeedLike, child_sequence, stream
from alab.strategies import MeasureKind, mean_informativeness, score, select_batch

__all__ = [
    "AcquisitionRecord",
    "ActiveLearningDriver",
    "ExperimentConfig",
    "LabelOracle",
    "TrainingMode",
    "estimate_accuracy_bounds",
    "run_active_learning",
]

DEFAULT_LOGGED_MEASURES = (
    MeasureKind.MARGIN,
    MeasureKind.ENTROPY,
    MeasureKind.LEAST_CONFIDENT,
    MeasureKind.LEAST_SQUARES,
)


class TrainingMode(str, enum.Enum):
    INCREMENTAL = "incremental"
    CUMULATIVE = "cumulative"


class LabelOracle:
    """Simulated annotator backed by the partition's ground truth.

    ``lookup`` increments the query counter (the labeling budget metric) on
    every call, repeated ids included; ``peek`` reads the same truth without
    charging the budget and exists only for error accounting.
    """

    def __init__(self, partition: PoolPartition):
        self._partition = partition
        self.queries = 0

    def lookup(self, ids) -> np.ndarray:
        labels = self._partition.truth_labels_for(ids)
        self.queries += len(labels)
        return labels

    def peek(self, ids) -> np.ndarray:
        return self._partition.truth_labels_for(ids)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines one acquisition run."""

    strategy: MeasureKind
    mode: TrainingMode
    batch_size: int
    selection_net: NetworkConfig
    evaluation_net: NetworkConfig | None = None
    random_start_size: int = 0
    logged_measures: tuple[MeasureKind, ...] = DEFAULT_LOGGED_MEASURES
    split_schedule: SplitSchedule | None = None
    stop_after_labeled: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.random_start_size < 0:
            raise ConfigurationError("random_start_size must be >= 0")
        if self.stop_after_labeled is not None and self.stop_after_labeled < 1:
            raise ConfigurationError("stop_after_labeled must be >= 1 when set")
        if MeasureKind.RANDOM in self.logged_measures:
            raise ConfigurationError(
                "the random measure is a selection device, not a batch statistic"
            )
        ordered = tuple(m for m in DEFAULT_LOGGED_MEASURES if m in set(self.logged_measures))
        if MeasureKind.MARGIN not in ordered:
            ordered = (MeasureKind.MARGIN,) + ordered
        object.__setattr__(self, "logged_measures", ordered)


@dataclass
class AcquisitionRecord:
    """One log row per acquisition step."""

    step: int
    labeled_count: int
    subset_index: int
    test_accuracy: float
    train_accuracy: float
    test_loss: float
    train_loss: float
    mim: dict[MeasureKind, float] = field(default_factory=dict)
    selected_class_histogram: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))


class ActiveLearningDriver:
    """Runs one acquisition loop; keeps final states for downstream stages."""

    def __init__(self, config: ExperimentConfig, partition: PoolPartition, oracle: LabelOracle):
        if partition.unlabeled_count == 0:
            raise ContractViolation("the unlabeled set U is empty at the start")
        if config.random_start_size > partition.unlabeled_count:
            raise ConfigurationError("random_start_size exceeds the initial |U|")
        if (
            config.stop_after_labeled is not None
            and config.stop_after_labeled > partition.unlabeled_count + partition.labeled_count
        ):
            raise ConfigurationError("stop_after_labeled exceeds the available objects")
        self.config = config
        self.partition = partition
        self.oracle = oracle
        self.selection_state: NetworkState | None = None
        self.evaluation_state: NetworkState | None = None
        self.records: list[AcquisitionRecord] = []

    # -- helpers -------------------------------------------------------------

    def _train_on(self, state: NetworkState, pool: ObjectPool, net: NetworkConfig,
                  *path) -> NetworkState:
        return train(state, pool, net.epochs, child_sequence(self.config.seed, *path))

    def _batch_budget(self, wanted: int) -> int:
        available = self.partition.unlabeled_count
        take = min(wanted, available)
        if self.config.stop_after_labeled is not None:
            take = min(take, self.config.stop_after_labeled - self.partition.labeled_count)
        return take

    def run(self) -> list[AcquisitionRecord]:
        cfg = self.config
        seed = cfg.seed
        sel_net = cfg.selection_net
        eval_net = cfg.evaluation_net
        partition = self.partition

        pending: list[np.ndarray] = []
        introduced = partition.unlabeled_count
        subset_index = 1
        if cfg.split_schedule is not None:
            subsets = split_ids(
                partition.unlabeled_ids, cfg.split_schedule.num_subsets, stream(seed, "split")
            )
            for held in subsets[1:]:
                partition.withhold_unlabeled(held)
            pending = list(subsets[1:])
            introduced = len(subsets[0])

        sel_state = init_network(sel_net, child_sequence(seed, "init"))
        eval_state = (
            init_network(eval_net, child_sequence(seed, "init", "eval"))
            if eval_net is not None
            else None
        )
        test_pool = partition.test_pool() if len(partition.test_ids) else None

        step = 0
        while partition.unlabeled_count > 0:
            if (
                cfg.stop_after_labeled is not None
                and partition.labeled_count >= cfg.stop_after_labeled
            ):
                break
            step += 1

            unlabeled = partition.unlabeled_pool()
            dist = forward(sel_state, unlabeled.features, object_ids=unlabeled.ids)

            random_start = cfg.random_start_size > 0 and partition.labeled_count == 0
            if random_start:
                selection_measure = MeasureKind.RANDOM
                wanted = cfg.random_start_size
            else:
                selection_measure = cfg.strategy
                wanted = cfg.batch_size
            take = self._batch_budget(wanted)
            sel_scores = score(selection_measure, dist, child_sequence(seed, "measure", step))
            batch = select_batch(sel_scores, take)

            labels = self.oracle.lookup(batch)
            move_to_labeled(partition, batch, labels)
            if random_start:
                partition.random_start_ids = batch.copy()

            mims = {
                m: mean_informativeness(
                    score(m, dist, child_sequence(seed, "mim", step, m.value)), batch
                )
                for m in cfg.logged_measures
            }

            labeled_pool = partition.labeled_pool()
            if cfg.mode is TrainingMode.INCREMENTAL:
                batch_pool = ObjectPool(
                    partition.features_for(batch), ids=batch, labels=labels, validate=False
                )
                self._train_on(sel_state, batch_pool, sel_net, "train", step)
                if eval_state is not None:
                    self._train_on(eval_state, batch_pool, eval_net, "train", step, "eval")
            else:
                sel_state = init_network(sel_net, child_sequence(seed, "reinit", step))
                self._train_on(sel_state, labeled_pool, sel_net, "train", step)
                if eval_net is not None:
                    eval_state = init_network(eval_net, child_sequence(seed, "reinit", step, "eval"))
                    self._train_on(eval_state, labeled_pool, eval_net, "train", step, "eval")

            reporting_state = eval_state if eval_state is not None else sel_state
            if test_pool is not None:
                test_accuracy, test_loss = evaluate(reporting_state, test_pool)
            else:
                test_accuracy, test_loss = math.nan, math.nan
            train_accuracy, train_loss = evaluate(reporting_state, labeled_pool)

            self.records.append(
                AcquisitionRecord(
                    step=step,
                    labeled_count=partition.labeled_count,
                    subset_index=subset_index,
                    test_accuracy=test_accuracy,
                    train_accuracy=train_accuracy,
                    test_loss=test_loss,
                    train_loss=train_loss,
                    mim=mims,
                    selected_class_histogram=class_histogram(labels, sel_net.num_classes),
                )
            )

            if (
                pending
                and partition.labeled_count
                >= math.ceil(cfg.split_schedule.release_fraction * introduced)
            ):
                fresh = pending.pop(0)
                partition.add_unlabeled(fresh)
                introduced += len(fresh)
                subset_index += 1

        self.selection_state = sel_state
        self.evaluation_state = eval_state
        return self.records


def run_active_learning(
    config: ExperimentConfig, partition: PoolPartition, oracle: LabelOracle
) -> list[AcquisitionRecord]:
    """Run the full acquisition loop; mutates ``partition`` as ids are labeled."""
    return ActiveLearningDriver(config, partition, oracle).run()


def estimate_accuracy_bounds(
    partition: PoolPartition, net_config: NetworkConfig, seed: SeedLike
) -> tuple[float, float]:
    """Heuristic test-accuracy bounds from a random-start run.

    The random-start objects double as a held-in test set: the lower bound
    trains only on the strategy-selected remainder of L and evaluates on the
    random-start set; the upper bound trains on all of L (the test set is then
    a subset of the training set).
    """
    if partition.random_start_ids is None or len(partition.random_start_ids) == 0:
        raise ContractViolation("bounds require a partition with tagged random-start objects")
    start_ids = partition.random_start_ids
    strategy_ids = np.setdiff1d(partition.labeled_ids, start_ids)
    if len(strategy_ids) == 0:
        raise ContractViolation("bounds require strategy-selected objects beyond the random start")

    def pool_of(ids) -> ObjectPool:
        return ObjectPool(
            partition.features_for(ids),
            ids=ids,
            labels=partition.assigned_labels_for(ids),
            validate=False,
        )

    start_pool = pool_of(start_ids)
    lower_state = init_network(net_config, child_sequence(seed, "bounds", "lower"))
    train(lower_state, pool_of(strategy_ids), net_config.epochs,
          child_sequence(seed, "bounds", "lower", "train"))
    lower = evaluate(lower_state, start_pool).accuracy

    upper_state = init_network(net_config, child_sequence(seed, "bounds", "upper"))
    train(upper_state, pool_of(partition.labeled_ids), net_config.epochs,
          child_sequence(seed, "bounds", "upper", "train"))
    upper = evaluate(upper_state, start_pool).accuracy
    return lower, upper
