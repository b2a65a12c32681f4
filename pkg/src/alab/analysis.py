"""Statistical studies: selection bias of untrained networks, the darkness
bias curve over noise images, and multi-run aggregation of acquisition logs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from alab.data.pool import ObjectPool, class_histogram
from alab.data.synth import noise_images
from alab.errors import ContractViolation
from alab.loop import AcquisitionRecord
from alab.network import NetworkConfig, init_network, predict
from alab.seeding import SeedLike, child_sequence
from alab.strategies import MeasureKind, score, select_batch

__all__ = [
    "AlphaBiasCurve",
    "ClassOccurrenceSummary",
    "aggregate_runs",
    "alpha_bias_study",
    "chi_squared_balance",
    "class_bias_study",
]

DEFAULT_ALPHA_GRID = tuple(np.round(np.linspace(0.0, 1.0, 21), 2))


@dataclass
class ClassOccurrenceSummary:
    """Per-repeat class counts of batches selected by untrained networks."""

    counts: np.ndarray  # (repeats, num_classes) int64
    strategy: MeasureKind
    repeats: int
    images_per_repeat: int

    def mean_counts(self) -> np.ndarray:
        return self.counts.mean(axis=0)


@dataclass
class AlphaBiasCurve:
    """Mean/std informativeness of noise images versus blackened fraction."""

    alphas: np.ndarray
    mean_scores: dict[MeasureKind, np.ndarray]
    std_scores: dict[MeasureKind, np.ndarray]
    runs: int


def class_bias_study(
    strategy: MeasureKind,
    pool: ObjectPool,
    images_per_repeat: int,
    repeats: int,
    net_config: NetworkConfig,
    seed: SeedLike,
) -> ClassOccurrenceSummary:
    """Let freshly initialized, untrained networks select batches; count classes.

    Labels are used only to count what was selected, never for selection.
    """
    if pool.labels is None:
        raise ContractViolation("the bias study needs a labeled pool for counting")
    if images_per_repeat > len(pool):
        raise ContractViolation("images_per_repeat exceeds the pool size")
    counts = np.zeros((repeats, net_config.num_classes), dtype=np.int64)
    for repeat in range(repeats):
        state = init_network(net_config, child_sequence(seed, "bias", repeat))
        dist = predict(state, pool)
        scores = score(strategy, dist, child_sequence(seed, "bias", repeat, "measure"))
        chosen = select_batch(scores, images_per_repeat)
        counts[repeat] = class_histogram(
            pool.labels[pool.rows_for(chosen)], net_config.num_classes
        )
    return ClassOccurrenceSummary(
        counts=counts,
        strategy=MeasureKind(strategy),
        repeats=repeats,
        images_per_repeat=images_per_repeat,
    )


def alpha_bias_study(
    measures,
    alphas,
    runs: int,
    net_config: NetworkConfig,
    seed: SeedLike,
    images_per_alpha: int = 100,
) -> AlphaBiasCurve:
    """Mean informativeness of partially blackened noise images per alpha.

    Each run draws a fresh untrained network and fresh noise images for every
    alpha; curves aggregate the per-run means across runs.
    """
    measures = [MeasureKind(m) for m in measures]
    alphas = np.asarray(alphas, dtype=np.float64)
    if len(alphas) and (alphas.min() < 0.0 or alphas.max() > 1.0):
        raise ContractViolation("alphas must lie in [0, 1]")
    if runs < 1:
        raise ContractViolation("runs must be >= 1")
    per_run = {m: np.zeros((runs, len(alphas))) for m in measures}
    for run in range(runs):
        state = init_network(net_config, child_sequence(seed, "alpha", run))
        for j, alpha in enumerate(alphas):
            images = noise_images(
                images_per_alpha, float(alpha), child_sequence(seed, "alpha", run, j)
            )
            dist = predict(state, images)
            for m in measures:
                values = score(
                    m, dist, child_sequence(seed, "alpha", run, j, "measure")
                ).scores
                per_run[m][run, j] = values.mean()
    return AlphaBiasCurve(
        alphas=alphas,
        mean_scores={m: per_run[m].mean(axis=0) for m in measures},
        std_scores={m: per_run[m].std(axis=0) for m in measures},
        runs=runs,
    )


_SCALAR_FIELDS = ("test_accuracy", "train_accuracy", "test_loss", "train_loss")


def aggregate_runs(streams: list[list[AcquisitionRecord]]) -> dict[str, np.ndarray]:
    """Pointwise mean/std (population) of every numeric field across runs.

    All streams must be aligned on the same labeled_count grid.
    """
    if not streams or not streams[0]:
        raise ContractViolation("nothing to aggregate")
    grid = [record.labeled_count for record in streams[0]]
    for index, stream_records in enumerate(streams[1:], start=2):
        other = [record.labeled_count for record in stream_records]
        if other != grid:
            first_bad = next(
                (i for i, (a, b) in enumerate(zip(grid, other)) if a != b),
                min(len(grid), len(other)),
            )
            raise ContractViolation(
                f"run {index} disagrees with run 1 on the labeled_count grid "
                f"at position {first_bad}"
            )

    out: dict[str, np.ndarray] = {
        "step": np.array([r.step for r in streams[0]], dtype=np.int64),
        "labeled_count": np.array(grid, dtype=np.int64),
    }
    for field_name in _SCALAR_FIELDS:
        matrix = np.array(
            [[getattr(r, field_name) for r in records] for records in streams]
        )
        out[f"{field_name}_mean"] = matrix.mean(axis=0)
        out[f"{field_name}_std"] = matrix.std(axis=0)
    logged = [m for m in streams[0][0].mim]
    for measure in logged:
        if not all(measure in r.mim for records in streams for r in records):
            continue
        matrix = np.array([[r.mim[measure] for r in records] for records in streams])
        out[f"mim_{_mim_key(measure)}_mean"] = matrix.mean(axis=0)
        out[f"mim_{_mim_key(measure)}_std"] = matrix.std(axis=0)
    return out


def _mim_key(measure: MeasureKind) -> str:
    return {
        MeasureKind.MARGIN: "margin",
        MeasureKind.ENTROPY: "entropy",
        MeasureKind.LEAST_CONFIDENT: "lc",
        MeasureKind.LEAST_SQUARES: "ls",
    }[measure]


def chi_squared_balance(summary: ClassOccurrenceSummary, proportions=None) -> float:
    """Chi-squared statistic of the total selected counts against the pool mix."""
    totals = summary.counts.sum(axis=0)
    n = totals.sum()
    if proportions is None:
        proportions = np.full(len(totals), 1.0 / len(totals))
    expected = n * np.asarray(proportions, dtype=np.float64)
    if math.isclose(expected.min(), 0.0):
        raise ContractViolation("expected counts must be positive")
    return float(((totals - expected) ** 2 / expected).sum())
