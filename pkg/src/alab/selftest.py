"""Dataset-free property battery behind the ``selftest`` subcommand.

Each check is an independent function returning (passed, detail); the same
functions back the pytest acceptance suite, so the CLI and CI agree on what
"healthy" means.  Everything here runs on synthetic data in well under a
minute.
"""

from __future__ import annotations

import filecmp
import itertools
import json
import math
import tempfile
from pathlib import Path

import numpy as np

from alab.data import PoolPartition, move_to_labeled, synth_blobs, synth_blobs_split
from alab.loop import LabelOracle, TrainingMode
from alab.network import (
    NetworkConfig,
    PredictiveDistribution,
    gradient_check,
    init_network,
    predict,
    train,
)
from alab.pseudolabel import (
    PseudoLabelingConfig,
    confident_subset,
    knn_regress,
    run_pseudo_labeling,
)
from alab.strategies import MeasureKind, ScoreVector, mean_informativeness, score, select_batch

__all__ = ["CHECKS", "run_all"]


def _random_simplex_rows(rng, n, c):
    rows = rng.dirichlet(np.ones(c), size=n)
    # include some hard corners: a one-hot row and a uniform row
    rows[0] = np.eye(c)[0]
    rows[1] = np.full(c, 1.0 / c)
    return rows


def _dist_of(rows):
    return PredictiveDistribution(
        probs=np.asarray(rows, dtype=np.float64),
        object_ids=np.arange(len(rows), dtype=np.int64),
    )


def check_measure_formulas():
    """Vectorized scores match a plain-Python recomputation within 1e-6."""
    rng = np.random.default_rng(91)
    rows = _random_simplex_rows(rng, 64, 10)
    dist = _dist_of(rows)
    worst = 0.0
    for measure in (
        MeasureKind.MARGIN,
        MeasureKind.ENTROPY,
        MeasureKind.LEAST_CONFIDENT,
        MeasureKind.LEAST_SQUARES,
    ):
        got = score(measure, dist).scores
        for i, row in enumerate(rows):
            p = sorted(row, reverse=True)
            if measure is MeasureKind.MARGIN:
                expected = -(p[0] - p[1])
            elif measure is MeasureKind.ENTROPY:
                expected = -sum(v * math.log(v) for v in row if v > 0.0)
            elif measure is MeasureKind.LEAST_CONFIDENT:
                expected = -p[0]
            else:
                expected = -sum((v - 1.0 / len(row)) ** 2 for v in row)
            worst = max(worst, abs(got[i] - expected))
    return worst < 1e-6, f"max |vectorized - bruteforce| = {worst:.2e}"


def check_select_batch_bruteforce():
    """Top-n selection equals exhaustive subset maximization on small pools."""
    rng = np.random.default_rng(17)
    for trial in range(30):
        size = int(rng.integers(2, 13))
        n = int(rng.integers(1, size + 1))
        ids = rng.choice(200, size=size, replace=False).astype(np.int64)
        # dyadic values: plenty of ties, and subset sums are exact in binary
        values = rng.integers(0, 8, size=size) / 8.0
        vector = ScoreVector(scores=values, object_ids=ids, measure=MeasureKind.MARGIN)
        got = list(select_batch(vector, n))
        lookup = dict(zip(ids.tolist(), values.tolist()))
        best = min(
            itertools.combinations(sorted(ids.tolist()), n),
            key=lambda subset: (-sum(lookup[i] for i in subset), tuple(sorted(subset))),
        )
        if sorted(got) != sorted(best):
            return False, f"trial {trial}: {sorted(got)} != {sorted(best)}"
    return True, "30 randomized pools match exhaustive enumeration"


def check_monotone_invariance():
    """Strictly increasing score transforms leave the selection unchanged."""
    rng = np.random.default_rng(3)
    ids = np.arange(40, dtype=np.int64)
    values = rng.random(40)
    base = ScoreVector(scores=values, object_ids=ids, measure=MeasureKind.ENTROPY)
    reference = list(select_batch(base, 12))
    for transform in (np.exp, lambda v: 3.0 * v + 7.0, np.arctan):
        moved = ScoreVector(
            scores=transform(values), object_ids=ids, measure=MeasureKind.ENTROPY
        )
        if list(select_batch(moved, 12)) != reference:
            return False, f"selection changed under {transform}"
    return True, "selection invariant under exp, affine and arctan transforms"


def check_confidence_monotone_and_termination():
    """S is monotone in the threshold; pseudo-labeling respects its bound."""
    rng = np.random.default_rng(5)
    rows = rng.dirichlet(np.ones(4) * 0.5, size=300)
    dist = _dist_of(rows)
    previous = set()
    for threshold in np.linspace(-1.0, 0.0, 9):
        current = set(confident_subset(dist, threshold).tolist())
        if not previous <= current:
            return False, f"S shrank when relaxing the threshold to {threshold}"
        previous = current

    pool, test = synth_blobs_split(3, 80, 20, 8, separation=8.0, seed=11)
    partition = PoolPartition.for_active_learning(pool, test)
    oracle = LabelOracle(partition)
    move_to_labeled(partition, partition.unlabeled_ids[:30])
    net = NetworkConfig(input_dim=8, hidden_neurons=16, num_classes=3, epochs=3)
    state = train(
        init_network(net, 1), partition.labeled_pool(), epochs=3, seed=2
    )
    unlabeled_before = partition.unlabeled_count
    min_added = 10
    result = run_pseudo_labeling(
        state, partition,
        PseudoLabelingConfig(threshold=-0.5, min_added=min_added, seed=3),
        oracle,
    )
    bound = math.ceil(unlabeled_before / (min_added + 1)) + 1
    ok = result.iterations <= bound
    return ok, f"iterations {result.iterations} <= bound {bound}"


def check_knn_identities():
    xs = np.array([-1.0, -0.5, 0.0])
    ys = np.array([0.9, 0.8, 0.7])
    if knn_regress(xs, ys, 1, -0.5) != 0.8:
        return False, "k=1 does not interpolate a training point"
    if not math.isclose(knn_regress(xs, ys, 3, 0.33), ys.mean()):
        return False, "k=n does not return the global mean"
    if not math.isclose(knn_regress(xs, ys, 2, -0.9), 0.85):
        return False, "two-neighbor mean mismatch"
    return True, "k=1 interpolation, k=n global mean, 2-NN example"


def check_gradient():
    pool = synth_blobs(3, 2, 12, separation=4.0, seed=21)
    net = NetworkConfig(input_dim=12, hidden_neurons=9, num_classes=3, dropout_rate=0.0)
    state = init_network(net, 4)
    worst = gradient_check(state, pool, seed=5)
    return worst < 1e-3, f"max relative gradient error = {worst:.2e}"


def check_partition_moves():
    """Disjointness and conservation hold under random move sequences."""
    rng = np.random.default_rng(33)
    pool = synth_blobs(4, 50, 6, separation=2.0, seed=9)
    partition = PoolPartition.for_active_learning(pool)
    total = partition.unlabeled_count
    for _ in range(25):
        u = partition.unlabeled_ids
        if len(u) == 0:
            break
        batch = rng.choice(u, size=int(rng.integers(1, min(9, len(u)) + 1)), replace=False)
        move_to_labeled(partition, batch)
        overlap = np.intersect1d(partition.labeled_ids, partition.unlabeled_ids)
        if len(overlap):
            return False, "L and U overlap after a move"
        if partition.labeled_count + partition.unlabeled_count != total:
            return False, "|L| + |U| is not conserved"
    return True, "25 randomized moves preserve disjointness and conservation"


def check_cli_determinism():
    """Two CLI runs of the same config produce byte-identical CSV files."""
    from alab.cli import main

    config = {
        "dataset": {"kind": "blobs", "classes": 3, "per_class": 40, "dim": 8,
                     "separation": 5.0, "test_per_class": 20, "data_seed": 2},
        "network": {"hidden_neurons": 12, "epochs": 1},
        "experiment": {"strategy": "margin", "mode": "cumulative", "batch_size": 15,
                        "seeds": [1, 2], "stop_after_labeled": 60},
    }
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        config_path = tmp / "config.json"
        config_path.write_text(json.dumps(config))
        outputs = []
        for run_dir in ("one", "two"):
            out = tmp / run_dir
            code = main(["run", "--config", str(config_path), "--out", str(out)])
            if code != 0:
                return False, f"cli run exited with {code}"
            outputs.append(sorted(p for p in out.rglob("*.csv")))
        pairs = list(zip(*outputs))
        if not pairs:
            return False, "no CSV files produced"
        for a, b in pairs:
            if not filecmp.cmp(a, b, shallow=False):
                return False, f"{a.name} differs between reruns"
    return True, f"{len(pairs)} CSV files byte-identical across reruns"


def check_mim_self_consistency():
    """Logged batch informativeness can be recomputed from scratch."""
    from alab.loop import ActiveLearningDriver, ExperimentConfig
    from alab.seeding import child_sequence

    pool = synth_blobs(3, 60, 8, separation=4.0, seed=14)
    partition = PoolPartition.for_active_learning(pool)
    net = NetworkConfig(input_dim=8, hidden_neurons=10, num_classes=3)
    config = ExperimentConfig(
        strategy=MeasureKind.MARGIN, mode=TrainingMode.CUMULATIVE,
        batch_size=20, selection_net=net, stop_after_labeled=20, seed=77,
    )
    driver = ActiveLearningDriver(config, partition, LabelOracle(partition))
    record = driver.run()[0]

    replay_state = init_network(net, child_sequence(77, "init"))
    replay_dist = predict(replay_state, pool)
    batch = partition.labeled_ids[:20]
    replayed = mean_informativeness(
        score(MeasureKind.MARGIN, replay_dist,
              child_sequence(77, "mim", 1, "margin")),
        batch,
    )
    delta = abs(replayed - record.mim[MeasureKind.MARGIN])
    return delta < 1e-12, f"recomputed MIM differs by {delta:.2e}"


CHECKS = [
    ("measure formulas vs brute force", check_measure_formulas),
    ("batch selection vs enumeration", check_select_batch_bruteforce),
    ("monotone-transform invariance", check_monotone_invariance),
    ("confident-subset monotonicity and termination", check_confidence_monotone_and_termination),
    ("k-NN regression identities", check_knn_identities),
    ("analytic gradients vs finite differences", check_gradient),
    ("partition disjointness under random moves", check_partition_moves),
    ("logged informativeness self-consistency", check_mim_self_consistency),
    ("end-to-end CSV determinism", check_cli_determinism),
]


def run_all(print_lines: bool = True) -> bool:
    all_passed = True
    for name, check in CHECKS:
        try:
            passed, detail = check()
        except Exception as exc:  # a crashing check is a failing check
            passed, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_passed &= passed
        if print_lines:
            print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return all_passed
