"""Command-line interface.

Subcommands: ``run`` (acquisition experiments), ``gpla`` (threshold sweeps and
gradual pseudo-labeling), ``bias`` (class-occurrence and darkness-bias
studies), ``bounds`` (random-start accuracy bounds), ``fetch`` (dataset
download/cache) and ``selftest`` (dataset-free property battery).

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from alab import __version__
from alab._kernels import BACKEND
from alab.analysis import aggregate_runs, alpha_bias_study, class_bias_study
from alab.config import (
    build_experiment_config,
    build_network_config,
    build_pseudo_labeling_config,
    config_seeds,
    load_config,
    resolve_dataset,
)
from alab.data import DATASETS, PoolPartition, fetch_dataset
from alab.errors import AlabError, ConfigurationError, DataError
from alab.loop import ActiveLearningDriver, LabelOracle, estimate_accuracy_bounds
from alab.pseudolabel import (
    find_threshold,
    hardest_feasible_threshold,
    run_pseudo_labeling,
)
from alab.reporting import (
    RunManifest,
    config_digest,
    write_acquisition_csv,
    write_aggregate_csv,
    write_alpha_csv,
    write_bias_csv,
    write_bounds_csv,
    write_gpla_results_csv,
    write_sweep_csv,
)
from alab.strategies import MeasureKind

DEFAULT_ALPHAS = [round(0.05 * i, 2) for i in range(21)]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _partition_for(raw: dict) -> tuple[PoolPartition, int, int]:
    train_pool, test_pool, input_dim, num_classes = resolve_dataset(raw)
    return (
        PoolPartition.for_active_learning(train_pool, test_pool),
        input_dim,
        num_classes,
    )


def _run_one_seed(raw: dict, seed: int):
    """One full acquisition run; used directly and as a process-pool worker."""
    partition, input_dim, num_classes = _partition_for(raw)
    config = build_experiment_config(raw, seed, input_dim, num_classes)
    driver = ActiveLearningDriver(config, partition, LabelOracle(partition))
    return driver.run()


def cmd_run(args) -> int:
    raw = load_config(args.config)
    digest = config_digest(raw)
    seeds = config_seeds(raw, args.seed_override)
    _, input_dim, num_classes = _partition_for(raw)  # fail fast on dataset/config
    build_experiment_config(raw, seeds[0], input_dim, num_classes)

    out = Path(args.out)
    manifest = RunManifest(
        config_digest=digest, seeds=seeds, artifact_version=__version__,
        started=_now(), backend=BACKEND,
    )
    if args.parallel > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            futures = [pool.submit(_run_one_seed, raw, seed) for seed in seeds]
            streams = [f.result() for f in futures]
    else:
        streams = [_run_one_seed(raw, seed) for seed in seeds]

    for seed, records in zip(seeds, streams):
        path = out / f"seed-{seed}" / "acquisition.csv"
        write_acquisition_csv(path, records, digest, num_classes=num_classes)
        manifest.outputs.append(str(path.relative_to(out)))
    aggregate = aggregate_runs(streams)
    write_aggregate_csv(out / "aggregate.csv", aggregate, digest, runs=len(seeds))
    manifest.outputs.append("aggregate.csv")
    manifest.finished = _now()
    manifest.write(out / "manifest.json")
    print(f"wrote {len(manifest.outputs)} data files to {out}")
    return 0


def cmd_gpla(args) -> int:
    raw = load_config(args.config)
    digest = config_digest(raw)
    seeds = config_seeds(raw, args.seed_override)
    out = Path(args.out)
    manifest = RunManifest(
        config_digest=digest, seeds=seeds, artifact_version=__version__,
        started=_now(), backend=BACKEND,
    )
    rows = []
    for seed in seeds:
        partition, input_dim, num_classes = _partition_for(raw)
        meta, base = build_pseudo_labeling_config(raw, seed)
        exp = build_experiment_config(raw, seed, input_dim, num_classes)
        exp = replace(exp, stop_after_labeled=meta["labeled_budget"])
        oracle = LabelOracle(partition)
        driver = ActiveLearningDriver(exp, partition, oracle)
        driver.run()
        state = driver.selection_state

        candidates = np.linspace(-1.0, 0.0, meta["num_candidates"])
        if meta["mode"] == "sweep":
            threshold, sweep = find_threshold(
                state, partition, candidates, meta["knn_k"], oracle, base
            )
            sweep_path = out / f"seed-{seed}" / "sweep.csv"
            write_sweep_csv(sweep_path, sweep, digest)
            manifest.outputs.append(str(sweep_path.relative_to(out)))
        elif meta["mode"] == "hardest":
            threshold = hardest_feasible_threshold(
                state, partition, candidates, base.min_added
            )
        else:
            threshold = meta["threshold"]

        if threshold is None:  # no feasible threshold: pseudo-labeling impossible
            rows.append(dict(
                seed=seed, labeled_budget=meta["labeled_budget"], threshold=float("nan"),
                accuracy_before=float("nan"), accuracy_after=float("nan"),
                error_fraction=float("nan"), iterations=0, pseudo_labeled=0,
            ))
            continue
        result = run_pseudo_labeling(
            state.copy(), partition.copy(), replace(base, threshold=threshold), oracle
        )
        rows.append(dict(
            seed=seed, labeled_budget=meta["labeled_budget"], threshold=threshold,
            accuracy_before=result.accuracy_before, accuracy_after=result.accuracy_after,
            error_fraction=result.error_fraction, iterations=result.iterations,
            pseudo_labeled=result.pseudo_labeled_total,
        ))

    write_gpla_results_csv(out / "results.csv", rows, digest)
    manifest.outputs.append("results.csv")
    manifest.finished = _now()
    manifest.write(out / "manifest.json")
    print(f"wrote {len(manifest.outputs)} data files to {out}")
    return 0


def cmd_bias(args) -> int:
    raw = load_config(args.config)
    digest = config_digest(raw)
    seeds = config_seeds(raw, args.seed_override)
    section = raw.get("bias")
    if section is None:
        raise ConfigurationError("bias: section is required for this command")
    from alab.config import _BIAS_KEYS, _get, _reject_unknown  # shared validators

    _reject_unknown(section, _BIAS_KEYS, "bias")
    study = _get(section, "study", None, "bias", str,
                 lambda v: v in ("class", "alpha"), "class or alpha")
    if study is None:
        raise ConfigurationError("bias.study: required")

    out = Path(args.out)
    manifest = RunManifest(
        config_digest=digest, seeds=seeds, artifact_version=__version__,
        started=_now(), backend=BACKEND,
    )
    seed = seeds[0]
    if study == "class":
        train_pool, _, input_dim, num_classes = resolve_dataset(raw)
        net = build_network_config(raw.get("network"), input_dim, num_classes)
        strategy_raw = section.get("strategy")
        if strategy_raw is None:
            raise ConfigurationError("bias.strategy: required for the class study")
        try:
            strategy = MeasureKind(strategy_raw)
        except ValueError:
            raise ConfigurationError(
                f"bias.strategy: expected one of {[m.value for m in MeasureKind]}"
            ) from None
        summary = class_bias_study(
            strategy,
            train_pool,
            _get(section, "images_per_repeat", 1000, "bias", int, lambda v: v >= 1,
                 "positive integer"),
            _get(section, "repeats", 200, "bias", int, lambda v: v >= 1,
                 "positive integer"),
            net,
            seed,
        )
        write_bias_csv(out / "bias_class.csv", summary, digest)
        manifest.outputs.append("bias_class.csv")
    else:
        # noise images are always 28x28, independent of the configured dataset
        net = build_network_config(raw.get("network"), 784, 10)
        measures_raw = section.get("measures", ["margin", "entropy"])
        if not isinstance(measures_raw, list) or not measures_raw:
            raise ConfigurationError("bias.measures: expected a non-empty list")
        try:
            measures = [MeasureKind(m) for m in measures_raw]
        except ValueError:
            raise ConfigurationError(
                f"bias.measures: expected values among {[m.value for m in MeasureKind]}"
            ) from None
        alphas = section.get("alphas", DEFAULT_ALPHAS)
        curve = alpha_bias_study(
            measures,
            alphas,
            _get(section, "runs", 100, "bias", int, lambda v: v >= 1, "positive integer"),
            net,
            seed,
            images_per_alpha=_get(section, "images_per_alpha", 100, "bias", int,
                                  lambda v: v >= 1, "positive integer"),
        )
        write_alpha_csv(out / "bias_alpha.csv", curve, digest)
        manifest.outputs.append("bias_alpha.csv")

    manifest.finished = _now()
    manifest.write(out / "manifest.json")
    print(f"wrote {len(manifest.outputs)} data files to {out}")
    return 0


def cmd_bounds(args) -> int:
    raw = load_config(args.config)
    digest = config_digest(raw)
    seeds = config_seeds(raw, args.seed_override)
    section = raw.get("bounds") or {}
    from alab.config import _BOUNDS_KEYS, _get, _reject_unknown

    _reject_unknown(section, _BOUNDS_KEYS, "bounds")
    at_labeled = _get(section, "at_labeled", None, "bounds", int, lambda v: v >= 1,
                      "positive integer")

    out = Path(args.out)
    manifest = RunManifest(
        config_digest=digest, seeds=seeds, artifact_version=__version__,
        started=_now(), backend=BACKEND,
    )
    rows = []
    for seed in seeds:
        partition, input_dim, num_classes = _partition_for(raw)
        config = build_experiment_config(raw, seed, input_dim, num_classes)
        if config.random_start_size == 0:
            raise ConfigurationError(
                "experiment.random_start_size: must be positive for bounds "
                "(the random start doubles as the held-in test set)"
            )
        if at_labeled is not None:
            config = replace(config, stop_after_labeled=at_labeled)
        if config.stop_after_labeled is None:
            raise ConfigurationError(
                "bounds.at_labeled or experiment.stop_after_labeled: required"
            )
        driver = ActiveLearningDriver(config, partition, LabelOracle(partition))
        records = driver.run()
        lower, upper = estimate_accuracy_bounds(partition, config.selection_net, seed)
        rows.append(dict(
            seed=seed, labeled_count=records[-1].labeled_count, lower=lower,
            upper=upper, test_accuracy=records[-1].test_accuracy,
        ))
    write_bounds_csv(out / "bounds.csv", rows, digest)
    manifest.outputs.append("bounds.csv")
    manifest.finished = _now()
    manifest.write(out / "manifest.json")
    print(f"wrote {len(manifest.outputs)} data files to {out}")
    return 0


def cmd_fetch(args) -> int:
    images, labels = fetch_dataset(args.dataset, cache_dir=args.cache_dir)
    print(images)
    print(labels)
    return 0


def cmd_selftest(args) -> int:
    from alab import selftest  # deferred: selftest's CLI check imports this module

    return 0 if selftest.run_all() else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alab",
        description="Deterministic pool-based active learning experiments.",
    )
    parser.add_argument("--version", action="version", version=f"alab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_common(p):
        p.add_argument("--config", required=True, help="path to the JSON config file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed-override", type=int, default=None,
                       help="replace the configured seed list with this single seed")
        p.add_argument("--parallel", type=int, default=1,
                       help="number of parallel seed workers")
        return p

    with_common(sub.add_parser("run", help="acquisition experiment")).set_defaults(
        func=cmd_run, default_out="alab-out/run")
    with_common(sub.add_parser("gpla", help="gradual pseudo-labeling")).set_defaults(
        func=cmd_gpla, default_out="alab-out/gpla")
    with_common(sub.add_parser("bias", help="selection-bias studies")).set_defaults(
        func=cmd_bias, default_out="alab-out/bias")
    with_common(sub.add_parser("bounds", help="random-start accuracy bounds")).set_defaults(
        func=cmd_bounds, default_out="alab-out/bounds")

    fetch = sub.add_parser("fetch", help="download and cache a dataset")
    fetch.add_argument("dataset", choices=sorted(DATASETS))
    fetch.add_argument("--cache-dir", default=None)
    fetch.set_defaults(func=cmd_fetch)

    sub.add_parser("selftest", help="dataset-free property battery").set_defaults(
        func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "out", None) is None and hasattr(args, "default_out"):
        args.out = args.default_out
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except AlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
