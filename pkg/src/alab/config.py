"""Config-file schema: parsing, strict validation, dataset resolution.

The config file is JSON with one flat section per concern.  Unknown keys are
rejected everywhere (no silent typos), error messages name the offending
field, and the resolved dictionary (defaults filled in) is what gets hashed
into the config digest.
"""

from __future__ import annotations

import json
from pathlib import Path

from alab.data import ObjectPool, SplitSchedule, cache_paths, load_idx, synth_blobs_split
from alab.errors import ConfigurationError, DataError
from alab.loop import ExperimentConfig, TrainingMode
from alab.network import NetworkConfig
from alab.pseudolabel import PseudoLabelingConfig
from alab.strategies import MeasureKind

__all__ = [
    "build_experiment_config",
    "build_network_config",
    "build_pseudo_labeling_config",
    "config_seeds",
    "load_config",
    "resolve_dataset",
]

TEST_ID_OFFSET = 10_000_000  # keeps train/test ids disjoint across backing pools

_DATASET_KEYS = {
    "mnist": {"kind", "cache_dir"},
    "fashion": {"kind", "cache_dir"},
    "blobs": {
        "kind", "classes", "per_class", "dim", "separation", "test_per_class", "data_seed",
    },
}
_NETWORK_KEYS = {
    "hidden_neurons", "epochs", "dropout_rate", "learning_rate", "minibatch_size",
    "adam_beta1", "adam_beta2", "adam_epsilon",
}
_EXPERIMENT_KEYS = {
    "strategy", "mode", "batch_size", "random_start_size", "logged_measures",
    "stop_after_labeled", "split", "seeds",
}
_SPLIT_KEYS = {"subsets", "fraction"}
_GPLA_KEYS = {
    "labeled_budget", "min_added", "retrain_mode", "max_iterations", "mode",
    "num_candidates", "knn_k", "threshold",
}
_BIAS_KEYS = {
    "study", "strategy", "images_per_repeat", "repeats", "measures", "alphas",
    "runs", "images_per_alpha",
}
_BOUNDS_KEYS = {"at_labeled"}
_TOP_KEYS = {"dataset", "network", "evaluation_network", "experiment", "gpla", "bias", "bounds"}


def _reject_unknown(section: dict, allowed: set[str], context: str):
    if not isinstance(section, dict):
        raise ConfigurationError(f"{context}: expected an object")
    unknown = set(section) - allowed
    if unknown:
        raise ConfigurationError(f"{context}.{sorted(unknown)[0]}: unknown key")


def _get(section: dict, key: str, default, context: str, kind, predicate=None,
         describe: str = ""):
    value = section.get(key, default)
    if value is None:
        return None
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise ConfigurationError(f"{context}.{key}: expected {describe or kind.__name__}")
    if predicate is not None and not predicate(value):
        raise ConfigurationError(f"{context}.{key}: invalid value {value!r}" +
                                 (f" ({describe})" if describe else ""))
    return value


def _enum(section: dict, key: str, enum_cls, default, context: str):
    raw = section.get(key, default)
    if raw is None:
        return None
    try:
        return enum_cls(raw)
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise ConfigurationError(f"{context}.{key}: expected one of {valid}") from None


def load_config(path) -> dict:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError("config root must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigurationError(f"{sorted(unknown)[0]}: unknown top-level section")
    return raw


def build_network_config(section: dict | None, input_dim: int, num_classes: int,
                         context: str = "network") -> NetworkConfig:
    section = section or {}
    _reject_unknown(section, _NETWORK_KEYS, context)
    positive_int = lambda v: v >= 1
    try:
        return NetworkConfig(
            input_dim=input_dim,
            num_classes=num_classes,
            hidden_neurons=_get(section, "hidden_neurons", 100, context, int, positive_int,
                                "positive integer"),
            epochs=_get(section, "epochs", 1, context, int, positive_int, "positive integer"),
            dropout_rate=_get(section, "dropout_rate", 0.2, context, float,
                              lambda v: 0.0 <= v < 1.0, "fraction in [0, 1)"),
            learning_rate=_get(section, "learning_rate", 1e-3, context, float,
                               lambda v: v > 0.0, "positive real"),
            minibatch_size=_get(section, "minibatch_size", 32, context, int, positive_int,
                                "positive integer"),
            adam_beta1=_get(section, "adam_beta1", 0.9, context, float),
            adam_beta2=_get(section, "adam_beta2", 0.999, context, float),
            adam_epsilon=_get(section, "adam_epsilon", 1e-8, context, float),
        )
    except ConfigurationError:
        raise
    except Exception as exc:
        raise ConfigurationError(f"{context}: {exc}") from exc


def build_experiment_config(raw: dict, seed: int, input_dim: int,
                            num_classes: int) -> ExperimentConfig:
    section = raw.get("experiment")
    if section is None:
        raise ConfigurationError("experiment: section is required")
    _reject_unknown(section, _EXPERIMENT_KEYS, "experiment")

    strategy = _enum(section, "strategy", MeasureKind, None, "experiment")
    if strategy is None:
        raise ConfigurationError("experiment.strategy: required")
    mode = _enum(section, "mode", TrainingMode, None, "experiment")
    if mode is None:
        raise ConfigurationError("experiment.mode: required")
    batch_size = _get(section, "batch_size", None, "experiment", int,
                      lambda v: v >= 1, "positive integer")
    if batch_size is None:
        raise ConfigurationError("experiment.batch_size: required")

    logged = section.get("logged_measures")
    if logged is None:
        logged_measures = None
    else:
        if not isinstance(logged, list):
            raise ConfigurationError("experiment.logged_measures: expected a list")
        logged_measures = tuple(
            _enum({"m": value}, "m", MeasureKind, None, "experiment.logged_measures")
            for value in logged
        )

    split = section.get("split")
    schedule = None
    if split is not None:
        _reject_unknown(split, _SPLIT_KEYS, "experiment.split")
        subsets = _get(split, "subsets", None, "experiment.split", int,
                       lambda v: v >= 1, "positive integer")
        fraction = _get(split, "fraction", None, "experiment.split", float,
                        lambda v: 0.0 < v <= 1.0, "fraction in (0, 1]")
        if subsets is None or fraction is None:
            raise ConfigurationError(
                "experiment.split: both 'subsets' and 'fraction' are required"
            )
        schedule = SplitSchedule(num_subsets=subsets, release_fraction=fraction)

    network = build_network_config(raw.get("network"), input_dim, num_classes)
    eval_section = raw.get("evaluation_network")
    evaluation = (
        build_network_config(eval_section, input_dim, num_classes, "evaluation_network")
        if eval_section is not None
        else None
    )

    kwargs = dict(
        strategy=strategy,
        mode=mode,
        batch_size=batch_size,
        selection_net=network,
        evaluation_net=evaluation,
        random_start_size=_get(section, "random_start_size", 0, "experiment", int,
                               lambda v: v >= 0, "non-negative integer"),
        split_schedule=schedule,
        stop_after_labeled=_get(section, "stop_after_labeled", None, "experiment", int,
                                lambda v: v >= 1, "positive integer"),
        seed=seed,
    )
    if logged_measures is not None:
        kwargs["logged_measures"] = logged_measures
    return ExperimentConfig(**kwargs)


def config_seeds(raw: dict, override: int | None = None) -> list[int]:
    if override is not None:
        return [int(override)]
    section = raw.get("experiment") or {}
    seeds = section.get("seeds", [0])
    if (
        not isinstance(seeds, list)
        or not seeds
        or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)
    ):
        raise ConfigurationError("experiment.seeds: expected a non-empty list of integers")
    return [int(s) for s in seeds]


def build_pseudo_labeling_config(raw: dict, seed: int) -> tuple[dict, PseudoLabelingConfig]:
    section = raw.get("gpla")
    if section is None:
        raise ConfigurationError("gpla: section is required for this command")
    _reject_unknown(section, _GPLA_KEYS, "gpla")
    budget = _get(section, "labeled_budget", None, "gpla", int, lambda v: v >= 1,
                  "positive integer")
    if budget is None:
        raise ConfigurationError("gpla.labeled_budget: required")
    mode = _get(section, "mode", "hardest", "gpla", str,
                lambda v: v in ("sweep", "hardest", "fixed"), "sweep, hardest or fixed")
    threshold = _get(section, "threshold", None, "gpla", float,
                     lambda v: -1.0 <= v <= 0.0, "real in [-1, 0]")
    if mode == "fixed" and threshold is None:
        raise ConfigurationError("gpla.threshold: required when gpla.mode is 'fixed'")
    meta = {
        "labeled_budget": budget,
        "mode": mode,
        "num_candidates": _get(section, "num_candidates", 100, "gpla", int,
                               lambda v: v >= 1, "positive integer"),
        "knn_k": _get(section, "knn_k", 30, "gpla", int, lambda v: v >= 1,
                      "positive integer"),
        "threshold": threshold,
    }
    base = PseudoLabelingConfig(
        threshold=threshold if threshold is not None else 0.0,
        min_added=_get(section, "min_added", 150, "gpla", int, lambda v: v >= 1,
                       "positive integer"),
        retrain_mode=_enum(section, "retrain_mode", TrainingMode,
                           TrainingMode.CUMULATIVE.value, "gpla"),
        max_iterations=_get(section, "max_iterations", 1000, "gpla", int,
                            lambda v: v >= 1, "positive integer"),
        seed=seed,
    )
    return meta, base


def resolve_dataset(raw: dict) -> tuple[ObjectPool, ObjectPool, int, int]:
    """Build (train_pool, test_pool, input_dim, num_classes) from the config."""
    section = raw.get("dataset")
    if section is None:
        raise ConfigurationError("dataset: section is required")
    if not isinstance(section, dict) or "kind" not in section:
        raise ConfigurationError("dataset.kind: required")
    kind = section["kind"]
    if kind not in _DATASET_KEYS:
        raise ConfigurationError(
            f"dataset.kind: expected one of {sorted(_DATASET_KEYS)}"
        )
    _reject_unknown(section, _DATASET_KEYS[kind], "dataset")

    if kind == "blobs":
        classes = _get(section, "classes", 4, "dataset", int, lambda v: v >= 2,
                       "integer >= 2")
        per_class = _get(section, "per_class", 120, "dataset", int, lambda v: v >= 1,
                         "positive integer")
        dim = _get(section, "dim", 16, "dataset", int, lambda v: v >= 1,
                   "positive integer")
        separation = _get(section, "separation", 6.0, "dataset", float,
                          lambda v: v >= 0.0, "non-negative real")
        test_per_class = _get(section, "test_per_class", 50, "dataset", int,
                              lambda v: v >= 1, "positive integer")
        data_seed = _get(section, "data_seed", 7, "dataset", int)
        train, test = synth_blobs_split(
            classes, per_class, test_per_class, dim, separation, data_seed,
            test_id_offset=TEST_ID_OFFSET,
        )
        return train, test, dim, classes

    cache_dir = section.get("cache_dir")
    family = "mnist" if kind == "mnist" else "fashion"
    train_images, train_labels = cache_paths(f"{family}-train", cache_dir)
    test_images, test_labels = cache_paths(f"{family}-test", cache_dir)
    for path in (train_images, train_labels, test_images, test_labels):
        if not Path(path).exists():
            raise DataError(
                f"dataset file missing: {path}; run "
                f"`alab fetch {family}-train` and `alab fetch {family}-test` first"
            )
    train = load_idx(train_images, train_labels)
    test = load_idx(test_images, test_labels, id_offset=TEST_ID_OFFSET)
    return train, test, train.num_features, 10
