"""Dataset ingestion, pool/partition management and synthetic generators."""

from alab.data.fetch import DATASETS, cache_paths, default_cache_dir, fetch_dataset
from alab.data.idx import load_idx, write_idx
from alab.data.pool import (
    ObjectPool,
    PoolPartition,
    SplitSchedule,
    class_histogram,
    make_splits,
    move_to_labeled,
    resample_matching_class_distribution,
    split_ids,
)
from alab.data.synth import noise_images, synth_blobs, synth_blobs_split

__all__ = [
    "DATASETS",
    "ObjectPool",
    "PoolPartition",
    "SplitSchedule",
    "cache_paths",
    "class_histogram",
    "default_cache_dir",
    "fetch_dataset",
    "load_idx",
    "make_splits",
    "move_to_labeled",
    "noise_images",
    "resample_matching_class_distribution",
    "split_ids",
    "synth_blobs",
    "synth_blobs_split",
    "write_idx",
]
