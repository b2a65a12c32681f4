"""Synthetic pools: Gaussian class blobs and darkened noise images."""

from __future__ import annotations

import numpy as np

from alab.data.pool import ObjectPool
from alab.errors import ContractViolation
from alab.seeding import stream

NOISE_IMAGE_DIM = 784  # 28x28

__all__ = ["NOISE_IMAGE_DIM", "noise_images", "synth_blobs", "synth_blobs_split"]


def _rng_of(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else stream(seed)


def _rescale_unit(samples: np.ndarray) -> np.ndarray:
    # per-feature min-max into [0, 1]; degenerate columns collapse to 0.5
    lo = samples.min(axis=0)
    span = samples.max(axis=0) - lo
    degenerate = span == 0.0
    out = (samples - lo) / np.where(degenerate, 1.0, span)
    out[:, degenerate] = 0.5
    return out


def _blob_samples(num_classes, per_class, dim, separation, rng):
    if num_classes < 1 or per_class < 1 or dim < 1:
        raise ContractViolation("num_classes, per_class and dim must all be >= 1")
    centers = rng.standard_normal((num_classes, dim)) * (
        separation / np.sqrt(2.0 * dim)
    )
    labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
    samples = rng.standard_normal((num_classes * per_class, dim)) + centers[labels]
    return samples, labels


def synth_blobs(num_classes: int, per_class: int, dim: int, separation: float,
                seed) -> ObjectPool:
    """Labeled Gaussian clusters rescaled into [0, 1].

    ``separation`` is the typical distance between class centers in units of
    the within-class standard deviation; 0 makes all classes identically
    distributed.
    """
    rng = _rng_of(seed)
    samples, labels = _blob_samples(num_classes, per_class, dim, separation, rng)
    return ObjectPool(
        _rescale_unit(samples).astype(np.float32), labels=labels, validate=False
    )


def synth_blobs_split(
    num_classes: int,
    train_per_class: int,
    test_per_class: int,
    dim: int,
    separation: float,
    seed,
    test_id_offset: int = 10_000_000,
) -> tuple[ObjectPool, ObjectPool]:
    """Train/test blob pools drawn from the *same* class centers.

    Both pools share one rescaling transform, so the test set is distributed
    like the training set; ids are made disjoint via ``test_id_offset``.
    """
    rng = _rng_of(seed)
    per_class = train_per_class + test_per_class
    samples, labels = _blob_samples(num_classes, per_class, dim, separation, rng)
    features = _rescale_unit(samples).astype(np.float32)

    within = np.arange(len(labels)) % per_class
    is_train = within < train_per_class
    train = ObjectPool(features[is_train], labels=labels[is_train], validate=False)
    test = ObjectPool(
        features[~is_train],
        ids=np.arange(int((~is_train).sum()), dtype=np.int64) + test_id_offset,
        labels=labels[~is_train],
        validate=False,
    )
    return train, test


def noise_images(count: int, alpha: float, seed) -> ObjectPool:
    """Uniform-noise 28x28 images with floor(alpha*784) random pixels blacked out."""
    if not 0.0 <= alpha <= 1.0:
        raise ContractViolation("alpha must lie in [0, 1]")
    rng = _rng_of(seed)
    features = rng.random((count, NOISE_IMAGE_DIM)).astype(np.float32)
    dark = int(alpha * NOISE_IMAGE_DIM)
    for row in features:
        row[rng.choice(NOISE_IMAGE_DIM, size=dark, replace=False)] = 0.0
    return ObjectPool(features, validate=False)
