"""Dataset retrieval: gzipped IDX files over HTTP with a verified local cache.

Mirror URLs are configuration, not constants: pass ``mirror_url`` explicitly
or set ``ALAB_MNIST_MIRROR`` / ``ALAB_FASHION_MIRROR``.  The cache directory
defaults to ``ALAB_DATA_DIR`` or ``~/.cache/alab``.  Files are decompressed,
header-verified and written atomically, so a failed download never leaves a
partial file behind.
"""

from __future__ import annotations

import gzip
import os
from dataclasses import dataclass
from pathlib import Path

import requests

from alab.data.idx import parse_image_bytes, parse_label_bytes
from alab.errors import FetchError

DEFAULT_MIRRORS = {
    "mnist": "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "fashion": "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/",
}
MIRROR_ENV = {"mnist": "ALAB_MNIST_MIRROR", "fashion": "ALAB_FASHION_MIRROR"}
CACHE_ENV = "ALAB_DATA_DIR"


@dataclass(frozen=True)
class DatasetSpec:
    family: str
    images_gz: str
    labels_gz: str
    expected_count: int


DATASETS = {
    "mnist-train": DatasetSpec(
        "mnist", "train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz", 60000
    ),
    "mnist-test": DatasetSpec(
        "mnist", "t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz", 10000
    ),
    "fashion-train": DatasetSpec(
        "fashion", "train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz", 60000
    ),
    "fashion-test": DatasetSpec(
        "fashion", "t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz", 10000
    ),
}

__all__ = ["DATASETS", "DatasetSpec", "cache_paths", "default_cache_dir", "fetch_dataset"]


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "alab"


def cache_paths(name: str, cache_dir=None) -> tuple[Path, Path]:
    """Local (images, labels) paths for dataset ``name`` in the cache."""
    if name not in DATASETS:
        raise FetchError(f"unknown dataset {name!r}; choose from {sorted(DATASETS)}")
    base = Path(cache_dir) if cache_dir is not None else default_cache_dir()
    return (base / f"{name}-images-idx3-ubyte", base / f"{name}-labels-idx1-ubyte")


def _download(url: str) -> bytes:
    try:
        response = requests.get(url, timeout=120)
        response.raise_for_status()
        return response.content
    except requests.RequestException as exc:
        raise FetchError(f"download failed for {url}: {exc}") from exc


def _gunzip(payload: bytes, url: str) -> bytes:
    try:
        return gzip.decompress(payload)
    except OSError as exc:
        raise FetchError(f"{url}: not a valid gzip stream ({exc})") from exc


def _verified(name: str, images_raw: bytes, labels_raw: bytes) -> int:
    spec = DATASETS[name]
    try:
        images = parse_image_bytes(images_raw, source=f"{name} images")
        labels = parse_label_bytes(labels_raw, source=f"{name} labels")
    except Exception as exc:
        raise FetchError(str(exc)) from exc
    if len(images) != len(labels):
        raise FetchError(
            f"{name}: image count {len(images)} does not match label count {len(labels)}"
        )
    if len(images) != spec.expected_count:
        raise FetchError(
            f"{name}: expected {spec.expected_count} items, file reports {len(images)}"
        )
    return len(images)


def _cache_is_warm(images_path: Path, labels_path: Path, name: str) -> bool:
    if not (images_path.exists() and labels_path.exists()):
        return False
    try:
        _verified(name, images_path.read_bytes(), labels_path.read_bytes())
    except FetchError:
        return False
    return True


def fetch_dataset(name: str, cache_dir=None, mirror_url: str | None = None):
    """Ensure dataset ``name`` is cached locally; return (images, labels) paths.

    Idempotent: a warm, header-verified cache is returned without touching the
    network.
    """
    images_path, labels_path = cache_paths(name, cache_dir)
    if _cache_is_warm(images_path, labels_path, name):
        return images_path, labels_path

    spec = DATASETS[name]
    mirror = mirror_url or os.environ.get(MIRROR_ENV[spec.family]) or DEFAULT_MIRRORS[spec.family]
    if not mirror.endswith("/"):
        mirror += "/"

    images_raw = _gunzip(_download(mirror + spec.images_gz), mirror + spec.images_gz)
    labels_raw = _gunzip(_download(mirror + spec.labels_gz), mirror + spec.labels_gz)
    _verified(name, images_raw, labels_raw)

    images_path.parent.mkdir(parents=True, exist_ok=True)
    for path, payload in ((images_path, images_raw), (labels_path, labels_raw)):
        tmp = path.with_suffix(".part")
        try:
            tmp.write_bytes(payload)
            os.replace(tmp, path)
        finally:
            tmp.unlink(missing_ok=True)
    return images_path, labels_path
