"""Reading and writing the IDX image/label byte format.

Image files: big-endian magic 0x00000803, then item count, rows, cols as
unsigned 32-bit integers, then rows*cols unsigned bytes per image.
Label files: magic 0x00000801, item count, one unsigned byte per label.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from alab.data.pool import ObjectPool
from alab.errors import DataFormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801

__all__ = [
    "IMAGE_MAGIC",
    "LABEL_MAGIC",
    "load_idx",
    "parse_image_bytes",
    "parse_label_bytes",
    "write_idx",
]


def parse_image_bytes(raw: bytes, source: str = "image data") -> np.ndarray:
    """Decode an IDX image payload into a (count, rows*cols) uint8 matrix."""
    if len(raw) < 16:
        raise DataFormatError(f"{source}: truncated header ({len(raw)} bytes)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGE_MAGIC:
        raise DataFormatError(
            f"{source}: magic number mismatch (got {magic:#010x}, expected {IMAGE_MAGIC:#010x})"
        )
    expected = 16 + count * rows * cols
    if len(raw) != expected:
        raise DataFormatError(
            f"{source}: pixel data truncated or oversized "
            f"({len(raw)} bytes, header implies {expected})"
        )
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16)
    return pixels.reshape(count, rows * cols)


def parse_label_bytes(raw: bytes, source: str = "label data") -> np.ndarray:
    """Decode an IDX label payload into an int64 vector."""
    if len(raw) < 8:
        raise DataFormatError(f"{source}: truncated header ({len(raw)} bytes)")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != LABEL_MAGIC:
        raise DataFormatError(
            f"{source}: magic number mismatch (got {magic:#010x}, expected {LABEL_MAGIC:#010x})"
        )
    if len(raw) != 8 + count:
        raise DataFormatError(
            f"{source}: label data truncated or oversized "
            f"({len(raw)} bytes, header implies {8 + count})"
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=8).astype(np.int64)


def load_idx(images_path, labels_path, id_offset: int = 0) -> ObjectPool:
    """Load an IDX image/label file pair as a pool with pixel values / 255."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    pixels = parse_image_bytes(images_path.read_bytes(), source=str(images_path))
    labels = parse_label_bytes(labels_path.read_bytes(), source=str(labels_path))
    if len(pixels) != len(labels):
        raise DataFormatError(
            f"item count mismatch: {len(pixels)} images vs {len(labels)} labels"
        )
    features = pixels.astype(np.float32) / np.float32(255.0)
    ids = np.arange(id_offset, id_offset + len(pixels), dtype=np.int64)
    return ObjectPool(features, ids=ids, labels=labels, validate=False)


def write_idx(pool: ObjectPool, images_path, labels_path, rows: int | None = None,
              cols: int | None = None):
    """Write a labeled pool as an IDX pair (features quantized to bytes)."""
    if pool.labels is None:
        raise DataFormatError("writing an IDX pair requires a labeled pool")
    n, d = pool.features.shape
    if rows is None or cols is None:
        side = int(round(d**0.5))
        if side * side != d:
            raise DataFormatError(
                f"feature dimension {d} is not square; pass rows/cols explicitly"
            )
        rows = cols = side
    if rows * cols != d:
        raise DataFormatError(f"rows*cols = {rows * cols} does not match dimension {d}")
    pixels = np.clip(np.rint(pool.features * 255.0), 0, 255).astype(np.uint8)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(pixels.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, n))
        f.write(pool.labels.astype(np.uint8).tobytes())
