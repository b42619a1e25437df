"""IDX binary dataset reader (images and labels).

Layout: a big-endian u32 magic whose low byte is the dimension count, one
big-endian u32 per dimension, then the raw u8 payload. Image files carry
magic 0x00000803 (3 dims), label files 0x00000801 (1 dim). Gzip-compressed
files are detected by signature and decompressed transparently.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


class IdxError(ValueError):
    pass


class BadMagic(IdxError):
    pass


class Truncated(IdxError):
    pass


@dataclass(frozen=True)
class IdxDataset:
    magic: int
    dims: tuple[int, ...]
    data: np.ndarray  # uint8, shaped per dims


def read_idx(path) -> IdxDataset:
    """Parse one IDX file (optionally gzipped), bit-exact and strict.

    Rejects unknown magics and payloads whose length disagrees with the
    declared dimensions.
    """
    path = Path(path)
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    if len(raw) < 4:
        raise Truncated(f"{path}: shorter than a magic field")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic not in (IMAGE_MAGIC, LABEL_MAGIC):
        raise BadMagic(f"{path}: magic {magic:#010x} is not an IDX u8 tensor")
    ndim = magic & 0xFF
    header_len = 4 + 4 * ndim
    if len(raw) < header_len:
        raise Truncated(f"{path}: header cut short")
    dims = struct.unpack(f">{ndim}I", raw[4:header_len])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = raw[header_len:]
    if len(payload) < expected:
        raise Truncated(
            f"{path}: header declares {expected} bytes of payload, "
            f"found {len(payload)}"
        )
    if len(payload) > expected:
        raise IdxError(
            f"{path}: {len(payload) - expected} trailing bytes after payload"
        )
    data = np.frombuffer(payload, dtype=np.uint8).reshape(dims)
    return IdxDataset(magic=magic, dims=dims, data=data)


def load_images(path) -> np.ndarray:
    ds = read_idx(path)
    if ds.magic != IMAGE_MAGIC:
        raise BadMagic(f"{path}: expected an image file (magic {IMAGE_MAGIC:#x})")
    return ds.data


def load_labels(path) -> np.ndarray:
    ds = read_idx(path)
    if ds.magic != LABEL_MAGIC:
        raise BadMagic(f"{path}: expected a label file (magic {LABEL_MAGIC:#x})")
    return ds.data


def load_dataset(images_path, labels_path) -> tuple[np.ndarray, np.ndarray]:
    """Load a paired image/label set and check the counts agree."""
    images = load_images(images_path)
    labels = load_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise IdxError(
            f"image count {images.shape[0]} != label count {labels.shape[0]}"
        )
    return images, labels


def find_dataset(directory) -> tuple[Path, Path]:
    """Locate an image/label IDX pair inside a directory.

    Matches the conventional ``*images*idx3*`` / ``*labels*idx1*`` names,
    preferring uncompressed over .gz when both exist.
    """
    directory = Path(directory)
    imgs = sorted(directory.glob("*images*idx3*"))
    lbls = sorted(directory.glob("*labels*idx1*"))
    if not imgs or not lbls:
        raise FileNotFoundError(
            f"{directory}: no IDX image/label pair (need *images*idx3* and "
            f"*labels*idx1*)"
        )
    return imgs[0], lbls[0]


def write_idx_images(path, images: np.ndarray) -> None:
    """Write a (N, H, W) uint8 tensor as an IDX image file (plain, no gzip)."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, h, w))
        f.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())
