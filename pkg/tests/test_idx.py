"""IDX binary format parsing: bit-exact layout, strict error handling."""

import gzip
import os
import struct
from pathlib import Path

import numpy as np
import pytest

from aeqsim.idx import (BadMagic, IdxError, Truncated, find_dataset,
                        load_dataset, load_images, load_labels, read_idx,
                        write_idx_images, write_idx_labels)


def _image_file(tmp_path, n=3, h=4, w=5, gz=False):
    rng = np.random.default_rng(0)
    images = rng.integers(0, 256, size=(n, h, w), dtype=np.uint8)
    path = tmp_path / ("images.idx3-ubyte" + (".gz" if gz else ""))
    payload = struct.pack(">IIII", 0x803, n, h, w) + images.tobytes()
    path.write_bytes(gzip.compress(payload) if gz else payload)
    return path, images


def test_image_roundtrip(tmp_path):
    path, images = _image_file(tmp_path)
    ds = read_idx(path)
    assert ds.magic == 0x803
    assert ds.dims == (3, 4, 5)
    assert np.array_equal(ds.data, images)


def test_gzip_transparent(tmp_path):
    path, images = _image_file(tmp_path, gz=True)
    assert np.array_equal(load_images(path), images)


def test_label_file(tmp_path):
    labels = np.array([1, 7, 3], dtype=np.uint8)
    path = tmp_path / "labels.idx1-ubyte"
    path.write_bytes(struct.pack(">II", 0x801, 3) + labels.tobytes())
    assert np.array_equal(load_labels(path), labels)


def test_bad_magic(tmp_path):
    path = tmp_path / "junk.idx"
    path.write_bytes(struct.pack(">II", 0x0, 3) + b"\x00" * 3)
    with pytest.raises(BadMagic):
        read_idx(path)


def test_truncated_payload(tmp_path):
    path = tmp_path / "short.idx3-ubyte"
    # header says 10 images of 2x2, payload holds only 9
    path.write_bytes(struct.pack(">IIII", 0x803, 10, 2, 2) + b"\x00" * 36)
    with pytest.raises(Truncated):
        read_idx(path)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "long.idx1-ubyte"
    path.write_bytes(struct.pack(">II", 0x801, 2) + b"\x00" * 5)
    with pytest.raises(IdxError):
        read_idx(path)


def test_count_mismatch_between_pair(tmp_path):
    imgs, _ = _image_file(tmp_path, n=3)
    lbl = tmp_path / "labels.idx1-ubyte"
    lbl.write_bytes(struct.pack(">II", 0x801, 2) + b"\x00\x01")
    with pytest.raises(IdxError, match="count"):
        load_dataset(imgs, lbl)


def test_writers_emit_parser_compatible_files(tmp_path):
    images = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
    labels = np.array([4, 9], dtype=np.uint8)
    write_idx_images(tmp_path / "i.idx3-ubyte", images)
    write_idx_labels(tmp_path / "l.idx1-ubyte", labels)
    got_i, got_l = load_dataset(tmp_path / "i.idx3-ubyte",
                                tmp_path / "l.idx1-ubyte")
    assert np.array_equal(got_i, images)
    assert np.array_equal(got_l, labels)


def test_find_dataset_by_convention(tmp_path):
    _image_file(tmp_path)
    lbl = tmp_path / "labels.idx1-ubyte"
    lbl.write_bytes(struct.pack(">II", 0x801, 3) + b"\x00\x01\x02")
    imgs, lbls = find_dataset(tmp_path)
    assert "images" in imgs.name
    assert "labels" in lbls.name


def test_find_dataset_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        find_dataset(tmp_path)


def test_embedded_subset_parses(mnist_subset):
    images, labels = mnist_subset
    assert images.shape[1:] == (28, 28)
    assert len(images) == len(labels) >= 2000
    assert set(np.unique(labels)) <= set(range(10))


def test_canonical_train_file_when_available():
    """Count check against the canonical 60,000-image train file (skipped when
    the file is not on disk; fetch with scripts/fetch_mnist.py)."""
    candidates = [
        Path(os.environ.get("AEQSIM_MNIST_DIR", "")) / "train-images-idx3-ubyte.gz",
        Path(__file__).resolve().parents[1] / "data" / "mnist" /
        "train-images-idx3-ubyte.gz",
    ]
    path = next((p for p in candidates if p.is_file()), None)
    if path is None:
        pytest.skip("canonical MNIST train file not present")
    ds = read_idx(path)
    assert ds.magic == 0x803
    assert ds.dims == (60000, 28, 28)
    assert ds.data.shape[0] == 60000
