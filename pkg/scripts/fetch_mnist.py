#!/usr/bin/env python3
"""Download the canonical MNIST IDX files and verify their checksums.

Usage: python scripts/fetch_mnist.py [DEST_DIR]   (default: ./data/mnist)

Tries a list of mirrors; corporate proxies that mirror GitHub work too via
the AEQSIM_MNIST_BASE_URL override (a base URL that serves the four
canonical .gz files by name).
"""

import gzip
import hashlib
import sys
import urllib.request
from pathlib import Path

FILES = {
    # name: md5 of the *decompressed* payload
    "train-images-idx3-ubyte.gz": "6bbc9ace898e44ae57da46a324031adb",
    "train-labels-idx1-ubyte.gz": "a25bea736e30d166cdddb491f175f624",
    "t10k-images-idx3-ubyte.gz": "2646ac647ad5339dbf082846283269ea",
    "t10k-labels-idx1-ubyte.gz": "27ae3e4e09519cfbb04c329615203637",
}

MIRRORS = [
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "https://raw.githubusercontent.com/fgnt/mnist/master/",
]


def fetch(dest: Path) -> None:
    import os

    override = os.environ.get("AEQSIM_MNIST_BASE_URL")
    mirrors = [override] + MIRRORS if override else MIRRORS
    dest.mkdir(parents=True, exist_ok=True)
    for name, md5 in FILES.items():
        target = dest / name
        if target.exists() and _ok(target, md5):
            print(f"{name}: already present")
            continue
        for base in mirrors:
            url = base.rstrip("/") + "/" + name
            try:
                print(f"{name}: fetching {url}")
                urllib.request.urlretrieve(url, target)
            except OSError as exc:
                print(f"  failed: {exc}")
                continue
            if _ok(target, md5):
                break
            print("  checksum mismatch, trying next mirror")
        else:
            raise SystemExit(f"could not fetch {name} from any mirror")
    print(f"MNIST ready in {dest}")


def _ok(path: Path, md5: str) -> bool:
    try:
        payload = gzip.decompress(path.read_bytes())
    except OSError:
        return False
    return hashlib.md5(payload).hexdigest() == md5


if __name__ == "__main__":
    fetch(Path(sys.argv[1]) if len(sys.argv) > 1 else Path("data/mnist"))
