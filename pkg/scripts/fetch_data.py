#!/usr/bin/env python3
"""Download the datasets for the image and multitask experiments.

Not part of the library API: the loaders only read local files.  Usage:

    python scripts/fetch_data.py --dest ~/distillery-data [mnist] [cifar] [sarcos]

With no dataset names, fetches all three.  Afterwards point the CLI at
the destination with --data-dir or DISTILLERY_DATA_DIR.

SARCOS ships as a MATLAB container; this script converts it to the
28-column CSV (21 inputs, 7 torques) that load_multitask_csv expects,
which needs scipy installed.
"""

import argparse
import gzip
import shutil
import sys
import tarfile
import urllib.request
from pathlib import Path

MNIST_BASE = "https://ossci-datasets.s3.amazonaws.com/mnist/"
MNIST_FILES = [
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
]
CIFAR_URL = "https://www.cs.toronto.edu/~kriz/cifar-10-binary.tar.gz"
SARCOS_URLS = [
    "http://www.gaussianprocess.org/gpml/data/sarcos_inv.mat",
    "http://www.gaussianprocess.org/gpml/data/sarcos_inv_test.mat",
]


def download(url, dest: Path):
    if dest.exists():
        print(f"  {dest.name}: already present")
        return
    print(f"  {url} -> {dest}")
    with urllib.request.urlopen(url) as r, open(dest, "wb") as f:
        shutil.copyfileobj(r, f)


def fetch_mnist(root: Path):
    out = root / "mnist"
    out.mkdir(parents=True, exist_ok=True)
    for name in MNIST_FILES:
        gz = out / name
        download(MNIST_BASE + name, gz)
        plain = out / name[:-3]
        if not plain.exists():
            with gzip.open(gz, "rb") as src, open(plain, "wb") as dst:
                shutil.copyfileobj(src, dst)


def fetch_cifar(root: Path):
    tgz = root / "cifar-10-binary.tar.gz"
    download(CIFAR_URL, tgz)
    marker = root / "cifar-10-batches-bin" / "data_batch_1.bin"
    if not marker.exists():
        with tarfile.open(tgz) as tar:
            tar.extractall(root)


def fetch_sarcos(root: Path):
    from scipy.io import loadmat  # heavyweight import kept local

    out = root / "sarcos"
    out.mkdir(parents=True, exist_ok=True)
    for url in SARCOS_URLS:
        mat_path = out / url.rsplit("/", 1)[1]
        download(url, mat_path)
        key = mat_path.stem
        csv_path = out / f"{key}.csv"
        if not csv_path.exists():
            rows = loadmat(mat_path)[key]
            assert rows.shape[1] == 28, f"expected 28 columns, got {rows.shape}"
            with open(csv_path, "w") as f:
                for row in rows:
                    f.write(",".join(repr(float(v)) for v in row) + "\n")
            print(f"  wrote {csv_path} ({len(rows)} rows)")


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("datasets", nargs="*", default=[],
                        choices=["mnist", "cifar", "sarcos", []],
                        help="which datasets to fetch (default: all)")
    parser.add_argument("--dest", default="data", help="destination directory")
    args = parser.parse_args()
    root = Path(args.dest)
    root.mkdir(parents=True, exist_ok=True)
    wanted = args.datasets or ["mnist", "cifar", "sarcos"]
    for name in wanted:
        print(f"fetching {name} ...")
        {"mnist": fetch_mnist, "cifar": fetch_cifar, "sarcos": fetch_sarcos}[name](root)
    print(f"done; set DISTILLERY_DATA_DIR={root.resolve()}")


if __name__ == "__main__":
    sys.exit(main())
