#!/usr/bin/env python3
# Copyright 2026 The edgevqc Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the 5000-image MNIST digits subset shipped with mlxtend as IDX files.

The subset holds 500 images per digit. Within each digit the first
``--train-per-class`` images (file order) go to the train split and the rest
to the test split. Output files are gzip-compressed IDX, readable by
``edgevqc::load_idx``.

    python3 tools/make_mnist_subset.py --csv mnist_5k.csv.gz --out data/mnist5k

Without ``--csv`` the script looks for an installed mlxtend package.
"""

import argparse
import gzip
import os
import struct
import sys


def find_csv():
    try:
        import mlxtend.data
    except ImportError:
        sys.exit("mlxtend not installed; pass --csv path/to/mnist_5k.csv.gz")
    return os.path.join(os.path.dirname(mlxtend.data.__file__), "data", "mnist_5k.csv.gz")


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    # mtime=0 keeps the archives byte-reproducible.
    with open(path, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", mtime=0) as f:
        f.write(header)
        f.write(bytes(payload))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--csv", default=None)
    ap.add_argument("--out", default="data/mnist5k")
    ap.add_argument("--train-per-class", type=int, default=400)
    args = ap.parse_args()

    rows = []
    with gzip.open(args.csv or find_csv(), "rt") as f:
        for line in f:
            vals = [int(float(v)) for v in line.strip().split(",")]
            rows.append((vals[:-1], vals[-1]))

    seen = [0] * 10
    splits = {"train": ([], []), "t10k": ([], [])}
    for pixels, label in rows:
        if len(pixels) != 784 or not 0 <= label <= 9:
            sys.exit("unexpected row shape")
        split = "train" if seen[label] < args.train_per_class else "t10k"
        seen[label] += 1
        splits[split][0].extend(pixels)
        splits[split][1].append(label)

    os.makedirs(args.out, exist_ok=True)
    for name, (pixels, labels) in splits.items():
        n = len(labels)
        write_idx(os.path.join(args.out, f"{name}-images-idx3-ubyte.gz"), 0x803, (n, 28, 28), pixels)
        write_idx(os.path.join(args.out, f"{name}-labels-idx1-ubyte.gz"), 0x801, (n,), labels)
        print(f"{name}: {n} images")


if __name__ == "__main__":
    main()
