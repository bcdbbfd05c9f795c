#!/usr/bin/env python3
"""Regenerate the bundled datasets under data/.

  iris.csv                          from scikit-learn's packaged copy
  mnist5k-images-idx3-ubyte         from the 5,000-digit MNIST subset shipped
  mnist5k-labels-idx1-ubyte         inside the mlxtend wheel (500 per class)

Usage: make_datasets.py MLXTEND_WHEEL [OUT_DIR]
"""
import gzip
import os
import struct
import sys
import zipfile


def write_iris(out_dir):
    import sklearn
    src = os.path.join(os.path.dirname(sklearn.__file__), "datasets", "data", "iris.csv")
    with open(src) as f:
        header = f.readline().strip().split(",")
        names = header[2:]
        rows = [line.strip().split(",") for line in f if line.strip()]
    with open(os.path.join(out_dir, "iris.csv"), "w") as f:
        f.write("sepal_length,sepal_width,petal_length,petal_width,species\n")
        for r in rows:
            f.write(",".join(r[:4]) + "," + names[int(r[4])] + "\n")


def write_mnist(wheel, out_dir):
    z = zipfile.ZipFile(wheel)
    text = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    rows = [line.split(",") for line in text.strip().split("\n")]
    n = len(rows)
    with open(os.path.join(out_dir, "mnist5k-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        for r in rows:
            f.write(bytes(int(float(v)) for v in r[:-1]))
    with open(os.path.join(out_dir, "mnist5k-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(bytes(int(float(r[-1])) for r in rows))


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    out = sys.argv[2] if len(sys.argv) > 2 else os.path.join(os.path.dirname(__file__), "..", "data")
    os.makedirs(out, exist_ok=True)
    write_iris(out)
    write_mnist(sys.argv[1], out)
