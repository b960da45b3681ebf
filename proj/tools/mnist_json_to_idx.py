#!/usr/bin/env python3
"""Convert the digit JSON files shipped with the npm `mnist` package to IDX.

The package bundles 10000 real MNIST digits as per-class JSON arrays of
pixel/255 values rounded to 3 decimals. Pixels are recovered with
round(v * 255), shuffled with a fixed seed, and split into a training set
and a held-out set written in the standard IDX layout.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_json_to_idx.py package/src/digits /path/to/mnist_dir
"""
import argparse
import json
import os
import random
import struct


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(bytes(labels))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir")
    ap.add_argument("out_dir")
    ap.add_argument("--test", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=20171019)
    args = ap.parse_args()

    samples = []
    for digit in range(10):
        with open(os.path.join(args.digits_dir, f"{digit}.json")) as f:
            data = json.load(f)["data"]
        for k in range(len(data) // 784):
            px = [min(255, max(0, round(v * 255))) for v in data[k * 784:(k + 1) * 784]]
            samples.append((px, digit))

    random.Random(args.seed).shuffle(samples)
    test, train = samples[:args.test], samples[args.test:]
    os.makedirs(args.out_dir, exist_ok=True)
    for name, part in (("train", train), ("t10k", test)):
        write_images(os.path.join(args.out_dir, f"{name}-images-idx3-ubyte"), [s[0] for s in part])
        write_labels(os.path.join(args.out_dir, f"{name}-labels-idx1-ubyte"), [s[1] for s in part])
    print(f"train={len(train)} test={len(test)} -> {args.out_dir}")


if __name__ == "__main__":
    main()
