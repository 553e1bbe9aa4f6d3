"""Regenerate the bundled synthetic component dataset.

Accuracy is a smooth function of five components (learning rate, epochs,
batch size, parameter count, augmentation breadth) plus noise, so the
importance analysis has real structure to find and the recommender has
something to optimize.  A few columns carry missing cells to exercise
imputation.  Deterministic for a fixed seed; the checked-in CSV was made
with the defaults below.

Usage: python scripts/make_synthetic_dataset.py [--rows 200] [--seed 7]
       [--out src/dlrec/data/synthetic_dataset.csv]
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from dlrec.dataset import ModelRecord, TabularDataset, save_csv
from dlrec.space import default_space, sample_config

MISSING_RATE = 0.05
MISSING_COLUMNS = ("Initialization", "Cosine similarity", "Number of GPU")


def accuracy_model(config: dict, rng: np.random.Generator) -> float:
    lr = config["Learning rate"]
    epochs = config["Epochs"]
    batch = config["Batch size"]
    params = config["Size of parameter"]
    n_aug = len(config["Data Augmentation"])

    score = 40.0
    score += 16.0 * math.exp(-((math.log(lr) - math.log(3e-3)) ** 2) / 8.0)
    score += 13.0 * math.log(epochs / 20.0) / math.log(250.0)
    score -= 11.0 * ((math.log2(batch) - 8.0) / 5.0) ** 2
    score += 11.0 * math.log(params / 1.8e5) / math.log(632.0 / 0.18)
    score += 9.0 * n_aug / 23.0
    score += rng.normal(0.0, 0.15)
    return float(min(max(score, 1.0), 99.0))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="src/dlrec/data/synthetic_dataset.csv")
    args = parser.parse_args()

    space = default_space()
    rng = np.random.default_rng(args.seed)
    records = []
    for i in range(args.rows):
        config = sample_config(space, rng)
        accuracy = accuracy_model(config, rng)
        for name in MISSING_COLUMNS:
            if rng.random() < MISSING_RATE:
                del config[name]
        records.append(
            ModelRecord(values=config, top1_accuracy=accuracy, source_id=f"synthetic-{i:03d}")
        )
    ds = TabularDataset(space=space, records=tuple(records))
    save_csv(ds, args.out)
    ys = [r.top1_accuracy for r in records]
    print(f"wrote {args.out}: {len(records)} rows, accuracy in [{min(ys):.2f}, {max(ys):.2f}]")


if __name__ == "__main__":
    main()
