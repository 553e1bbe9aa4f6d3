"""Static performance predictor: seeded regression forest plus grid tuner.

The forest maps an encoded configuration straight to predicted Top-1
accuracy, so search never waits on a training run.  Trees are grown from
per-tree generators derived by hashing ``(seed, tree_index)``: fits are
bit-identical across runs and across serial/parallel execution, and a
forest with fewer estimators is an exact prefix of a larger one fitted
with the same seed (which the grid tuner exploits).
"""

from __future__ import annotations

import json
import math
import zipfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _ctree
from .encoding import EncodingSchema
from .errors import LoadFailure, ValidationFailure

MODEL_FORMAT_VERSION = 1

GRID_N_ESTIMATORS = (5, 10, 30, 50, 80, 100, 150, 180, 200, 250, 280, 300)
GRID_MAX_DEPTH = (3, 5, 10, 15)


class ShapeError(ValidationFailure):
    pass


class ModelFormatError(LoadFailure):
    pass


@dataclass(frozen=True)
class RegressionTree:
    """Flattened CART arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    max_depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
        return _ctree.predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X)


@dataclass
class ForestModel:
    trees: tuple[RegressionTree, ...]
    n_estimators: int
    max_depth: int
    min_leaf: int
    feature_subsample: int
    seed: int
    n_features: int
    schema_fingerprint: str | None = None
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    def packed(self) -> tuple:
        if self._packed is None:
            offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
            for i, tree in enumerate(self.trees):
                offsets[i + 1] = offsets[i] + tree.n_nodes
            self._packed = (
                np.concatenate([t.feature for t in self.trees]),
                np.concatenate([t.threshold for t in self.trees]),
                np.concatenate([t.left for t in self.trees]),
                np.concatenate([t.right for t in self.trees]),
                np.concatenate([t.value for t in self.trees]),
                offsets,
            )
        return self._packed


def _tree_streams(seed: int, tree_index: int) -> tuple[np.random.Generator, int]:
    """Bootstrap generator and split-search seed hashed from (seed, index)."""
    root = np.random.SeedSequence(entropy=seed, spawn_key=(tree_index,))
    boot_ss, feat_ss = root.spawn(2)
    return np.random.default_rng(boot_ss), int(feat_ss.generate_state(1, np.uint64)[0])


def _canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    # bootstrap indexes rows by position after this sort, making the fit
    # invariant to the caller's row order
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def default_feature_subsample(n_features: int) -> int:
    return max(1, math.ceil(n_features / 3))


def fit_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int,
    min_leaf: int = 1,
    feature_subsample: int | None = None,
    seed: int = 0,
    sample_idx: np.ndarray | None = None,
) -> RegressionTree:
    """Grow one tree with greedy variance-reduction splits.

    Splitting stops on the depth cap, the per-leaf sample floor, or a
    constant target.  Candidate columns at each node are a
    seed-deterministic sample of ``feature_subsample`` columns.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0 or len(X) != len(y):
        raise ShapeError(f"bad training shapes: X {X.shape}, y {y.shape}")
    if max_depth < 0 or min_leaf < 1:
        raise ValidationFailure("max_depth must be >= 0 and min_leaf >= 1")
    if feature_subsample is None:
        feature_subsample = X.shape[1]
    if sample_idx is None:
        sample_idx = np.arange(len(X), dtype=np.int64)
    arrays = _ctree.grow_tree(
        X, y, np.ascontiguousarray(sample_idx, dtype=np.int64),
        max_depth, min_leaf, feature_subsample, np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
    )
    return RegressionTree(*arrays, max_depth=max_depth)


def _grow_forest_trees(
    X: np.ndarray,
    y: np.ndarray,
    n_estimators: int,
    max_depth: int,
    seed: int,
    min_leaf: int,
    feature_subsample: int,
    bootstrap: bool,
    n_jobs: int,
) -> tuple[RegressionTree, ...]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    order = _canonical_order(X, y)
    Xs, ys = X[order], y[order]
    n = len(Xs)

    def one(i: int) -> RegressionTree:
        boot_rng, feat_seed = _tree_streams(seed, i)
        if bootstrap:
            idx = boot_rng.integers(0, n, size=n, dtype=np.int64)
        else:
            idx = np.arange(n, dtype=np.int64)
        return fit_tree(Xs, ys, max_depth, min_leaf, feature_subsample, seed=feat_seed, sample_idx=idx)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = tuple(pool.map(one, range(n_estimators)))
    else:
        trees = tuple(one(i) for i in range(n_estimators))
    return trees


def fit_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_estimators: int,
    max_depth: int,
    seed: int = 0,
    min_leaf: int = 1,
    feature_subsample: int | None = None,
    bootstrap: bool = True,
    schema: EncodingSchema | None = None,
    n_jobs: int = 1,
) -> ForestModel:
    """Fit ``n_estimators`` trees, each on a bootstrap resample of size n.

    ``bootstrap=False`` is a test hook that trains every tree on the full
    sample.  ``n_jobs > 1`` fits trees in threads; assembly stays ordered
    by tree index, so parallel and serial fits are identical.
    """
    X = np.asarray(X, dtype=np.float64)
    if feature_subsample is None:
        feature_subsample = default_feature_subsample(X.shape[1])
    trees = _grow_forest_trees(
        X, y, n_estimators, max_depth, seed, min_leaf, feature_subsample, bootstrap, n_jobs
    )
    return ForestModel(
        trees=trees,
        n_estimators=n_estimators,
        max_depth=max_depth,
        min_leaf=min_leaf,
        feature_subsample=feature_subsample,
        seed=seed,
        n_features=X.shape[1],
        schema_fingerprint=schema.fingerprint() if schema is not None else None,
    )


def predict_batch(model: ForestModel, X: np.ndarray) -> np.ndarray:
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    if X.shape[1] != model.n_features:
        raise ShapeError(f"model expects {model.n_features} features, got {X.shape[1]}")
    feature, threshold, left, right, value, offsets = model.packed()
    return _ctree.predict_forest(feature, threshold, left, right, value, offsets, X)


def predict(model: ForestModel, x: np.ndarray) -> float:
    """Mean over tree outputs for one encoded configuration."""
    return float(predict_batch(model, np.asarray(x, dtype=np.float64).reshape(1, -1))[0])


@dataclass(frozen=True)
class TunerResult:
    best_n_estimators: int
    best_max_depth: int
    cv_mse: dict[tuple[int, int], float]


def grid_search(
    X: np.ndarray,
    y: np.ndarray,
    folds: int = 5,
    seed: int = 0,
    eval_fn=None,
    n_estimators_grid: tuple[int, ...] = GRID_N_ESTIMATORS,
    max_depth_grid: tuple[int, ...] = GRID_MAX_DEPTH,
    min_leaf: int = 1,
    feature_subsample: int | None = None,
) -> TunerResult:
    """Exhaustive tuning of (n_estimators, max_depth) by k-fold CV MSE.

    Ties break toward smaller ``n_estimators``, then smaller ``max_depth``.
    Because a k-tree forest is an exact prefix of the largest forest for
    the same seed, each (fold, depth) pair fits the largest forest once
    and scores every estimator count from cumulative tree predictions.
    ``eval_fn(n_estimators, max_depth) -> mse`` replaces cross-validation
    entirely (test hook for injected oracles).
    """
    cv_mse: dict[tuple[int, int], float] = {}
    if eval_fn is not None:
        for n_est in n_estimators_grid:
            for depth in max_depth_grid:
                cv_mse[(n_est, depth)] = float(eval_fn(n_est, depth))
    else:
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        n = len(X)
        if folds < 2:
            raise ValidationFailure("folds must be >= 2")
        if n < folds:
            raise ValidationFailure(f"need at least {folds} rows, got {n}")
        if feature_subsample is None:
            feature_subsample = default_feature_subsample(X.shape[1])
        max_n = max(n_estimators_grid)
        perm = np.random.default_rng(seed).permutation(n)
        chunks = np.array_split(perm, folds)
        sums = {cell: 0.0 for cell in ((ne, d) for ne in n_estimators_grid for d in max_depth_grid)}
        for f in range(folds):
            test_idx = chunks[f]
            train_idx = np.concatenate([chunks[g] for g in range(folds) if g != f])
            X_tr, y_tr = X[train_idx], y[train_idx]
            X_te, y_te = X[test_idx], y[test_idx]
            for depth in max_depth_grid:
                trees = _grow_forest_trees(
                    X_tr, y_tr, max_n, depth, seed, min_leaf, feature_subsample, True, 1
                )
                per_tree = np.stack([t.predict(X_te) for t in trees], axis=1)
                cum = np.cumsum(per_tree, axis=1)
                for n_est in n_estimators_grid:
                    pred = cum[:, n_est - 1] / n_est
                    sums[(n_est, depth)] += float(np.mean((pred - y_te) ** 2))
        cv_mse = {cell: total / folds for cell, total in sums.items()}

    best_cell = None
    best_mse = math.inf
    for n_est in sorted(n_estimators_grid):
        for depth in sorted(max_depth_grid):
            mse = cv_mse[(n_est, depth)]
            if mse < best_mse:
                best_mse = mse
                best_cell = (n_est, depth)
    assert best_cell is not None
    return TunerResult(best_n_estimators=best_cell[0], best_max_depth=best_cell[1], cv_mse=cv_mse)


def save(model: ForestModel, path: str) -> None:
    """Persist a model; ``load(save(m))`` predicts bit-identically."""
    meta = {
        "version": MODEL_FORMAT_VERSION,
        "n_estimators": model.n_estimators,
        "max_depth": model.max_depth,
        "min_leaf": model.min_leaf,
        "feature_subsample": model.feature_subsample,
        "seed": model.seed,
        "n_features": model.n_features,
        "schema_fingerprint": model.schema_fingerprint,
        "tree_max_depths": [t.max_depth for t in model.trees],
    }
    feature, threshold, left, right, value, offsets = model.packed()
    n_samples = np.concatenate([t.n_samples for t in model.trees])
    np.savez_compressed(
        path,
        meta=np.array(json.dumps(meta)),
        offsets=offsets,
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        value=value,
        n_samples=n_samples,
    )


def load(path: str) -> ForestModel:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            offsets = data["offsets"]
            arrays = {k: data[k] for k in ("feature", "threshold", "left", "right", "value", "n_samples")}
    except FileNotFoundError as exc:
        raise LoadFailure(f"model file {path!r} not found") from exc
    except (OSError, zipfile.BadZipFile, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"model file {path!r} is corrupt or unreadable: {exc}") from exc
    if meta.get("version") != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"model file {path!r} has format version {meta.get('version')}, expected {MODEL_FORMAT_VERSION}"
        )
    trees = []
    for i, depth in enumerate(meta["tree_max_depths"]):
        sl = slice(offsets[i], offsets[i + 1])
        trees.append(
            RegressionTree(
                feature=arrays["feature"][sl].copy(),
                threshold=arrays["threshold"][sl].copy(),
                left=arrays["left"][sl].copy(),
                right=arrays["right"][sl].copy(),
                value=arrays["value"][sl].copy(),
                n_samples=arrays["n_samples"][sl].copy(),
                max_depth=int(depth),
            )
        )
    return ForestModel(
        trees=tuple(trees),
        n_estimators=meta["n_estimators"],
        max_depth=meta["max_depth"],
        min_leaf=meta["min_leaf"],
        feature_subsample=meta["feature_subsample"],
        seed=meta["seed"],
        n_features=meta["n_features"],
        schema_fingerprint=meta["schema_fingerprint"],
    )
