import numpy as np
import pytest

from dlrec import forest
from dlrec.forest import (
    GRID_MAX_DEPTH,
    GRID_N_ESTIMATORS,
    ModelFormatError,
    ShapeError,
    fit_forest,
    fit_tree,
    grid_search,
    predict,
    predict_batch,
)


def synthetic(n=500, d=8, noise=1.0, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.random((n, d))
    y = 10.0 * X[:, 0] + 5.0 * X[:, 1] + rng.normal(0.0, noise, n)
    return X, y


class TestFitTree:
    def test_constant_target_single_leaf(self):
        X = np.arange(12, dtype=float).reshape(-1, 1)
        y = np.full(12, 78.32)
        tree = fit_tree(X, y, max_depth=10)
        assert tree.n_nodes == 1
        assert tree.predict(X).tolist() == [78.32] * 12

    def test_two_point_split_at_midpoint(self):
        tree = fit_tree(np.array([[0.0], [1.0]]), np.array([0.0, 10.0]), max_depth=1)
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 0.5
        assert tree.predict(np.array([[0.0]]))[0] == 0.0
        assert tree.predict(np.array([[1.0]]))[0] == 10.0
        assert tree.predict(np.array([[0.49]]))[0] == 0.0
        assert tree.predict(np.array([[0.51]]))[0] == 10.0

    def test_depth_zero_predicts_mean(self):
        X, y = synthetic(50)
        tree = fit_tree(X, y, max_depth=0)
        assert tree.n_nodes == 1
        assert tree.predict(X[:3])[0] == pytest.approx(np.mean(y), rel=1e-12)

    def test_min_leaf_respected(self):
        X, y = synthetic(64, seed=3)
        tree = fit_tree(X, y, max_depth=30, min_leaf=5)
        leaves = tree.feature == -1
        assert tree.n_samples[leaves].min() >= 5

    def test_unlimited_depth_interpolates_training_points(self):
        X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 5.0], [3.0, 2.0]])
        y = np.array([10.0, 20.0, 30.0, 40.0])
        tree = fit_tree(X, y, max_depth=64)
        assert tree.predict(X).tolist() == y.tolist()


class TestFitForest:
    def test_single_tree_no_bootstrap_equals_fit_tree(self):
        X, y = synthetic(100)
        model = fit_forest(X, y, 1, 6, seed=5, bootstrap=False, feature_subsample=X.shape[1])
        order = np.lexsort([y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)])
        _, feat_seed = forest._tree_streams(5, 0)
        tree = fit_tree(X[order], y[order], 6, feature_subsample=X.shape[1], seed=feat_seed)
        assert np.array_equal(predict_batch(model, X), tree.predict(X))

    def test_same_seed_bit_identical(self):
        X, y = synthetic(200)
        a = fit_forest(X, y, 40, 10, seed=9)
        b = fit_forest(X, y, 40, 10, seed=9)
        assert np.array_equal(predict_batch(a, X), predict_batch(b, X))

    def test_parallel_equals_serial(self):
        X, y = synthetic(200)
        a = fit_forest(X, y, 30, 10, seed=9, n_jobs=1)
        b = fit_forest(X, y, 30, 10, seed=9, n_jobs=4)
        assert np.array_equal(predict_batch(a, X), predict_batch(b, X))

    def test_row_order_permutation_invariance(self):
        X, y = synthetic(150)
        model = fit_forest(X, y, 25, 10, seed=2)
        perm = np.random.default_rng(0).permutation(len(X))
        permuted = fit_forest(X[perm], y[perm], 25, 10, seed=2)
        assert np.array_equal(predict_batch(model, X), predict_batch(permuted, X))

    def test_predictions_bounded_by_target_range(self):
        X, y = synthetic(300, noise=5.0)
        model = fit_forest(X, y, 50, 12, seed=1)
        grid = np.random.default_rng(3).random((500, X.shape[1])) * 3 - 1
        preds = predict_batch(model, grid)
        assert preds.min() >= y.min() and preds.max() <= y.max()

    def test_mean_of_tree_outputs(self):
        X, y = synthetic(80)
        model = fit_forest(X, y, 7, 8, seed=4)
        per_tree = np.stack([t.predict(X[:5]) for t in model.trees])
        assert predict_batch(model, X[:5]) == pytest.approx(per_tree.mean(axis=0), rel=1e-12)

    def test_width_mismatch_raises(self):
        X, y = synthetic(50)
        model = fit_forest(X, y, 5, 5, seed=0)
        with pytest.raises(ShapeError):
            predict(model, np.zeros(X.shape[1] + 2))


class TestGridSearch:
    def test_grid_has_48_cells(self):
        assert len(GRID_N_ESTIMATORS) * len(GRID_MAX_DEPTH) == 48
        result = grid_search(None, None, eval_fn=lambda n, d: float(n + d))
        assert len(result.cv_mse) == 48

    def test_explores_every_cell(self):
        seen = set()

        def oracle(n, d):
            seen.add((n, d))
            return 1.0

        grid_search(None, None, eval_fn=oracle)
        assert seen == {(n, d) for n in GRID_N_ESTIMATORS for d in GRID_MAX_DEPTH}

    def test_recovers_unique_argmin(self):
        result = grid_search(None, None, eval_fn=lambda n, d: 0.0 if (n, d) == (100, 10) else 1.0)
        assert (result.best_n_estimators, result.best_max_depth) == (100, 10)

    def test_ties_prefer_smaller_n_then_depth(self):
        result = grid_search(None, None, eval_fn=lambda n, d: 1.0)
        assert (result.best_n_estimators, result.best_max_depth) == (5, 3)
        result = grid_search(None, None, eval_fn=lambda n, d: 0.0 if n == 100 else 1.0)
        assert (result.best_n_estimators, result.best_max_depth) == (100, 3)

    def test_cv_prefix_reuse_matches_direct_fit(self):
        # the tuner evaluates the k-tree prefix of one large fit; that must
        # equal fitting k trees outright with the same seed
        X, y = synthetic(60, d=4)
        small = forest._grow_forest_trees(X, y, 5, 4, seed=11, min_leaf=1,
                                          feature_subsample=2, bootstrap=True, n_jobs=1)
        big = forest._grow_forest_trees(X, y, 20, 4, seed=11, min_leaf=1,
                                        feature_subsample=2, bootstrap=True, n_jobs=1)
        for a, b in zip(small, big[:5]):
            assert np.array_equal(a.predict(X), b.predict(X))

    def test_monotone_fidelity_depth10_beats_depth3(self):
        # deeper trees must track a 200-point smooth target better, in
        # expectation over seeds
        totals = {3: 0.0, 10: 0.0}
        for seed in range(5):
            rng = np.random.default_rng(100 + seed)
            X = rng.random((200, 5))
            y = np.sin(6 * X[:, 0]) * 4 + 3 * X[:, 1] ** 2 + rng.normal(0, 0.3, 200)
            result = grid_search(
                X, y, folds=5, seed=seed, n_estimators_grid=(50,), max_depth_grid=(3, 10)
            )
            totals[3] += result.cv_mse[(50, 3)]
            totals[10] += result.cv_mse[(50, 10)]
        assert totals[10] <= totals[3]

    def test_needs_enough_rows(self):
        X, y = synthetic(3)
        with pytest.raises(Exception):
            grid_search(X, y, folds=5)


class TestPersistence:
    def test_round_trip_predictions(self, tmp_path):
        X, y = synthetic(120)
        model = fit_forest(X, y, 20, 8, seed=6)
        path = str(tmp_path / "model.npz")
        forest.save(model, path)
        loaded = forest.load(path)
        queries = np.random.default_rng(1).random((100, X.shape[1]))
        assert np.array_equal(predict_batch(model, queries), predict_batch(loaded, queries))
        assert loaded.seed == model.seed
        assert loaded.n_estimators == model.n_estimators

    def test_truncated_file_rejected(self, tmp_path):
        X, y = synthetic(50)
        model = fit_forest(X, y, 5, 5, seed=0)
        path = tmp_path / "model.npz"
        forest.save(model, str(path))
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(ModelFormatError):
            forest.load(str(path))

    def test_version_mismatch_rejected(self, tmp_path, monkeypatch):
        X, y = synthetic(50)
        model = fit_forest(X, y, 5, 5, seed=0)
        path = str(tmp_path / "model.npz")
        monkeypatch.setattr(forest, "MODEL_FORMAT_VERSION", 99)
        forest.save(model, path)
        monkeypatch.undo()
        with pytest.raises(ModelFormatError, match="version"):
            forest.load(path)

    def test_missing_file_is_load_failure(self, tmp_path):
        with pytest.raises(Exception, match="not found"):
            forest.load(str(tmp_path / "absent.npz"))
