"""Model behaviour: determinism, training diagnostics, error paths, file I/O."""

import numpy as np
import pytest

from eegsong.models import (
    MODEL_KINDS,
    FitError,
    ModelSpec,
    PredictError,
    fit,
    load_model,
    predict,
    predict_labels,
    predict_proba,
    save_model,
)
from eegsong.models.common import majority_label
from eegsong.models.neural import init_mlp, mlp_loss_and_grads


def blobs(rng, centers, n_per, scale=0.5):
    X = np.vstack([c + scale * rng.normal(size=(n_per, len(c))) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per)
    return X, y


TWO_CENTERS = [(-3.0, -3.0, 0.0), (3.0, 3.0, 0.0)]
THREE_CENTERS = [(-4.0, 0.0), (4.0, 0.0), (0.0, 6.0)]


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown model kind"):
            ModelSpec(kind="svm")

    @pytest.mark.parametrize(
        "field", ["knn_k", "gboost_rounds", "mlp_epochs", "gmm_var_floor"]
    )
    def test_positive_fields(self, field):
        with pytest.raises(ValueError, match=field):
            ModelSpec(kind="knn", **{field: 0})

    def test_n_clusters_positive(self):
        with pytest.raises(ValueError, match="n_clusters"):
            ModelSpec(kind="kmeans", n_clusters=-1)


class TestBasicsAcrossKinds:
    @pytest.mark.parametrize("kind", MODEL_KINDS)
    def test_proba_rows_sum_to_one(self, kind, rng):
        X, y = blobs(rng, THREE_CENTERS, 30)
        model = fit(ModelSpec(kind=kind, seed=0), X, y)
        proba = predict_proba(model, X[:17])
        assert proba.shape == (17, len(model.classes))
        assert np.all(proba >= 0)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0, atol=1e-9)

    @pytest.mark.parametrize("kind", MODEL_KINDS)
    def test_predict_is_argmax_of_proba(self, kind, rng):
        X, y = blobs(rng, THREE_CENTERS, 30)
        model = fit(ModelSpec(kind=kind, seed=0), X, y)
        rows = X[::5]
        expected = model.classes[np.argmax(predict_proba(model, rows), axis=1)]
        assert np.array_equal(predict(model, rows), expected)

    @pytest.mark.parametrize("kind", MODEL_KINDS)
    def test_refit_is_deterministic(self, kind, rng):
        X, y = blobs(rng, THREE_CENTERS, 25)
        spec = ModelSpec(kind=kind, seed=7)
        a = fit(spec, X, y)
        b = fit(spec, X, y)
        assert np.array_equal(predict_proba(a, X), predict_proba(b, X))

    @pytest.mark.parametrize("kind", ["knn", "tree", "gboost", "gnb"])
    def test_internal_standardization_absorbs_affine_rescale(self, kind, rng):
        X, y = blobs(rng, THREE_CENTERS, 30)
        probe = blobs(rng, THREE_CENTERS, 5)[0]
        scale = np.array([100.0, 0.001])
        shift = np.array([-40.0, 7.0])
        spec = ModelSpec(kind=kind, seed=0)
        plain = predict(fit(spec, X, y), probe)
        rescaled = predict(fit(spec, X * scale + shift, y), probe * scale + shift)
        assert np.array_equal(plain, rescaled)


class TestNeighbors:
    def test_k1_memorizes_training_set(self, rng):
        X, y = blobs(rng, THREE_CENTERS, 20)
        model = fit(ModelSpec(kind="knn", knn_k=1), X, y)
        assert np.array_equal(predict(model, X), y)

    def test_unanimous_neighborhood_gives_certainty(self, rng):
        X, y = blobs(rng, TWO_CENTERS, 20, scale=0.1)
        model = fit(ModelSpec(kind="knn", knn_k=5), X, y)
        proba = predict_proba(model, np.asarray(TWO_CENTERS))
        assert proba[0, 0] == 1.0
        assert proba[1, 1] == 1.0

    def test_equidistant_vote_splits_then_ties_down(self):
        X = np.array([[0.0], [2.0]])
        model = fit(ModelSpec(kind="knn", knn_k=2), X, np.array([5, 9]))
        proba = predict_proba(model, np.array([[1.0]]))
        np.testing.assert_allclose(proba, [[0.5, 0.5]])
        assert predict(model, np.array([[1.0]]))[0] == 5  # tie -> smaller label

    def test_k_larger_than_training_set(self, rng):
        X, y = blobs(rng, TWO_CENTERS, 5)
        with pytest.raises(FitError, match="knn_k=50 exceeds"):
            fit(ModelSpec(kind="knn", knn_k=50), X, y)


class TestBayes:
    def test_separated_blobs_are_recovered(self):
        accs = []
        for seed in range(20):
            r = np.random.default_rng(seed)
            X, y = blobs(r, [(-5.0, -5.0), (5.0, 5.0)], 30, scale=1.0)
            Xt, yt = blobs(r, [(-5.0, -5.0), (5.0, 5.0)], 20, scale=1.0)
            model = fit(ModelSpec(kind="gnb"), X, y)
            accs.append(np.mean(predict(model, Xt) == yt))
        assert np.mean(accs) >= 0.99

    def test_priors_follow_class_frequencies(self, rng):
        X, y = blobs(rng, TWO_CENTERS, 10)
        X = np.vstack([X, X[y == 0]])  # class 0 now appears twice as often
        y = np.concatenate([y, y[y == 0]])
        model = fit(ModelSpec(kind="gnb"), X, y)
        np.testing.assert_allclose(
            model.params["log_priors"], np.log([20 / 30, 10 / 30]), atol=1e-12
        )


class TestTrees:
    def test_deep_tree_fits_training_data(self, rng):
        X, y = blobs(rng, THREE_CENTERS, 25)
        model = fit(ModelSpec(kind="tree", tree_max_depth=12, tree_min_leaf=1), X, y)
        assert np.mean(predict(model, X) == y) == 1.0

    def test_depth_one_tree_is_a_stump(self, rng):
        X, y = blobs(rng, TWO_CENTERS, 25)
        model = fit(ModelSpec(kind="tree", tree_max_depth=1), X, y)
        assert model.params["tree_counts"][0] <= 3  # root plus two leaves

    def test_gboost_training_loss_never_increases(self, rng):
        X, y = blobs(rng, THREE_CENTERS, 25, scale=2.0)
        model = fit(ModelSpec(kind="gboost", gboost_rounds=60, seed=0), X, y)
        loss = model.params["train_loss"]
        assert loss.shape == (60,)
        assert np.all(np.diff(loss) <= 1e-8)

    def test_gboost_loss_starts_near_uniform(self, rng):
        X, y = blobs(rng, THREE_CENTERS, 25)
        model = fit(ModelSpec(kind="gboost", gboost_rounds=5), X, y)
        # one learning-rate-damped round in: still close to log(3)
        assert model.params["train_loss"][0] < np.log(3.0)
        assert model.params["train_loss"][0] > 0.5 * np.log(3.0)


class TestNeural:
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(12, 4))
        y = rng.integers(0, 3, size=12)
        params = init_mlp(rng, 4, 8, 3)
        _, grads = mlp_loss_and_grads(params, X, y, 3)
        step = 1e-5
        worst = 0.0
        for name, tensor in params.items():
            numeric = np.empty_like(tensor)
            flat = tensor.reshape(-1)
            for i in range(flat.shape[0]):
                orig = flat[i]
                flat[i] = orig + step
                up, _ = mlp_loss_and_grads(params, X, y, 3)
                flat[i] = orig - step
                down, _ = mlp_loss_and_grads(params, X, y, 3)
                flat[i] = orig
                numeric.reshape(-1)[i] = (up - down) / (2 * step)
            rel = np.abs(numeric - grads[name]) / np.maximum(
                np.abs(numeric) + np.abs(grads[name]), 1e-8
            )
            worst = max(worst, float(rel.max()))
        assert worst < 1e-4

    def test_mlp_learns_separable_blobs(self, rng):
        X, y = blobs(rng, THREE_CENTERS, 30)
        model = fit(ModelSpec(kind="mlp", mlp_epochs=100, seed=0), X, y)
        assert np.mean(predict(model, X) == y) >= 0.95
        loss = model.params["epoch_loss"]
        assert loss[-1] < loss[0]

    def test_mlp_seed_changes_fit(self, rng):
        X, y = blobs(rng, THREE_CENTERS, 20)
        a = fit(ModelSpec(kind="mlp", seed=0), X, y)
        b = fit(ModelSpec(kind="mlp", seed=1), X, y)
        assert not np.array_equal(a.params["w1"], b.params["w1"])


class TestClustering:
    def test_kmeans_objective_never_increases(self, rng):
        X, _ = blobs(rng, THREE_CENTERS, 40, scale=2.0)
        model = fit(ModelSpec(kind="kmeans", n_clusters=3), X, np.zeros(120, dtype=int))
        objective = model.params["objective"]
        assert objective.shape[0] >= 2
        assert np.all(np.diff(objective) <= 1e-9)

    def test_gmm_loglik_never_decreases(self, rng):
        X, _ = blobs(rng, THREE_CENTERS, 40, scale=2.0)
        model = fit(ModelSpec(kind="gmm", n_clusters=3), X, np.zeros(120, dtype=int))
        loglik = model.params["loglik"]
        assert loglik.shape[0] >= 2
        assert np.all(np.diff(loglik) >= -1e-8)

    def test_cluster_ids_map_to_majority_labels(self, rng):
        X, y01 = blobs(rng, TWO_CENTERS, 30, scale=0.3)
        labels = np.where(y01 == 0, 3, 8)
        model = fit(ModelSpec(kind="kmeans", seed=0), X, labels)
        ids = predict(model, X)
        assert set(np.unique(ids)) <= {0, 1}
        mapped = predict_labels(model, X)
        assert set(np.unique(mapped)) <= {3, 8}
        assert np.mean(mapped == labels) == 1.0

    def test_gmm_recovers_separated_blobs(self, rng):
        X, y01 = blobs(rng, TWO_CENTERS, 30, scale=0.3)
        labels = np.where(y01 == 0, 3, 8)
        model = fit(ModelSpec(kind="gmm", seed=0), X, labels)
        assert np.mean(predict_labels(model, X) == labels) == 1.0

    def test_cluster_count_defaults_to_class_count(self, rng):
        X, y = blobs(rng, THREE_CENTERS, 20)
        model = fit(ModelSpec(kind="kmeans"), X, y)
        assert model.params["centroids"].shape[0] == 3

    def test_more_clusters_than_rows(self, rng):
        X, y = blobs(rng, TWO_CENTERS, 3)
        with pytest.raises(FitError, match="exceeds the 6 training rows"):
            fit(ModelSpec(kind="kmeans", n_clusters=7), X, y)


class TestErrorPaths:
    def test_single_class_rejected_for_supervised(self, rng):
        X = rng.normal(size=(10, 3))
        with pytest.raises(FitError, match="at least two classes"):
            fit(ModelSpec(kind="knn"), X, np.full(10, 7))

    def test_nonfinite_training_row_is_named(self, rng):
        X, y = blobs(rng, TWO_CENTERS, 10)
        X[3, 1] = np.nan
        with pytest.raises(FitError, match="training row 3"):
            fit(ModelSpec(kind="gnb"), X, y)

    def test_label_count_mismatch(self, rng):
        X, _ = blobs(rng, TWO_CENTERS, 10)
        with pytest.raises(FitError, match="5 labels for 20 training rows"):
            fit(ModelSpec(kind="gnb"), X, np.arange(5))

    def test_prediction_width_mismatch(self, rng):
        X, y = blobs(rng, TWO_CENTERS, 10)
        model = fit(ModelSpec(kind="knn"), X, y)
        with pytest.raises(PredictError, match="row width 2 does not match model width 3"):
            predict(model, np.zeros((4, 2)))


class TestSerialization:
    @pytest.mark.parametrize("kind", MODEL_KINDS)
    def test_round_trip_preserves_predictions(self, kind, rng, tmp_path):
        X, y = blobs(rng, THREE_CENTERS, 20)
        model = fit(ModelSpec(kind=kind, seed=0), X, y)
        path = save_model(model, tmp_path / f"{kind}.npz")
        back = load_model(path)
        assert back.kind == kind
        assert np.array_equal(back.classes, model.classes)
        assert np.array_equal(predict_proba(back, X), predict_proba(model, X))
        if model.is_clustering:
            assert np.array_equal(back.cluster_labels, model.cluster_labels)
            assert np.array_equal(predict_labels(back, X), predict_labels(model, X))

    def test_unsupported_format_version(self, rng, tmp_path):
        X, y = blobs(rng, TWO_CENTERS, 10)
        path = save_model(fit(ModelSpec(kind="gnb"), X, y), tmp_path / "m.npz")
        with np.load(path) as archive:
            payload = {k: archive[k] for k in archive.files}
        payload["format_version"] = np.asarray(99)
        with open(path, "wb") as fh:
            np.savez(fh, **payload)
        with pytest.raises(ValueError, match="format version 99"):
            load_model(path)


def test_majority_tie_breaks_toward_smaller_label():
    assert majority_label(np.array([9, 2, 9, 2])) == 2
