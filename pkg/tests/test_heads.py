"""SVM and GMM heads: training behaviour, scoring laws, persistence."""

import numpy as np
import pytest

from asgir.errors import ArgumentError, DegenerateTrainingError, ShapeInconsistencyError
from asgir.heads import (
    GmmModel,
    SvmModel,
    gmm_score,
    gmm_train,
    load_model,
    predict,
    save_model,
    save_model_with_extras,
    svm_hinge_loss,
    svm_score,
    svm_train,
)
from asgir.labels import LabelRegistry

REG2 = LabelRegistry(["alpha", "beta"])
REG3 = LabelRegistry(["alpha", "beta", "gamma"])


def blobs(rng, means, per_class=50, sigma=1.0):
    x = np.vstack([rng.normal(mu, sigma, size=(per_class, len(mu))) for mu in means])
    y = np.repeat(np.arange(len(means)), per_class)
    return x, y


class TestSvmTrain:
    def test_separable_axis_case(self):
        x = np.array([[-1.0, 0.0]] * 10 + [[1.0, 0.0]] * 10)
        y = np.array([0] * 10 + [1] * 10)
        model = svm_train(x, y, REG2)
        preds = [predict(svm_score(model, e)) for e in x]
        assert preds == list(y)
        # the separating direction is the first axis
        assert abs(model.weight_matrix[0, 0]) > abs(model.weight_matrix[0, 1])
        assert abs(model.weight_matrix[1, 0]) > abs(model.weight_matrix[1, 1])

    def test_three_class_blobs_heldout_perfect(self):
        rng = np.random.default_rng(42)
        means = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        x_train, y_train = blobs(rng, means, per_class=50)
        x_test, y_test = blobs(rng, means, per_class=20)
        model = svm_train(x_train, y_train, REG3, seed=1)
        train_preds = [predict(svm_score(model, e)) for e in x_train]
        test_preds = [predict(svm_score(model, e)) for e in x_test]
        assert np.mean(np.array(train_preds) == y_train) == 1.0
        assert np.mean(np.array(test_preds) == y_test) == 1.0
        # brute-force oracle: nearest class mean agrees on the held-out set
        nearest = np.argmin(
            ((x_test[:, None, :] - means[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        assert np.array_equal(nearest, test_preds)

    def test_c_to_zero_shrinks_weights(self):
        x = np.array([[-1.0, 0.0]] * 12 + [[1.0, 0.0]] * 8)
        y = np.array([0] * 12 + [1] * 8)
        model = svm_train(x, y, REG2, C=1e-8)
        assert np.all(np.abs(model.weight_matrix) < 1e-6)
        # prediction at the origin reduces to bias ordering: the majority
        # class accumulates the larger bias
        assert predict(svm_score(model, np.zeros(2))) == 0
        assert model.biases[0] > model.biases[1]

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateTrainingError):
            svm_train(np.ones((5, 2)), np.zeros(5), REG2)

    def test_dimension_mismatch_rejected(self):
        model = svm_train(
            np.array([[-1.0, 0.0]] * 3 + [[1.0, 0.0]] * 3),
            np.array([0, 0, 0, 1, 1, 1]),
            REG2,
        )
        with pytest.raises(ArgumentError):
            svm_score(model, np.zeros(5))

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(0)
        x, y = blobs(rng, np.array([[0.0, 0.0], [3.0, 3.0]]), per_class=30)
        a = svm_train(x, y, REG2, seed=7)
        b = svm_train(x, y, REG2, seed=7)
        assert np.array_equal(a.weight_matrix, b.weight_matrix)
        assert np.array_equal(a.biases, b.biases)

    def test_wide_margin_hinge_below_tol_n(self):
        # separable with a margin-1 separator of tiny norm: the optimum
        # drives the total hinge loss under tol * n
        rng = np.random.default_rng(5)
        x, y = blobs(rng, np.array([[-100.0, 0.0], [100.0, 0.0]]), per_class=25, sigma=0.5)
        tol = 1e-4
        model = svm_train(x, y, REG2, tol=tol, seed=0)
        assert svm_hinge_loss(model, x, y) < tol * len(x)


class TestSvmScore:
    def test_zero_embedding_gives_biases(self):
        model = SvmModel(
            weight_matrix=np.array([[1.0, 2.0], [3.0, 4.0]]),
            biases=np.array([0.5, -0.25]),
            C=1.0,
            registry=REG2,
        )
        np.testing.assert_array_equal(svm_score(model, np.zeros(2)), model.biases)

    def test_positive_scaling_never_changes_argmax(self):
        rng = np.random.default_rng(3)
        model = SvmModel(
            weight_matrix=rng.normal(size=(4, 6)),
            biases=rng.normal(size=4),
            C=1.0,
            registry=LabelRegistry(["a", "b", "c", "d"]),
        )
        for lam in (2.0, 0.001, 17.3):
            scaled = SvmModel(
                weight_matrix=lam * model.weight_matrix,
                biases=lam * model.biases,
                C=model.C,
                registry=model.registry,
            )
            for _ in range(250):
                e = rng.normal(size=6)
                assert predict(svm_score(model, e)) == predict(svm_score(scaled, e))

    def test_separable_points_score_own_class_highest(self):
        x = np.array([[-1.0, 0.0]] * 10 + [[1.0, 0.0]] * 10)
        y = np.array([0] * 10 + [1] * 10)
        model = svm_train(x, y, REG2)
        for xi, yi in zip(x, y):
            assert predict(svm_score(model, xi)) == yi

    def test_tie_breaks_to_lowest_id(self):
        model = SvmModel(
            weight_matrix=np.zeros((3, 2)),
            biases=np.array([1.0, 1.0, 1.0]),
            C=1.0,
            registry=REG3,
        )
        assert predict(svm_score(model, np.ones(2))) == 0


class TestGmmTrain:
    def test_k1_closed_form(self):
        rng = np.random.default_rng(1)
        x, y = blobs(rng, np.array([[0.0, 5.0], [9.0, -2.0]]), per_class=40)
        model = gmm_train(x, y, REG2, k=1)
        for c in range(2):
            members = x[y == c]
            np.testing.assert_allclose(model.means[c, 0], members.mean(axis=0), atol=1e-9)
            np.testing.assert_allclose(
                model.variances[c, 0], np.maximum(members.var(axis=0), 1e-6), atol=1e-9
            )
        priors = np.exp(model.log_priors)
        np.testing.assert_allclose(priors, [0.5, 0.5], atol=1e-12)

    def test_k2_recovers_cluster_centers(self):
        rng = np.random.default_rng(2)
        cluster_a = rng.normal(0.0, 0.3, size=(40, 1))
        cluster_b = rng.normal(12.0, 0.3, size=(40, 1))
        x = np.vstack([cluster_a, cluster_b, rng.normal(5.0, 1.0, size=(5, 1))])
        y = np.array([0] * 80 + [1] * 5)
        model = gmm_train(x, y, REG2, k=2, seed=3)
        got = sorted(model.means[0, :, 0])
        want = sorted([cluster_a.mean(), cluster_b.mean()])
        np.testing.assert_allclose(got, want, atol=0.1)

    def test_em_loglikelihood_monotone(self):
        rng = np.random.default_rng(4)
        for trial in range(5):
            x = np.vstack(
                [
                    rng.normal(rng.uniform(-5, 5), rng.uniform(0.1, 2.0), size=(30, 3))
                    for _ in range(2)
                ]
            )
            y = np.array([0] * 55 + [1] * 5)
            trace: dict = {}
            gmm_train(x, y, REG2, k=3, seed=trial, ll_trace=trace)
            for seq in trace.values():
                seq = np.asarray(seq)
                slack = 1e-9 * np.maximum(1.0, np.abs(seq[:-1]))
                assert np.all(np.diff(seq) >= -slack)

    def test_mixture_weights_sum_to_one(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(60, 2))
        y = np.array([0] * 30 + [1] * 30)
        model = gmm_train(x, y, REG2, k=4, seed=0)
        np.testing.assert_allclose(model.mix_weights.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(model.variances >= 1e-6)

    def test_too_few_points_rejected(self):
        x = np.zeros((3, 2))
        y = np.array([0, 0, 1])
        with pytest.raises(ArgumentError, match="needs >= 2"):
            gmm_train(x, y, REG2, k=2)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(50, 2))
        y = np.array([0] * 25 + [1] * 25)
        a = gmm_train(x, y, REG2, k=2, seed=5)
        b = gmm_train(x, y, REG2, k=2, seed=5)
        assert np.array_equal(a.means, b.means)
        assert np.array_equal(a.variances, b.variances)


class TestGmmScore:
    def test_equidistant_point_scores_equal(self):
        model = GmmModel(
            means=np.array([[[-1.0, 0.0]], [[1.0, 0.0]]]),
            variances=np.full((2, 1, 2), 0.5),
            mix_weights=np.ones((2, 1)),
            log_priors=np.log([0.5, 0.5]),
            registry=REG2,
        )
        scores = gmm_score(model, np.array([0.0, 3.7]))
        assert abs(scores[0] - scores[1]) < 1e-9

    def test_point_at_mean_with_tiny_variance_dominates(self):
        model = GmmModel(
            means=np.array([[[2.0, 2.0]], [[-2.0, -2.0]]]),
            variances=np.full((2, 1, 2), 1e-4),
            mix_weights=np.ones((2, 1)),
            log_priors=np.log([0.5, 0.5]),
            registry=REG2,
        )
        assert predict(gmm_score(model, np.array([2.0, 2.0]))) == 0
        assert predict(gmm_score(model, np.array([-2.0, -2.0]))) == 1

    def test_logsumexp_matches_direct_density(self):
        rng = np.random.default_rng(9)
        model = GmmModel(
            means=rng.normal(size=(2, 3, 2)),
            variances=rng.uniform(0.5, 2.0, size=(2, 3, 2)),
            mix_weights=np.full((2, 3), 1.0 / 3.0),
            log_priors=np.log([0.4, 0.6]),
            registry=REG2,
        )
        for _ in range(20):
            e = rng.normal(size=2)
            scores = gmm_score(model, e)
            for c in range(2):
                direct = 0.0
                for j in range(3):
                    mu, var = model.means[c, j], model.variances[c, j]
                    density = np.prod(
                        np.exp(-0.5 * (e - mu) ** 2 / var) / np.sqrt(2 * np.pi * var)
                    )
                    direct += model.mix_weights[c, j] * density
                want = np.log(direct) + model.log_priors[c]
                assert abs(scores[c] - want) < 1e-9

    def test_dimension_mismatch_rejected(self):
        model = GmmModel(
            means=np.zeros((2, 1, 3)),
            variances=np.ones((2, 1, 3)),
            mix_weights=np.ones((2, 1)),
            log_priors=np.log([0.5, 0.5]),
            registry=REG2,
        )
        with pytest.raises(ArgumentError):
            gmm_score(model, np.zeros(4))


class TestModelIO:
    def _svm(self):
        rng = np.random.default_rng(10)
        return SvmModel(
            weight_matrix=rng.normal(size=(2, 5)).astype(np.float32),
            biases=rng.normal(size=2).astype(np.float32),
            C=1.0,
            registry=REG2,
        )

    def test_svm_roundtrip_bit_exact(self):
        model = self._svm()
        blob = save_model(model)
        loaded, extras = load_model(blob)
        assert isinstance(loaded, SvmModel)
        assert extras == {}
        assert loaded.registry.names == ["alpha", "beta"]
        assert np.array_equal(loaded.weight_matrix, model.weight_matrix)
        assert save_model(loaded) == blob

    def test_gmm_roundtrip_bit_exact(self):
        rng = np.random.default_rng(11)
        model = GmmModel(
            means=rng.normal(size=(3, 2, 4)).astype(np.float32),
            variances=rng.uniform(0.1, 1.0, size=(3, 2, 4)).astype(np.float32),
            mix_weights=np.full((3, 2), 0.5, dtype=np.float32),
            log_priors=np.log([0.2, 0.3, 0.5]).astype(np.float32),
            registry=REG3,
        )
        blob = save_model(model)
        loaded, _ = load_model(blob)
        assert isinstance(loaded, GmmModel)
        assert save_model(loaded) == blob

    def test_extras_roundtrip(self):
        blob = save_model_with_extras(
            self._svm(), {"norm_mean": np.float32(1.25), "norm_std": np.float32(0.5)}
        )
        _, extras = load_model(blob)
        assert extras["norm_mean"].shape == ()
        assert float(extras["norm_mean"]) == 1.25
        assert float(extras["norm_std"]) == 0.5

    def test_bad_magic(self):
        from asgir.errors import BadMagicError

        with pytest.raises(BadMagicError):
            load_model(b"XXXX" + b"\x00" * 50)

    def test_truncation(self):
        from asgir.errors import TruncatedFileError

        blob = save_model(self._svm())
        with pytest.raises(TruncatedFileError):
            load_model(blob[:-3])

    def test_registry_shape_mismatch(self):
        model = self._svm()
        model.weight_matrix = np.zeros((5, 4), dtype=np.float32)  # 5 rows, 2 labels
        with pytest.raises(ShapeInconsistencyError):
            load_model(save_model(model))
