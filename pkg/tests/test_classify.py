"""Classifier families: SMO dual optimality, Platt calibration, naive
Bayes against brute-force enumeration, neural-net gradients,
thresholded labeling and model serialization."""

import math

import numpy as np
import pytest

from polilean import classify, nn, svm


def _blobs(n_per_class, sep=3.0, d=2, seed=0):
    rng = np.random.default_rng(seed)
    left = rng.normal(-sep / 2.0, 1.0, size=(n_per_class, d))
    right = rng.normal(sep / 2.0, 1.0, size=(n_per_class, d))
    x = np.vstack([left, right])
    y = np.array([-1.0] * n_per_class + [1.0] * n_per_class)
    return x, y


def _kernel_matrix(kernel, a, b):
    """Independent kernel evaluation for the dual-optimality oracle."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    out = np.empty((len(a), len(b)))
    for i, u in enumerate(a):
        for j, v in enumerate(b):
            if kernel.name == "linear":
                out[i, j] = float(u @ v)
            elif kernel.name == "poly":
                out[i, j] = (float(u @ v) + kernel.coef) ** kernel.degree
            elif kernel.name == "rbf":
                gamma = kernel.gamma if kernel.gamma is not None else 1.0 / len(u)
                out[i, j] = math.exp(-gamma * float(((u - v) ** 2).sum()))
    return out


def _max_kkt_violation(kernel, x, y, alpha, c):
    """Largest optimality gap over the maximal violating pair sets."""
    k = _kernel_matrix(kernel, x, x)
    g = 1.0 - y * (k @ (alpha * y))
    yg = y * g
    up = ((y > 0) & (alpha < c)) | ((y < 0) & (alpha > 0))
    down = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < c))
    if not up.any() or not down.any():
        return 0.0
    return float(yg[up].max() - yg[down].min())


class TestSmo:
    def test_two_point_problem_in_closed_form(self):
        # points 0 and 2 on a line: maximum margin puts the decision
        # values at exactly -1 and +1 with alpha = 1/2 each
        x = np.array([[0.0], [2.0]])
        y = np.array([-1.0, 1.0])
        model = svm.smo_train(x, y, svm.Kernel("linear"), c=10.0)
        np.testing.assert_allclose(model.alpha, [0.5, 0.5], atol=1e-3)
        np.testing.assert_allclose(model.decision_function(x), [-1.0, 1.0], atol=1e-2)
        assert model.converged

    def test_xor_with_radial_kernel_fits_exactly(self):
        x = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        y = np.array([-1.0, -1.0, 1.0, 1.0])
        model = svm.smo_train(x, y, svm.Kernel("rbf"), c=10.0)
        assert (np.sign(model.decision_function(x)) == y).all()

    def test_separable_blobs_classified_perfectly(self):
        x, y = _blobs(40, sep=6.0, seed=1)
        model = svm.smo_train(x, y, svm.Kernel("linear"), c=10.0)
        assert (np.sign(model.decision_function(x)) == y).all()
        # far fewer support vectors than points on well-separated data
        assert len(model.support_vectors) < len(x) / 2

    def test_dual_feasibility_and_kkt_on_random_problems(self):
        kernels = [
            svm.Kernel("linear"),
            svm.Kernel("poly", degree=2, coef=1.0),
            svm.Kernel("rbf"),
        ]
        for trial in range(20):
            rng = np.random.default_rng(100 + trial)
            n = int(rng.integers(10, 40))
            d = int(rng.integers(2, 5))
            x = rng.normal(size=(n, d))
            y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            y[0], y[1] = -1.0, 1.0  # both classes present
            c = [0.5, 1.0, 10.0][trial % 3]
            kernel = kernels[trial % 3]

            model = svm.smo_train(x, y, kernel, c=c)
            alpha = model.alpha
            assert (alpha >= -1e-8).all() and (alpha <= c + 1e-8).all()
            assert abs(float(alpha @ y)) <= 1e-8
            assert _max_kkt_violation(kernel, x, y, alpha, c) <= 1e-3

    def test_decision_function_matches_direct_expansion(self):
        x, y = _blobs(15, sep=2.0, seed=3)
        kernel = svm.Kernel("rbf", gamma=0.7)
        model = svm.smo_train(x, y, kernel, c=1.0)
        probe = np.random.default_rng(4).normal(size=(6, 2))
        expected = (
            _kernel_matrix(kernel, probe, model.support_vectors)
            @ model.support_alpha_y
            + model.bias
        )
        np.testing.assert_allclose(model.decision_function(probe), expected, atol=1e-10)

    def test_labels_must_be_plus_minus_one(self):
        with pytest.raises(ValueError, match="-1/\\+1"):
            svm.smo_train(np.eye(2), np.array([0.0, 1.0]), svm.Kernel("linear"))


class TestPlattCalibration:
    def test_symmetric_decisions_give_half_at_zero(self):
        f = np.array([-2.0, -1.0, 1.0, 2.0])
        y = np.array([-1.0, -1.0, 1.0, 1.0])
        ab = svm.platt_calibrate(f, y)
        a, b = ab
        assert a < 0  # probability increases with the decision value
        assert abs(b) < 1e-6
        p = svm.sigmoid_probability(np.array([0.0]), ab)
        assert math.isclose(p[0], 0.5, abs_tol=1e-9)

    def test_probabilities_monotone_and_smoothed(self):
        f = np.array([-3.0, -1.5, 1.5, 3.0])
        y = np.array([-1.0, -1.0, 1.0, 1.0])
        ab = svm.platt_calibrate(f, y)
        p = svm.sigmoid_probability(f, ab)
        assert (np.diff(p) > 0).all()
        # regularized targets keep fitted probabilities off 0 and 1
        assert 0.5 < p[-1] < 0.99
        assert 0.01 < p[0] < 0.5

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            svm.platt_calibrate(np.array([1.0, 2.0]), np.array([1.0, 1.0]))


class TestNaiveBayes:
    def test_hand_computed_bernoulli_posterior(self):
        # class counts 3 left / 4 right; smoothed p(x=1) are 2/5 and
        # 2/3, so p(Right | x=1) = (4/7)(2/3) / ((4/7)(2/3)+(3/7)(2/5))
        x = np.array([[0.0], [0.0], [1.0], [1.0], [1.0], [0.0], [1.0]])
        y = np.array([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0])
        model = classify.train_nb(x, y)
        p = classify.predict(model, np.array([[1.0]]))
        assert math.isclose(p[0], 20.0 / 29.0, abs_tol=1e-12)

    def test_matches_bruteforce_enumeration(self):
        """Posterior equals the directly enumerated Bayes rule with the
        same estimators (sample Gaussian per continuous column, add-one
        Bernoulli per binary column) to within 1e-12."""
        rng = np.random.default_rng(8)
        n = 40
        x = np.column_stack([
            rng.normal(size=n),
            rng.normal(2.0, 0.5, size=n),
            (rng.random(n) < 0.4).astype(float),
            (rng.random(n) < 0.7).astype(float),
        ])
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        y[:2] = [-1.0, -1.0]
        y[2:4] = [1.0, 1.0]
        model = classify.train_nb(x, y)
        probe = x[:10]

        def density(row, cls_rows):
            dens = len(cls_rows) / n  # prior
            for j in (0, 1):  # continuous
                mu = sum(r[j] for r in cls_rows) / len(cls_rows)
                var = sum((r[j] - mu) ** 2 for r in cls_rows) / len(cls_rows)
                var = max(var, 1e-9)
                dens *= math.exp(-0.5 * (row[j] - mu) ** 2 / var) / math.sqrt(
                    2.0 * math.pi * var
                )
            for j in (2, 3):  # binary
                p1 = (sum(r[j] for r in cls_rows) + 1.0) / (len(cls_rows) + 2.0)
                dens *= p1 if row[j] == 1.0 else (1.0 - p1)
            return dens

        left_rows = [x[i] for i in range(n) if y[i] < 0]
        right_rows = [x[i] for i in range(n) if y[i] > 0]
        expected = np.array([
            density(row, right_rows)
            / (density(row, right_rows) + density(row, left_rows))
            for row in probe
        ])
        np.testing.assert_allclose(classify.predict(model, probe), expected, atol=1e-12)

    def test_binary_columns_detected(self):
        x = np.array([[0.0, 0.5, 1.0], [1.0, 0.7, 1.0], [0.0, 0.2, 0.0], [1.0, 0.9, 2.0]])
        np.testing.assert_array_equal(
            classify.detect_binary_columns(x), [True, False, False]
        )

    def test_explicit_mask_overrides_detection(self):
        rng = np.random.default_rng(3)
        x = (rng.random((12, 2)) < 0.5).astype(float)
        y = np.array([-1.0, 1.0] * 6)
        as_bernoulli = classify.train_nb(x, y)
        as_gaussian = classify.train_nb(x, y, binary_mask=[False, False])
        assert as_bernoulli.inner.bern_logp1.shape == (2, 2)
        assert as_gaussian.inner.gauss_mean.shape == (2, 2)
        assert as_gaussian.inner.bern_logp1.size == 0

    def test_needs_two_examples_per_class(self):
        with pytest.raises(ValueError, match="2 examples per class"):
            classify.train_nb(np.eye(3), np.array([-1.0, 1.0, 1.0]))


class TestNeuralNet:
    def test_analytic_gradients_match_central_differences(self):
        rng = np.random.default_rng(12)
        n, d, hidden = 7, 3, 5
        x = rng.normal(size=(n, d))
        labels = rng.integers(0, 2, size=n)
        onehot = np.zeros((n, 2))
        onehot[np.arange(n), labels] = 1.0
        params = [
            rng.normal(size=(d, hidden)),
            rng.normal(size=hidden),
            rng.normal(size=(hidden, 2)),
            rng.normal(size=2),
        ]

        _, *grads = nn.loss_and_grads(x, onehot, *params)

        h = 1e-5
        worst = 0.0
        for p, g in zip(params, grads):
            flat_p = p.ravel()
            flat_g = g.ravel()
            for idx in range(flat_p.size):
                orig = flat_p[idx]
                flat_p[idx] = orig + h
                up = nn.loss_and_grads(x, onehot, *params)[0]
                flat_p[idx] = orig - h
                dn = nn.loss_and_grads(x, onehot, *params)[0]
                flat_p[idx] = orig
                fd = (up - dn) / (2.0 * h)
                rel = abs(flat_g[idx] - fd) / max(abs(flat_g[idx]) + abs(fd), 1e-8)
                worst = max(worst, rel)
        assert worst <= 1e-4, f"max relative gradient error {worst}"

    def test_learns_separable_blobs(self):
        x, y = _blobs(100, sep=4.0, seed=5)
        model = classify.train_nn(x, y, hidden=16, epochs=60, seed=0)
        p = classify.predict(model, x)
        acc = ((p > 0.5) == (y > 0)).mean()
        assert acc >= 0.99

    def test_seed_determinism(self):
        x, y = _blobs(30, seed=6)
        a = nn.train_nn(x, y, hidden=8, epochs=10, seed=3)
        b = nn.train_nn(x, y, hidden=8, epochs=10, seed=3)
        np.testing.assert_array_equal(a.w1, b.w1)
        np.testing.assert_array_equal(a.w2, b.w2)

    def test_nonfinite_loss_raises(self):
        x, y = _blobs(20, seed=7)
        x[0, 0] = np.inf  # poisons the epoch loss on the first pass
        with np.errstate(invalid="ignore"):
            with pytest.raises(ValueError, match="lower lr"):
                nn.train_nn(x, y, hidden=4, epochs=2, seed=0)

    def test_constant_column_does_not_blow_up(self):
        x, y = _blobs(25, seed=8)
        x = np.column_stack([x, np.full(len(x), 3.3)])
        model = classify.train_nn(x, y, hidden=8, epochs=20, seed=0)
        assert np.isfinite(classify.predict(model, x)).all()


class TestThresholdRule:
    CASES = [
        (0.90, 0.5, "Right"),
        (0.10, 0.5, "Left"),
        (0.50, 0.5, "Right"),  # exact tie goes Right by rule order
        (0.60, 0.7, "Unknown"),
        (0.30, 0.7, "Left"),
        (0.70, 0.7, "Right"),
        (1.00, 1.0, "Right"),
        (0.99, 1.0, "Unknown"),
    ]

    def test_rule_table(self):
        for p, tau, expected in self.CASES:
            assert classify.label_for(p, tau) == expected, (p, tau)

    def test_threshold_range_enforced(self):
        for tau in (0.49, -0.1, 1.01):
            with pytest.raises(ValueError, match="\\[0.5, 1\\]"):
                classify.label_for(0.8, tau)

    def test_apply_threshold_builds_predictions(self):
        preds = classify.apply_threshold(["a", "b"], [0.9, 0.55], 0.7)
        assert [p.label for p in preds] == ["Right", "Unknown"]
        assert [p.user_id for p in preds] == ["a", "b"]
        assert math.isclose(preds[0].p_right, 0.9)

    def test_encode_labels(self):
        np.testing.assert_array_equal(
            classify.encode_labels(["Right", "Left", "Right"]), [1.0, -1.0, 1.0]
        )


class TestFamilyInterface:
    def test_train_model_dispatch_and_unknown_family(self):
        x, y = _blobs(20, seed=9)
        for family in classify.FAMILIES:
            kwargs = {"epochs": 5} if family == "NN" else {}
            model = classify.train_model(family, x, y, **kwargs)
            assert model.family == family
            p = classify.predict(model, x)
            assert p.shape == (len(x),)
            assert ((0.0 <= p) & (p <= 1.0)).all()
        with pytest.raises(ValueError, match="unknown classifier family"):
            classify.train_model("forest", x, y)

    def test_svm_calibration_orients_probabilities(self):
        x, y = _blobs(40, sep=5.0, seed=10)
        model = classify.train_svm(x, y, kernel="linear", seed=0)
        assert model.calibration is not None
        p = classify.predict(model, x)
        assert ((p > 0.5) == (y > 0)).all()

    def test_feature_width_validated(self):
        x, y = _blobs(10, seed=11)
        model = classify.train_nb(x, y)
        with pytest.raises(ValueError, match="feature width"):
            classify.predict(model, np.zeros((2, 5)))


class TestSerialization:
    def test_round_trip_every_family(self, tmp_path):
        x, y = _blobs(20, sep=3.0, seed=13)
        probe = np.random.default_rng(14).normal(size=(8, 2))
        for family in classify.FAMILIES:
            kwargs = {"epochs": 5} if family == "NN" else {}
            model = classify.train_model(family, x, y, **kwargs)
            path = tmp_path / f"{family}.json"
            classify.save_model(model, path)
            back = classify.load_model(path)
            assert back.family == model.family
            assert back.feature_width == model.feature_width
            assert back.calibration == model.calibration
            np.testing.assert_array_equal(
                classify.predict(back, probe), classify.predict(model, probe)
            )

    def test_saved_bytes_deterministic(self, tmp_path):
        x, y = _blobs(15, seed=15)
        model = classify.train_svm(x, y, kernel="poly", seed=1)
        classify.save_model(model, tmp_path / "a.json")
        classify.save_model(model, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_model_with_no_support_vectors_loads(self, tmp_path):
        inner = svm.SvmModel(
            kernel=svm.Kernel("linear"),
            support_vectors=np.zeros((0, 3)),
            support_alpha_y=np.zeros(0),
            bias=0.25,
            converged=True,
        )
        model = classify.ClassifierModel("SVM_lin", 3, inner, (-1.0, 0.0))
        classify.save_model(model, tmp_path / "empty.json")
        back = classify.load_model(tmp_path / "empty.json")
        assert back.inner.support_vectors.shape == (0, 3)
        p = classify.predict(back, np.ones((2, 3)))
        np.testing.assert_allclose(p, 1.0 / (1.0 + np.exp(-0.25)))

    def test_unsupported_container_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "other/9"}\n')
        with pytest.raises(ValueError, match="unsupported model container"):
            classify.load_model(path)
