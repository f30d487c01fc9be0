import json
from collections import Counter

import numpy as np
import pytest

from codecomp.learners import (
    LearnerError,
    LogRegModel,
    NBModel,
    TrainConfig,
    load_model,
    loss_gradient,
    nb_predict_proba,
    ngram_counts,
    predict_proba,
    predict_proba_batch,
    save_model,
    train_logreg,
    train_nb,
)


def _zero_model(dim, l2_lambda=0.0):
    return LogRegModel(weights=np.zeros(dim), bias=0.0,
                       config=TrainConfig(l2_lambda=l2_lambda))


class TestLogReg:
    def test_separable_points(self):
        e1 = np.zeros(4)
        e1[0] = 1.0
        model = train_logreg([e1, -e1], [1, 0], TrainConfig())
        assert predict_proba(model, e1) > 0.5 > predict_proba(model, -e1)

    def test_zero_epochs_forbidden(self):
        with pytest.raises(LearnerError, match="epochs"):
            TrainConfig(epochs=0)

    def test_bad_learning_rate(self):
        with pytest.raises(LearnerError, match="learning_rate"):
            TrainConfig(learning_rate=0.0)

    def test_training_reduces_loss(self):
        rng = np.random.default_rng(17)
        X = rng.normal(size=(50, 8))
        y = (rng.random(50) < 0.5).astype(float)
        cfg = TrainConfig()
        initial_loss, _ = loss_gradient(
            LogRegModel(weights=np.zeros(8), bias=0.0, config=cfg), X, y)
        model = train_logreg(X, y, cfg)
        assert model.final_loss <= initial_loss

    def test_loss_monotone_over_epoch_budgets(self):
        # fixed fixture, step below the stability bound: more epochs never
        # ends at a higher loss
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 5))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        y = (rng.random(30) < 0.4).astype(float)
        losses = [
            train_logreg(X, y, TrainConfig(learning_rate=0.5, epochs=k,
                                           convergence_tolerance=0.0)).final_loss
            for k in range(1, 40)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_single_class_needs_flag(self):
        X = np.ones((3, 2))
        with pytest.raises(LearnerError, match="single class"):
            train_logreg(X, [1, 1, 1], TrainConfig())
        model = train_logreg(X, [1, 1, 1], TrainConfig(), allow_single_class=True)
        assert predict_proba(model, np.ones(2)) > 0.5

    def test_gradient_closed_form_at_zero_weights(self):
        x = np.array([0.5, -2.0, 1.0])
        lam = 0.25
        bias = 0.7
        model = LogRegModel(weights=np.zeros(3), bias=bias,
                            config=TrainConfig(l2_lambda=lam))
        _, grad = loss_gradient(model, x[None, :], np.array([1.0]))
        sigma = 1.0 / (1.0 + np.exp(-bias))
        np.testing.assert_allclose(grad[:3], (sigma - 1.0) * x, atol=1e-12)
        np.testing.assert_allclose(grad[3], sigma - 1.0, atol=1e-12)

    def test_regularizer_gradient_is_lambda_w(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(10, 4))
        y = (rng.random(10) < 0.5).astype(float)
        w = rng.normal(size=4)
        lam = 0.3
        with_reg = LogRegModel(weights=w, bias=0.2, config=TrainConfig(l2_lambda=lam))
        without = LogRegModel(weights=w, bias=0.2, config=TrainConfig(l2_lambda=0.0))
        _, g1 = loss_gradient(with_reg, X, y)
        _, g0 = loss_gradient(without, X, y)
        np.testing.assert_allclose(g1[:4] - g0[:4], lam * w, atol=1e-12)
        np.testing.assert_allclose(g1[4], g0[4], atol=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        h = 1e-5
        for _ in range(20):
            dim = int(rng.integers(1, 12))
            n = int(rng.integers(2, 20))
            X = rng.normal(size=(n, dim))
            y = (rng.random(n) < 0.5).astype(float)
            w = rng.normal(size=dim) * 0.5
            b = float(rng.normal() * 0.5)
            model = LogRegModel(weights=w, bias=b,
                                config=TrainConfig(l2_lambda=0.01))

            def loss_at(theta):
                m = LogRegModel(weights=theta[:dim], bias=float(theta[dim]),
                                config=model.config)
                return loss_gradient(m, X, y)[0]

            theta = np.append(w, b)
            _, analytic = loss_gradient(model, X, y)
            numeric = np.empty_like(theta)
            for i in range(theta.size):
                bump = np.zeros_like(theta)
                bump[i] = h
                numeric[i] = (loss_at(theta + bump) - loss_at(theta - bump)) / (2 * h)
            denom = np.maximum(np.abs(numeric), 1e-8)
            assert np.max(np.abs(analytic - numeric) / denom) < 1e-4

    def test_predict_proba_identity_and_clipping(self):
        model = _zero_model(3)
        assert predict_proba(model, np.array([5.0, -1.0, 2.0])) == 0.5
        hot = LogRegModel(weights=np.array([100.0]), bias=0.0, config=TrainConfig())
        assert predict_proba(hot, np.array([10.0])) == pytest.approx(1 - 1e-6)
        assert predict_proba(hot, np.array([-10.0])) == pytest.approx(1e-6)

    def test_predict_proba_monotone_in_score(self):
        rng = np.random.default_rng(2)
        w = rng.normal(size=6)
        model = LogRegModel(weights=w, bias=0.1, config=TrainConfig())
        X = rng.normal(size=(100, 6))
        scores = X @ w + 0.1
        order = np.argsort(scores)
        probs = predict_proba_batch(model, X)[order]
        assert np.all(np.diff(probs) >= 0)

    def test_dimension_mismatch(self):
        model = _zero_model(3)
        with pytest.raises(LearnerError, match="dimension"):
            predict_proba(model, np.zeros(4))

    def test_deterministic(self):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(40, 6))
        y = (rng.random(40) < 0.5).astype(float)
        a = train_logreg(X, y, TrainConfig())
        b = train_logreg(X, y, TrainConfig())
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.bias == b.bias

    def test_serialization_roundtrip(self, tmp_path):
        rng = np.random.default_rng(9)
        X = rng.normal(size=(20, 4))
        y = (rng.random(20) < 0.5).astype(float)
        model = train_logreg(X, y, TrainConfig(epochs=50))
        path = tmp_path / "logreg.json"
        save_model(model, path)
        again = load_model(path)
        np.testing.assert_array_equal(again.weights, model.weights)
        assert again.bias == model.bias
        assert again.config == model.config


# brute-force Bayes oracle: plain-float joint probabilities, recomputed from
# raw counts with the same +1-slot smoothing convention
def _oracle_nb(feature_counts, labels, alpha):
    classes = ("negative", "positive")
    doc_counts = {c: 0 for c in classes}
    token_counts = {c: Counter() for c in classes}
    vocab = set()
    for counts, label in zip(feature_counts, labels):
        doc_counts[label] += 1
        token_counts[label].update(counts)
        vocab |= set(counts)

    def posterior_positive(counts):
        joint = {}
        for c in classes:
            total = sum(token_counts[c].values())
            denom = total + alpha * (len(vocab) + 1)
            p = doc_counts[c] / sum(doc_counts.values())
            for feat, k in counts.items():
                if feat in vocab:
                    p_feat = (token_counts[c][feat] + alpha) / denom
                else:
                    p_feat = alpha / denom
                p *= p_feat ** k
            joint[c] = p
        return joint["positive"] / (joint["positive"] + joint["negative"])

    return posterior_positive


class TestNaiveBayes:
    def test_toy_posterior_hand_computed(self):
        # vocabulary {sick, flu, "sick flu", shot, "flu shot"}, alpha=1:
        # P(sick|+) = 2/9, P(sick|-) = 1/9, equal priors -> posterior 2/3
        docs = [ngram_counts(["sick", "flu"]), ngram_counts(["flu", "shot"])]
        model = train_nb(docs, ["positive", "negative"], alpha=1.0)
        post = nb_predict_proba(model, Counter({"sick": 1}))
        assert post == pytest.approx(2 / 3, abs=1e-12)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(13)
        vocab = [f"w{i}" for i in range(8)]
        docs = []
        labels = []
        for i in range(30):
            tokens = [vocab[rng.integers(8)] for _ in range(int(rng.integers(1, 6)))]
            docs.append(ngram_counts(tokens))
            labels.append("positive" if rng.random() < 0.5 else "negative")
        if len(set(labels)) < 2:
            labels[0] = "positive"
            labels[1] = "negative"
        model = train_nb(docs, labels, alpha=0.7)
        oracle = _oracle_nb(docs, labels, alpha=0.7)
        for _ in range(50):
            tokens = [vocab[rng.integers(8)] for _ in range(int(rng.integers(0, 6)))]
            query = ngram_counts(tokens)
            np.testing.assert_allclose(
                nb_predict_proba(model, query), oracle(query), atol=1e-9)

    def test_unseen_token_gets_smoothing_mass(self):
        docs = [Counter({"a": 2}), Counter({"b": 2})]
        model = train_nb(docs, ["positive", "negative"])
        p = nb_predict_proba(model, Counter({"never-seen": 3}))
        assert 0.0 < p < 1.0
        assert p == pytest.approx(0.5)  # symmetric training data

    def test_priors_proportional_to_counts(self):
        docs = [Counter({"a": 1})] * 3 + [Counter({"b": 1})]
        model = train_nb(docs, ["positive"] * 3 + ["negative"])
        np.testing.assert_allclose(np.exp(model.log_priors), [0.25, 0.75])

    def test_likelihoods_sum_to_one(self):
        rng = np.random.default_rng(4)
        docs = [ngram_counts([f"t{rng.integers(10)}" for _ in range(5)])
                for _ in range(20)]
        labels = ["positive" if i % 2 else "negative" for i in range(20)]
        model = train_nb(docs, labels, alpha=0.5)
        for ci in range(2):
            total = sum(np.exp(v[ci]) for v in model.log_likelihoods.values())
            total += np.exp(model.log_oov[ci])
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_posterior_complements_sum_to_one(self):
        docs = [Counter({"a": 1}), Counter({"b": 1})]
        model = train_nb(docs, ["positive", "negative"])
        for counts in (Counter({"a": 2}), Counter({"a": 1, "b": 1})):
            p = nb_predict_proba(model, counts)
            flipped = train_nb(docs, ["negative", "positive"])
            q = nb_predict_proba(flipped, counts)
            assert p + q == pytest.approx(1.0, abs=1e-12)

    def test_no_underflow_on_long_documents(self):
        docs = [Counter({"a": 1, "b": 2}), Counter({"c": 1})]
        model = train_nb(docs, ["positive", "negative"])
        long_doc = Counter({"a": 4000, "b": 3000, "c": 3000})
        p = nb_predict_proba(model, long_doc)
        assert np.isfinite(p) and 0.0 < p < 1.0

    def test_single_class_rejected(self):
        with pytest.raises(LearnerError, match="both classes"):
            train_nb([Counter({"a": 1})], ["positive"])

    def test_alpha_positive(self):
        with pytest.raises(LearnerError, match="alpha"):
            train_nb([Counter({"a": 1}), Counter({"b": 1})],
                     ["positive", "negative"], alpha=0.0)

    def test_serialization_roundtrip(self, tmp_path):
        docs = [ngram_counts(["sick", "flu"]), ngram_counts(["flu", "shot"])]
        model = train_nb(docs, ["positive", "negative"])
        path = tmp_path / "nb.json"
        save_model(model, path)
        again = load_model(path)
        assert isinstance(again, NBModel)
        query = ngram_counts(["sick", "never"])
        assert nb_predict_proba(again, query) == nb_predict_proba(model, query)


def test_ngram_counts_unigrams_and_bigrams():
    counts = ngram_counts(["a", "b", "a"])
    assert counts == Counter({"a": 2, "b": 1, "a b": 1, "b a": 1})


def test_load_model_unknown_kind(tmp_path):
    path = tmp_path / "x.json"
    path.write_text(json.dumps({"kind": "mystery"}), encoding="utf-8")
    with pytest.raises(LearnerError, match="unknown model kind"):
        load_model(path)
