"""Per-view binary learners.

Two classifiers live here: an L2-regularized logistic regression trained by
full-batch gradient descent over context vectors (the per-concept learner),
and a multinomial naive Bayes over unigram+bigram counts (the document-level
baseline). Both are deterministic and serialize to JSON at full precision.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, asdict

import numpy as np

PROB_FLOOR = 1e-6  # keeps J-way probability products away from exact 0


class LearnerError(ValueError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2_lambda: float = 1e-3
    seed: int = 0
    convergence_tolerance: float = 1e-7

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise LearnerError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise LearnerError(f"epochs must be >= 1, got {self.epochs}")
        if self.l2_lambda < 0:
            raise LearnerError(f"l2_lambda must be >= 0, got {self.l2_lambda}")


@dataclass
class LogRegModel:
    weights: np.ndarray
    bias: float
    config: TrainConfig
    final_loss: float = math.nan
    epochs_run: int = 0

    def to_dict(self) -> dict:
        return {
            "kind": "logreg",
            "version": 1,
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "config": asdict(self.config),
            "final_loss": self.final_loss,
            "epochs_run": self.epochs_run,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "LogRegModel":
        if raw.get("kind") != "logreg":
            raise LearnerError(f"not a logreg record: kind={raw.get('kind')!r}")
        return cls(
            weights=np.asarray(raw["weights"], dtype=float),
            bias=float(raw["bias"]),
            config=TrainConfig(**raw["config"]),
            final_loss=float(raw["final_loss"]),
            epochs_run=int(raw["epochs_run"]),
        )


def _sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss_and_grad(w, b, X, y, l2_lambda):
    n = len(y)
    z = X @ w + b
    # mean softplus(z) - y*z is the log-loss without intermediate probabilities,
    # so it stays finite and exactly differentiable for any |z|
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * l2_lambda * float(w @ w)
    residual = _sigmoid(z) - y
    grad_w = X.T @ residual / n + l2_lambda * w
    grad_b = float(np.mean(residual))
    return loss, grad_w, grad_b


def loss_gradient(model: LogRegModel, X, y) -> tuple[float, np.ndarray]:
    """Regularized log-loss and its analytic gradient in (weights, bias).

    The returned gradient vector has the bias derivative appended as its
    last entry, matching the layout finite-difference checks use.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[1] != model.weights.shape[0]:
        raise LearnerError(
            f"dimension mismatch: model has {model.weights.shape[0]}, data has {X.shape[1]}"
        )
    loss, grad_w, grad_b = _loss_and_grad(
        model.weights, model.bias, X, y, model.config.l2_lambda
    )
    return loss, np.append(grad_w, grad_b)


def train_logreg(X, y, cfg: TrainConfig, allow_single_class: bool = False) -> LogRegModel:
    """Fit logistic regression by full-batch gradient descent.

    Minimizes mean log-loss plus (l2_lambda/2)*||w||^2 (bias unpenalized)
    from a zero start, stopping early once the loss improvement drops below
    the configured tolerance. Deterministic for fixed inputs.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[0] < 1:
        raise LearnerError(f"bad training shapes: X {X.shape}, y {y.shape}")
    if not allow_single_class and len(np.unique(y)) < 2:
        raise LearnerError("training data contains a single class")
    w = np.zeros(X.shape[1])
    b = 0.0
    prev = math.inf
    loss = math.nan
    epochs_run = 0
    for _ in range(cfg.epochs):
        loss, grad_w, grad_b = _loss_and_grad(w, b, X, y, cfg.l2_lambda)
        if abs(prev - loss) < cfg.convergence_tolerance:
            break
        w -= cfg.learning_rate * grad_w
        b -= cfg.learning_rate * grad_b
        prev = loss
        epochs_run += 1
    loss, _, _ = _loss_and_grad(w, b, X, y, cfg.l2_lambda)
    return LogRegModel(weights=w, bias=b, config=cfg, final_loss=loss, epochs_run=epochs_run)


def predict_proba(model: LogRegModel, x) -> float:
    """Positive-class probability sigmoid(w.x + b), clipped into (0, 1)."""
    x = np.asarray(x, dtype=float)
    if x.shape != model.weights.shape:
        raise LearnerError(
            f"dimension mismatch: model has {model.weights.shape[0]}, vector has {x.shape}"
        )
    p = _sigmoid(np.atleast_1d(model.weights @ x + model.bias))[0]
    return float(np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR))


def predict_proba_batch(model: LogRegModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        return np.empty(0)
    p = _sigmoid(X @ model.weights + model.bias)
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


# ---------------------------------------------------------------------------
# Multinomial naive Bayes over unigram+bigram counts
# ---------------------------------------------------------------------------

OOV = "\x00oov"  # reserved feature holding the smoothing mass of unseen tokens


def ngram_counts(tokens, max_n: int = 2) -> Counter:
    """Unigram and bigram multiset of a token sequence.

    Bigrams are stored as space-joined strings; tokens never contain
    whitespace so the two feature kinds cannot collide.
    """
    counts = Counter(tokens)
    if max_n >= 2:
        counts.update(" ".join(pair) for pair in zip(tokens, tokens[1:]))
    return counts


@dataclass
class NBModel:
    class_order: tuple[str, str]
    log_priors: np.ndarray            # aligned with class_order
    log_likelihoods: dict             # feature -> per-class log P(feature | class)
    log_oov: np.ndarray               # per-class log mass of any unseen feature
    alpha: float

    def to_dict(self) -> dict:
        return {
            "kind": "nb",
            "version": 1,
            "class_order": list(self.class_order),
            "log_priors": self.log_priors.tolist(),
            "log_likelihoods": {f: v.tolist() for f, v in self.log_likelihoods.items()},
            "log_oov": self.log_oov.tolist(),
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "NBModel":
        if raw.get("kind") != "nb":
            raise LearnerError(f"not an nb record: kind={raw.get('kind')!r}")
        return cls(
            class_order=tuple(raw["class_order"]),
            log_priors=np.asarray(raw["log_priors"], dtype=float),
            log_likelihoods={
                f: np.asarray(v, dtype=float) for f, v in raw["log_likelihoods"].items()
            },
            log_oov=np.asarray(raw["log_oov"], dtype=float),
            alpha=float(raw["alpha"]),
        )


def train_nb(feature_counts, labels, alpha: float = 1.0,
             class_order=("negative", "positive")) -> NBModel:
    """Laplace-smoothed multinomial NB from per-document feature multisets.

    The vocabulary comes from the training documents only; one extra
    smoothing slot absorbs features unseen at training time, so the
    per-class likelihoods (vocabulary plus that slot) sum to one.
    """
    return _train_nb_weighted(
        feature_counts,
        [{label: 1.0} for label in labels],
        alpha,
        class_order,
    )


def _train_nb_weighted(feature_counts, class_weights, alpha, class_order):
    """NB estimation where each document contributes fractional class mass.

    `class_weights[i]` maps class name -> weight of document i; ordinary
    supervised training uses weight 1 on the gold class. Shared with the
    EM baseline, whose E-step produces fractional posteriors.
    """
    if alpha <= 0:
        raise LearnerError(f"alpha must be > 0, got {alpha}")
    if len(feature_counts) != len(class_weights) or not feature_counts:
        raise LearnerError("feature_counts and labels must be equal-length and non-empty")
    class_index = {c: i for i, c in enumerate(class_order)}
    doc_mass = np.zeros(2)
    token_totals = np.zeros(2)
    table = {}
    for counts, weights in zip(feature_counts, class_weights):
        # every document contributes vocabulary, even at weight zero, so the
        # model family stays fixed when weights change across EM iterations
        for feat in counts:
            if feat == OOV:
                raise LearnerError("reserved feature name in training data")
            if feat not in table:
                table[feat] = np.zeros(2)
        for label, weight in weights.items():
            if label not in class_index:
                raise LearnerError(f"unknown class {label!r}")
            if weight == 0.0:
                continue
            ci = class_index[label]
            doc_mass[ci] += weight
            for feat, c in counts.items():
                table[feat][ci] += weight * c
                token_totals[ci] += weight * c
    if np.any(doc_mass == 0):
        raise LearnerError("both classes must be present in the training data")
    vocab_size = len(table)
    denom = token_totals + alpha * (vocab_size + 1)  # +1: the unseen-feature slot
    log_likelihoods = {
        feat: np.log((row + alpha) / denom) for feat, row in table.items()
    }
    log_oov = np.log(alpha / denom)
    log_priors = np.log(doc_mass / doc_mass.sum())
    return NBModel(
        class_order=tuple(class_order),
        log_priors=log_priors,
        log_likelihoods=log_likelihoods,
        log_oov=log_oov,
        alpha=alpha,
    )


def nb_joint_log_probs(model: NBModel, feature_count: Counter) -> np.ndarray:
    scores = model.log_priors.copy()
    for feat, c in feature_count.items():
        row = model.log_likelihoods.get(feat)
        if row is None:
            row = model.log_oov
        scores = scores + c * row
    return scores


def nb_predict_proba(model: NBModel, feature_count: Counter) -> float:
    """Posterior probability of the positive class, computed in log space.

    Clipped into [1e-6, 1 - 1e-6] like the logistic outputs, so extreme
    documents never produce an exact 0 or 1.
    """
    scores = nb_joint_log_probs(model, feature_count)
    scores = scores - scores.max()
    probs = np.exp(scores)
    probs /= probs.sum()
    p = float(probs[model.class_order.index("positive")])
    return float(np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR))


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, sort_keys=True)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if raw.get("kind") == "logreg":
        return LogRegModel.from_dict(raw)
    if raw.get("kind") == "nb":
        return NBModel.from_dict(raw)
    if raw.get("kind") == "codecomp":
        from .cotrain import CoDecompModel  # deferred: cotrain imports learners

        return CoDecompModel.from_dict(raw)
    raise LearnerError(f"unknown model kind {raw.get('kind')!r}")
