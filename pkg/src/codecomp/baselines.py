"""Document-level reference models: naive Bayes and EM-augmented naive Bayes.

Both operate on unigram+bigram counts of the raw, unmasked text. The EM
variant folds unlabeled documents in with fractional class posteriors,
re-estimating until the (weighted) observed-data log-likelihood stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .concepts import tokenize
from .learners import (
    LearnerError,
    NBModel,
    _train_nb_weighted,
    nb_joint_log_probs,
    nb_predict_proba,
    ngram_counts,
    train_nb,
)


@dataclass(frozen=True)
class EMConfig:
    max_iterations: int = 20
    unlabeled_weight: float = 1.0
    convergence_tolerance: float = 1e-6

    def __post_init__(self):
        if self.max_iterations < 1:
            raise LearnerError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not (0.0 < self.unlabeled_weight <= 1.0):
            raise LearnerError(
                f"unlabeled_weight must lie in (0, 1], got {self.unlabeled_weight}"
            )


def document_features(doc):
    return ngram_counts([t.surface for t in tokenize(doc.text)])


def nb_baseline_fit(labeled_docs, alpha: float = 1.0) -> NBModel:
    """Supervised NB over unigrams+bigrams of the raw text."""
    features = [document_features(d) for d in labeled_docs]
    labels = [d.gold_label for d in labeled_docs]
    return train_nb(features, labels, alpha=alpha)


def nb_label(model: NBModel, doc) -> str:
    return "positive" if nb_predict_proba(model, document_features(doc)) >= 0.5 else "negative"


def _posteriors(model: NBModel, features) -> np.ndarray:
    joint = nb_joint_log_probs(model, features)
    joint = joint - joint.max()
    p = np.exp(joint)
    return p / p.sum()


def _observed_log_likelihood(model, labeled_feats, labels, unlabeled_feats, weight):
    """Labeled joint log-probability plus weighted unlabeled marginals."""
    total = 0.0
    for feats, label in zip(labeled_feats, labels):
        joint = nb_joint_log_probs(model, feats)
        total += joint[model.class_order.index(label)]
    for feats in unlabeled_feats:
        joint = nb_joint_log_probs(model, feats)
        m = joint.max()
        total += weight * (m + np.log(np.exp(joint - m).sum()))
    return float(total)


def em_fit(labeled_docs, unlabeled_docs, em_config: EMConfig = EMConfig(),
           alpha: float = 1.0):
    """Semi-supervised NB: E-steps assign fractional labels, M-steps refit.

    Unlabeled contributions are damped by ``unlabeled_weight``. Returns the
    final model and the per-iteration observed-data log-likelihood trace
    (one value per completed E/M pass).
    """
    if not labeled_docs:
        raise LearnerError("em_fit needs at least one labeled document")
    labeled_feats = [document_features(d) for d in labeled_docs]
    labels = [d.gold_label for d in labeled_docs]
    unlabeled_feats = [document_features(d) for d in unlabeled_docs]

    model = train_nb(labeled_feats, labels, alpha=alpha)
    if not unlabeled_feats:
        return model, []
    return _em_iterate(model, labeled_feats, labels, unlabeled_feats,
                       em_config, alpha)


def _em_iterate(model, labeled_feats, labels, unlabeled_feats, em_config, alpha):

    # EM estimates share one vocabulary across labeled and unlabeled text;
    # zero-weight entries keep the count tables aligned from iteration one
    base_weights = [{label: 1.0} for label in labels]
    zero = [{c: 0.0 for c in model.class_order} for _ in unlabeled_feats]
    model = _train_nb_weighted(labeled_feats + unlabeled_feats,
                               base_weights + zero, alpha, model.class_order)

    trace = []
    previous = -np.inf
    w = em_config.unlabeled_weight
    for _ in range(em_config.max_iterations):
        fractional = [
            {
                c: w * float(p)
                for c, p in zip(model.class_order, _posteriors(model, feats))
            }
            for feats in unlabeled_feats
        ]
        model = _train_nb_weighted(labeled_feats + unlabeled_feats,
                                   base_weights + fractional, alpha,
                                   model.class_order)
        objective = _observed_log_likelihood(model, labeled_feats, labels,
                                             unlabeled_feats, w)
        trace.append(objective)
        if abs(objective - previous) < em_config.convergence_tolerance:
            break
        previous = objective
    return model, trace


def em_pool_size_sweep(labeled_docs, unlabeled_docs, pool_sizes=(10, 20, 50, 100),
                       em_config: EMConfig = EMConfig(), alpha: float = 1.0):
    """Fit EM at several unlabeled-pool sizes (the semi-supervision knob).

    Returns one (pool_size, model, trace) triple per size; sizes beyond the
    available pool use everything there is.
    """
    out = []
    for size in pool_sizes:
        model, trace = em_fit(labeled_docs, unlabeled_docs[:size], em_config,
                              alpha=alpha)
        out.append((size, model, trace))
    return out
