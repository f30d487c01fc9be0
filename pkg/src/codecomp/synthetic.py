"""Synthetic corpora with a known decomposable structure.

The generator plants two keyword views, "alpha" and "beta", in every
document. Each view's surrounding words are drawn from class-conditional
vocabularies after flipping the document label independently per view with
probability ``view_noise`` -- so each view carries partial, imperfect signal
and their combination is strictly more informative than either alone. Class
counts are exact (round(n * positive_rate)), which keeps stratified-fold
arithmetic predictable in tests and demos.
"""

from __future__ import annotations

import numpy as np

from .concepts import KeyConceptSet, TaskPreset
from .corpus import Document, NEGATIVE, POSITIVE

ALPHA_VIEW = "alpha"
BETA_VIEW = "beta"


def two_view_preset() -> TaskPreset:
    return TaskPreset(
        name="synthetic-two-view",
        kcs_list=(
            KeyConceptSet(name=ALPHA_VIEW, kind="keyword", keywords=("alpha",)),
            KeyConceptSet(name=BETA_VIEW, kind="keyword", keywords=("beta",)),
        ),
    )


def _vocab(prefix: str, size: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(size)]


def _context(rng, positive_words, negative_words, neutral_words, is_positive,
             n_words, ambiguity):
    pool = positive_words if is_positive else negative_words
    words = []
    for _ in range(n_words):
        if rng.random() < ambiguity:
            words.append(neutral_words[rng.integers(len(neutral_words))])
        else:
            words.append(pool[rng.integers(len(pool))])
    return words


def decomposable_corpus(n_docs: int, seed: int, positive_rate: float = 0.3,
                        view_noise: float = 0.2, ambiguity: float = 0.25,
                        class_vocab: int = 30, neutral_vocab: int = 40,
                        extra_occurrence_rate: float = 0.3,
                        confusion_rate: float = 0.5,
                        task: str = "synthetic-two-view"):
    """Build (documents, preset) with exact class counts.

    Every document contains at least one "alpha" and one "beta" occurrence;
    with probability ``extra_occurrence_rate`` a second, uninformative alpha
    occurrence is added, so bag-level max selection has real work to do.

    Filler segments mix in class-vocabulary words uniformly at random
    (``confusion_rate``), making those words informative only next to a
    keyword: a document-level bag of words washes out while the windowed
    mention contexts keep their signal.
    """
    rng = np.random.default_rng(seed)
    n_pos = round(n_docs * positive_rate)
    labels = np.array([1] * n_pos + [0] * (n_docs - n_pos))
    rng.shuffle(labels)

    apos, aneg = _vocab("ap", class_vocab), _vocab("an", class_vocab)
    bpos, bneg = _vocab("bp", class_vocab), _vocab("bn", class_vocab)
    neutral = _vocab("f", neutral_vocab)
    all_class_words = apos + aneg + bpos + bneg

    def filler(k):
        words = []
        for _ in range(k):
            if rng.random() < confusion_rate:
                words.append(all_class_words[rng.integers(len(all_class_words))])
            else:
                words.append(neutral[rng.integers(len(neutral))])
        return words

    docs = []
    for i, y in enumerate(labels):
        a = y if rng.random() >= view_noise else 1 - y
        b = y if rng.random() >= view_noise else 1 - y
        words = []
        words += filler(int(rng.integers(1, 4)))
        words += _context(rng, apos, aneg, neutral, a == 1, 2, ambiguity)
        words += ["alpha"]
        words += _context(rng, apos, aneg, neutral, a == 1, 2, ambiguity)
        words += filler(int(rng.integers(2, 5)))
        words += _context(rng, bpos, bneg, neutral, b == 1, 2, ambiguity)
        words += ["beta"]
        words += _context(rng, bpos, bneg, neutral, b == 1, 2, ambiguity)
        words += filler(int(rng.integers(1, 4)))
        if rng.random() < extra_occurrence_rate:
            words += filler(2) + ["alpha"] + filler(2)
        docs.append(
            Document(
                id=f"d{i:05d}",
                text=" ".join(words),
                gold_label=POSITIVE if y == 1 else NEGATIVE,
                task=task,
            )
        )
    return docs, two_view_preset()
