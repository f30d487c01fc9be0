"""
Corpus protocol: stratified folds, n-labeled sampling, view similarity
======================================================================

Reproduces the evaluation protocol mechanics on a synthetic corpus shaped
like the crisis dataset (2,013 documents, 11% positive): stratified 10-fold
plans, a 100-document labeled sample with the rest treated as unlabeled, and
the advisory context-similarity report for each concept view.
"""

from collections import Counter

from codecomp import (
    HashedWindowProvider,
    SampleSpec,
    load_lexicons,
    process_document,
    sample_labeled,
    stratified_folds,
    validate_kcs_gamma,
)
from codecomp.synthetic import decomposable_corpus

docs, preset = decomposable_corpus(2013, seed=60, positive_rate=0.11)
positives = sum(d.gold_label == "positive" for d in docs)
print(f"corpus: {len(docs)} documents, {positives} positive "
      f"({positives / len(docs):.1%})")

plan = stratified_folds(docs, k=10, seed=613)
gold = {d.id: d.gold_label for d in docs}
per_fold = Counter()
for doc_id, fold in plan.assignments.items():
    if gold[doc_id] == "positive":
        per_fold[fold] += 1
print("positives per fold:", [per_fold[f] for f in range(10)])

train_ids = {d for d, f in plan.assignments.items() if f != 0}
train_split = [d for d in docs if d.id in train_ids]
labeled, unlabeled = sample_labeled(train_split, SampleSpec(n_labeled=100, seed=7))
print(f"fold 0 held out; sampled {len(labeled)} labeled "
      f"({sum(d.gold_label == 'positive' for d in labeled)} positive), "
      f"{len(unlabeled)} unlabeled (gold hidden)")

# how tightly does each view's context cluster? advisory only
lexicons = load_lexicons()
provider = HashedWindowProvider(window=2, dim=64)
pdocs = [process_document(d, preset, lexicons) for d in docs[:300]]
for kcs in preset.kcs_list:
    report = validate_kcs_gamma(provider, pdocs, kcs.name, gamma=1.4,
                                sample_pairs=500, seed=1)
    flag = "ok" if report.satisfied else "loose"
    print(f"{kcs.name}: max distance {report.max_distance:.3f}, "
          f"95th percentile {report.quantile95_distance:.3f} [{flag}]")
