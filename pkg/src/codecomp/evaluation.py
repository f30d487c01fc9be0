"""Experiment orchestration: folds x repetitions, metrics, ablation, sweeps.

One master seed pins everything. Repetition r derives seed (master + r) for
its fold plan and labeled sampling, so rerunning any model spec against the
same corpus and seed reproduces the splits -- and the reports -- exactly.
Metrics are precision/recall/F1 of the positive class; fold metrics average
within a repetition first, then across repetitions.
"""

from __future__ import annotations

import concurrent.futures
import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

from .baselines import EMConfig, document_features, em_fit, nb_baseline_fit
from .concepts import (
    Lexicons,
    TaskPreset,
    UNLABELED,
    load_lexicons,
    process_document,
)
from .context import HashedWindowProvider
from .corpus import (
    NEGATIVE,
    POSITIVE,
    SampleSpec,
    sample_labeled,
    stratified_folds,
)
from .cotrain import (
    CoConfig,
    Example,
    ViewInstances,
    ablation_variants,
    build_examples,
    cotrain_fit,
    predict_many,
)
from .learners import TrainConfig, nb_predict_proba


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class Metrics:
    """Positive-class precision/recall/F1 plus the raw confusion counts."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise EvalError("confusion counts must be non-negative")

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp > 0 else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn > 0 else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
        }


def compute_metrics(predictions: dict, gold: dict) -> Metrics:
    """Confusion counts over aligned id -> label maps."""
    if set(predictions) != set(gold):
        missing = set(gold) ^ set(predictions)
        raise EvalError(f"prediction/gold id mismatch on {len(missing)} ids")
    tp = fp = fn = tn = 0
    for doc_id, predicted in predictions.items():
        actual = gold[doc_id]
        if predicted == POSITIVE and actual == POSITIVE:
            tp += 1
        elif predicted == POSITIVE:
            fp += 1
        elif actual == POSITIVE:
            fn += 1
        else:
            tn += 1
    return Metrics(tp=tp, fp=fp, fn=fn, tn=tn)


def _mean_of(metric_rows) -> dict:
    """Average fold metrics within each repetition, then across repetitions."""
    by_rep = {}
    for rep, _, m in metric_rows:
        by_rep.setdefault(rep, []).append(m)
    rep_means = {
        name: [
            sum(getattr(m, name) for m in ms) / len(ms) for ms in by_rep.values()
        ]
        for name in ("precision", "recall", "f1")
    }
    return {name: sum(vals) / len(vals) for name, vals in rep_means.items()}


@dataclass
class RunReport:
    model: str
    runs: list                      # (repetition, fold, Metrics)
    mean: dict                      # precision/recall/f1 averages
    config_fingerprint: str
    master_seed: int
    seeds: list
    k_folds: int
    n_labeled: int
    repetitions: int

    def to_json(self) -> str:
        return json.dumps({
            "model": self.model,
            "config_fingerprint": self.config_fingerprint,
            "master_seed": self.master_seed,
            "seeds": self.seeds,
            "k_folds": self.k_folds,
            "n_labeled": self.n_labeled,
            "repetitions": self.repetitions,
            "runs": [
                {"repetition": rep, "fold": fold, **m.to_dict()}
                for rep, fold, m in self.runs
            ],
            "mean": self.mean,
        }, sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model", "repetition", "fold", "tp", "fp", "fn", "tn",
                         "precision", "recall", "f1"])
        totals = [0, 0, 0, 0]
        for rep, fold, m in self.runs:
            writer.writerow([self.model, rep, fold, m.tp, m.fp, m.fn, m.tn,
                             repr(m.precision), repr(m.recall), repr(m.f1)])
            for i, v in enumerate((m.tp, m.fp, m.fn, m.tn)):
                totals[i] += v
        writer.writerow([self.model, "mean", "all", *totals,
                         repr(self.mean["precision"]), repr(self.mean["recall"]),
                         repr(self.mean["f1"])])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Model specs and their fit/predict runners
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NBSpec:
    alpha: float = 1.0
    name: str = "nb"

    def describe(self) -> dict:
        return {"model": "nb", "alpha": self.alpha}


@dataclass(frozen=True)
class EMSpec:
    alpha: float = 1.0
    em_config: EMConfig = field(default_factory=EMConfig)
    name: str = "em"

    def describe(self) -> dict:
        return {
            "model": "em", "alpha": self.alpha,
            "max_iterations": self.em_config.max_iterations,
            "unlabeled_weight": self.em_config.unlabeled_weight,
            "convergence_tolerance": self.em_config.convergence_tolerance,
        }


@dataclass(frozen=True)
class CoDecompSpec:
    preset: TaskPreset
    provider: object = field(default_factory=HashedWindowProvider)
    co_config: CoConfig = field(default_factory=CoConfig)
    train_config: TrainConfig = field(default_factory=TrainConfig)
    lexicons: Lexicons | None = None
    name: str = "codecomp"

    def describe(self) -> dict:
        from dataclasses import asdict

        return {
            "model": "codecomp",
            "task": self.preset.name,
            "views": [k.name for k in self.preset.kcs_list],
            "provider": self.provider.spec(),
            "co_config": asdict(self.co_config),
            "train_config": asdict(self.train_config),
        }


class _NBRunner:
    def __init__(self, corpus, spec: NBSpec):
        self.spec = spec
        self.features = {d.id: document_features(d) for d in corpus}

    def fit_predict(self, labeled, unlabeled, test):
        model = nb_baseline_fit(labeled, alpha=self.spec.alpha)
        return {
            d.id: POSITIVE if nb_predict_proba(model, self.features[d.id]) >= 0.5
            else NEGATIVE
            for d in test
        }


class _EMRunner:
    def __init__(self, corpus, spec: EMSpec):
        self.spec = spec
        self.features = {d.id: document_features(d) for d in corpus}

    def fit_predict(self, labeled, unlabeled, test):
        model, _ = em_fit(labeled, unlabeled, self.spec.em_config,
                          alpha=self.spec.alpha)
        return {
            d.id: POSITIVE if nb_predict_proba(model, self.features[d.id]) >= 0.5
            else NEGATIVE
            for d in test
        }


class _CoDecompRunner:
    """Caches per-document mention extraction and context vectors.

    Mention structure and vectors are label-independent, so they are
    computed once per corpus; each fold only reassigns instance labels.
    """

    def __init__(self, corpus, spec: CoDecompSpec):
        self.spec = spec
        lexicons = spec.lexicons if spec.lexicons is not None else load_lexicons()
        self.kcs_names = tuple(k.name for k in spec.preset.kcs_list)
        self.examples = {}
        for doc in corpus:
            pdoc = process_document(doc, spec.preset, lexicons)
            self.examples[doc.id] = build_examples(
                [pdoc], spec.provider, self.kcs_names)[0]

    def _as_unlabeled(self, example: Example) -> Example:
        return Example(
            doc_id=example.doc_id,
            views=[ViewInstances(v.vectors, [UNLABELED] * v.size)
                   for v in example.views],
        )

    def fit_predict(self, labeled, unlabeled, test):
        model = cotrain_fit(
            [self.examples[d.id] for d in labeled],
            [self._as_unlabeled(self.examples[d.id]) for d in unlabeled],
            len(self.kcs_names), self.spec.co_config, self.spec.train_config,
            kcs_names=self.kcs_names,
        )
        return predict_many(model, [self.examples[d.id] for d in test])

    def variant_predictions(self, labeled, unlabeled, test, iteration_counts):
        return ablation_variants(
            [self.examples[d.id] for d in labeled],
            [self._as_unlabeled(self.examples[d.id]) for d in unlabeled],
            len(self.kcs_names), self.spec.co_config, self.spec.train_config,
            iteration_counts, [self.examples[d.id] for d in test],
            kcs_names=self.kcs_names,
        )


def _make_runner(corpus, model_spec):
    if isinstance(model_spec, NBSpec):
        return _NBRunner(corpus, model_spec)
    if isinstance(model_spec, EMSpec):
        return _EMRunner(corpus, model_spec)
    if isinstance(model_spec, CoDecompSpec):
        return _CoDecompRunner(corpus, model_spec)
    raise EvalError(f"unknown model spec {type(model_spec).__name__}")


def config_fingerprint(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fold_iteration(corpus, plan, n_labeled, seed_r, dev_fold):
    """Yield (fold, labeled, unlabeled, test, gold) per evaluated fold."""
    by_id = {d.id: d for d in corpus}
    for fold in range(plan.k):
        if dev_fold is not None and fold == dev_fold:
            continue
        test_ids = set(plan.fold_ids(fold))
        train = [
            d for d in corpus
            if d.id not in test_ids
            and (dev_fold is None or plan.assignments[d.id] != dev_fold)
        ]
        sample = sample_labeled(train, SampleSpec(n_labeled, seed_r * 8191 + fold))
        test = [by_id[i] for i in sorted(test_ids)]
        gold = {d.id: d.gold_label for d in test}
        yield fold, sample.labeled, sample.unlabeled, test, gold


def _run_repetition(args):
    corpus, model_spec, k_folds, n_labeled, rep, seed_r, dev_fold = args
    runner = _make_runner(corpus, model_spec)
    plan = stratified_folds(corpus, k_folds, seed_r)
    rows = []
    for fold, labeled, unlabeled, test, gold in _fold_iteration(
            corpus, plan, n_labeled, seed_r, dev_fold):
        predictions = runner.fit_predict(labeled, unlabeled, test)
        rows.append((rep, fold, compute_metrics(predictions, gold)))
    return rows


def run_experiment(corpus, model_spec, k_folds: int, sample_spec: SampleSpec,
                   repetitions: int = 5, dev_fold: int | None = None,
                   jobs: int = 1) -> RunReport:
    """Stratified k-fold cross validation with n-labeled subsampling.

    Each repetition re-derives folds and samples from (master seed +
    repetition), trains the model spec on the labeled/unlabeled split of
    every training partition, and scores the held-out fold.
    """
    if repetitions < 1:
        raise EvalError(f"repetitions must be >= 1, got {repetitions}")
    master = sample_spec.seed
    seeds = [master + rep for rep in range(repetitions)]
    tasks = [
        (corpus, model_spec, k_folds, sample_spec.n_labeled, rep, seeds[rep], dev_fold)
        for rep in range(repetitions)
    ]
    if jobs > 1 and repetitions > 1:
        with concurrent.futures.ProcessPoolExecutor(
                max_workers=min(jobs, repetitions)) as pool:
            rep_rows = list(pool.map(_run_repetition, tasks))
    else:
        runner = _make_runner(corpus, model_spec)  # shared across repetitions
        rep_rows = []
        for rep in range(repetitions):
            plan = stratified_folds(corpus, k_folds, seeds[rep])
            rows = []
            for fold, labeled, unlabeled, test, gold in _fold_iteration(
                    corpus, plan, sample_spec.n_labeled, seeds[rep], dev_fold):
                predictions = runner.fit_predict(labeled, unlabeled, test)
                rows.append((rep, fold, compute_metrics(predictions, gold)))
            rep_rows.append(rows)
    runs = [row for rows in rep_rows for row in rows]
    return RunReport(
        model=model_spec.name,
        runs=runs,
        mean=_mean_of(runs),
        config_fingerprint=config_fingerprint({
            **model_spec.describe(),
            "k_folds": k_folds, "n_labeled": sample_spec.n_labeled,
            "repetitions": repetitions, "master_seed": master,
            "dev_fold": dev_fold,
        }),
        master_seed=master,
        seeds=seeds,
        k_folds=k_folds,
        n_labeled=sample_spec.n_labeled,
        repetitions=repetitions,
    )


def ablation_table(corpus, spec: CoDecompSpec, iteration_settings,
                   k_folds: int, sample_spec: SampleSpec,
                   repetitions: int = 5, dev_fold: int | None = None) -> dict:
    """Mean metrics per ablation stage, shared folds and samples throughout.

    Returns an ordered mapping: each single view, the no-promotion
    combination, then one entry per co-training iteration setting.
    """
    iteration_settings = sorted(set(int(k) for k in iteration_settings))
    runner = _CoDecompRunner(corpus, spec)
    master = sample_spec.seed
    variant_rows: dict = {}
    for rep in range(repetitions):
        seed_r = master + rep
        plan = stratified_folds(corpus, k_folds, seed_r)
        for fold, labeled, unlabeled, test, gold in _fold_iteration(
                corpus, plan, sample_spec.n_labeled, seed_r, dev_fold):
            variants = runner.variant_predictions(
                labeled, unlabeled, test, iteration_settings)
            for name, predictions in variants.items():
                variant_rows.setdefault(name, []).append(
                    (rep, fold, compute_metrics(predictions, gold)))
    return {name: _mean_of(rows) for name, rows in variant_rows.items()}


def ablation_csv(table: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", "f1", "precision", "recall"])
    for name, mean in table.items():
        writer.writerow([name, repr(mean["f1"]), repr(mean["precision"]),
                         repr(mean["recall"])])
    return buf.getvalue()


def training_size_sweep(corpus, model_spec, sizes, k_folds: int,
                        master_seed: int, repetitions: int = 5,
                        dev_fold: int | None = None, jobs: int = 1) -> list:
    """One full experiment per labeled-set size, identical folds throughout."""
    sizes = list(sizes)
    if sizes != sorted(sizes):
        raise EvalError("sizes must be ascending")
    out = []
    for n in sizes:
        report = run_experiment(corpus, model_spec, k_folds,
                                SampleSpec(n_labeled=n, seed=master_seed),
                                repetitions=repetitions, dev_fold=dev_fold,
                                jobs=jobs)
        out.append((n, report))
    return out


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n_labeled", "f1", "precision", "recall"])
    for n, report in rows:
        writer.writerow([n, repr(report.mean["f1"]), repr(report.mean["precision"]),
                         repr(report.mean["recall"])])
    return buf.getvalue()
