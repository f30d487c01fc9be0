"""Corpus loading, stratified fold planning, and labeled/unlabeled sampling.

Documents are immutable after load. Fold and sample operations are pure
functions of (input, seed), so one seed pins the exact train/test splits
across every model compared in an experiment.
"""

from __future__ import annotations

import json
import types
from dataclasses import dataclass, field, replace

import numpy as np

POSITIVE = "positive"
NEGATIVE = "negative"
GOLD_LABELS = (POSITIVE, NEGATIVE)


class CorpusError(ValueError):
    """Raised for malformed corpus files or invalid split requests."""


@dataclass(frozen=True)
class Document:
    """One short text with optional gold label and annotated human spans.

    ``positive_human_spans`` holds [start, end) character ranges into
    ``text`` marking the human mentions affected by the event. Only
    positive documents carry them.
    """

    id: str
    text: str
    gold_label: str | None = None
    positive_human_spans: tuple[tuple[int, int], ...] = ()
    task: str = ""

    def __post_init__(self):
        if self.gold_label is not None and self.gold_label not in GOLD_LABELS:
            raise CorpusError(
                f"document {self.id!r}: gold_label must be one of {GOLD_LABELS}, "
                f"got {self.gold_label!r}"
            )
        spans = tuple(tuple(s) for s in self.positive_human_spans)
        object.__setattr__(self, "positive_human_spans", spans)
        for start, end in spans:
            if not (0 <= start < end <= len(self.text)):
                raise CorpusError(
                    f"document {self.id!r}: span [{start}, {end}) outside text bounds"
                )
        for (_, e1), (s2, _) in zip(sorted(spans), sorted(spans)[1:]):
            if s2 < e1:
                raise CorpusError(f"document {self.id!r}: overlapping spans")
        if spans and self.gold_label != POSITIVE:
            raise CorpusError(
                f"document {self.id!r}: positive_human_spans on a non-positive document"
            )


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of every labeled document id to one of k folds."""

    k: int
    assignments: types.MappingProxyType

    def fold_ids(self, fold: int) -> list[str]:
        return sorted(d for d, f in self.assignments.items() if f == fold)

    def to_json(self) -> str:
        return json.dumps(
            {"k": self.k, "assignments": dict(sorted(self.assignments.items()))},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, blob: str) -> "FoldPlan":
        raw = json.loads(blob)
        return cls(k=raw["k"], assignments=types.MappingProxyType(dict(raw["assignments"])))


@dataclass(frozen=True)
class SampleSpec:
    n_labeled: int
    seed: int


@dataclass(frozen=True)
class SampleResult:
    """Labeled/unlabeled partition of a training split.

    Gold labels and spans of the unlabeled side are stripped from the
    documents themselves and kept in ``sealed_gold``, a read-only table
    meant for the evaluator only -- training code never sees it.
    """

    labeled: list[Document]
    unlabeled: list[Document]
    sealed_gold: types.MappingProxyType = field(default_factory=lambda: types.MappingProxyType({}))

    def __iter__(self):
        # allows `labeled, unlabeled = sample_labeled(...)`
        return iter((self.labeled, self.unlabeled))


def _parse_spans(raw, line_no):
    if raw is None:
        return ()
    try:
        return tuple((int(s), int(e)) for s, e in raw)
    except (TypeError, ValueError):
        raise CorpusError(f"line {line_no}: positive_human_spans must be [start, end] pairs")


def load_corpus(path, fmt: str = "jsonl") -> list[Document]:
    """Read a corpus file into a list of Documents, in file order.

    ``jsonl`` is the canonical format (one JSON object per line with keys
    id, text and optionally gold_label, positive_human_spans, task).
    ``tsv`` accepts span-free corpora as id <TAB> label <TAB> text, with an
    empty label column meaning unlabeled.
    """
    if fmt not in ("jsonl", "tsv"):
        raise CorpusError(f"unknown corpus format {fmt!r}")
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if fmt == "jsonl":
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"line {line_no}: malformed JSON ({exc.msg})")
                if not isinstance(raw, dict) or "id" not in raw or "text" not in raw:
                    raise CorpusError(f"line {line_no}: record must contain id and text")
                try:
                    doc = Document(
                        id=str(raw["id"]),
                        text=raw["text"],
                        gold_label=raw.get("gold_label"),
                        positive_human_spans=_parse_spans(
                            raw.get("positive_human_spans"), line_no
                        ),
                        task=raw.get("task", ""),
                    )
                except CorpusError as exc:
                    raise CorpusError(f"line {line_no}: {exc}")
            else:
                parts = line.split("\t")
                if len(parts) != 3:
                    raise CorpusError(f"line {line_no}: expected id<TAB>label<TAB>text")
                doc_id, label, text = parts
                doc = Document(id=doc_id, text=text, gold_label=label or None)
            if doc.id in seen:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
            docs.append(doc)
    return docs


def _by_class(docs):
    classes = {POSITIVE: [], NEGATIVE: []}
    for d in docs:
        if d.gold_label is None:
            raise CorpusError(f"document {d.id!r} has no gold label")
        classes[d.gold_label].append(d.id)
    return classes


def stratified_folds(corpus: list[Document], k: int, seed: int) -> FoldPlan:
    """Split a fully labeled corpus into k folds, stratified by class.

    Within each class, ids are shuffled (seeded) and dealt round-robin, so
    per-class fold sizes differ by at most one and the per-fold positive
    ratio tracks the corpus ratio. Assignment depends on the document id
    set, not on corpus order.
    """
    if k < 2:
        raise CorpusError(f"k must be >= 2, got {k}")
    classes = _by_class(corpus)
    for label, ids in classes.items():
        if len(ids) < k:
            raise CorpusError(f"class {label!r} has {len(ids)} documents, fewer than k={k}")
    rng = np.random.default_rng(seed)
    assignments = {}
    for label in (POSITIVE, NEGATIVE):
        ids = sorted(classes[label])
        order = rng.permutation(len(ids))
        for slot, idx in enumerate(order):
            assignments[ids[idx]] = slot % k
    return FoldPlan(k=k, assignments=types.MappingProxyType(assignments))


def _stratified_counts(n_take: int, n_pos: int, n_neg: int) -> tuple[int, int]:
    """Proportional allocation of n_take over the two classes.

    Guarantees at least one document of each available class whenever
    n_take >= 2, since downstream learners need both classes present.
    """
    total = n_pos + n_neg
    take_pos = round(n_take * n_pos / total)
    if n_pos > 0 and n_take >= 2:
        take_pos = max(take_pos, 1)
    if n_neg > 0 and n_take >= 2:
        take_pos = min(take_pos, n_take - 1)
    take_pos = min(max(take_pos, n_take - n_neg), n_pos)
    return take_pos, n_take - take_pos


def hide_gold(doc: Document) -> Document:
    """Copy of a document with its gold label and spans removed."""
    return replace(doc, gold_label=None, positive_human_spans=())


def sample_labeled(train_split: list[Document], spec: SampleSpec) -> SampleResult:
    """Draw a stratified labeled subset; the remainder becomes unlabeled.

    The unlabeled documents have labels hidden; originals are retained in
    the sealed table for oracle use. Deterministic per (split, spec).
    """
    if spec.n_labeled > len(train_split):
        raise CorpusError(
            f"n_labeled={spec.n_labeled} exceeds split size {len(train_split)}"
        )
    classes = _by_class(train_split)
    take_pos, take_neg = _stratified_counts(
        spec.n_labeled, len(classes[POSITIVE]), len(classes[NEGATIVE])
    )
    rng = np.random.default_rng(spec.seed)
    chosen = set()
    for label, n_take in ((POSITIVE, take_pos), (NEGATIVE, take_neg)):
        ids = sorted(classes[label])
        order = rng.permutation(len(ids))
        chosen.update(ids[i] for i in order[:n_take])
    labeled = [d for d in train_split if d.id in chosen]
    rest = [d for d in train_split if d.id not in chosen]
    sealed = types.MappingProxyType({d.id: d.gold_label for d in rest})
    return SampleResult(
        labeled=labeled,
        unlabeled=[hide_gold(d) for d in rest],
        sealed_gold=sealed,
    )
