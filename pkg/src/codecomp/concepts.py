"""Mention-level view construction for concept-decomposed classification.

A task decomposes into named concept views (human mentions, disease keywords,
drug names, ...). This module finds the mention occurrences of each view in a
document, inserts elided first-person mentions with sentence-start rewrite
rules, rewrites mentions to mask tokens, and packages everything into
per-view bags with automatically derived instance labels.

The human-mention detector is intentionally shallow: pronoun and person-word
lexicons plus @-handles. It is noisy by design and meant to be replaced by a
stronger tagger without touching anything downstream.
"""

from __future__ import annotations

import logging
import os
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple

from .corpus import Document, NEGATIVE, POSITIVE

logger = logging.getLogger(__name__)

UNLABELED = "unlabeled"

DATA_DIR = Path(__file__).parent / "data"
LEXICON_DIR_ENV = "CODECOMP_LEXICON_DIR"

# @handles stay whole; words split from punctuation; punctuation one char each
_TOKEN_RE = re.compile(r"@\w+|\w+|[^\w\s]", re.UNICODE)

_SENTENCE_END = frozenset({".", "!", "?"})

# common sentence-initial -ing words that are not progressive verbs
_NON_VERB_ING = frozenset({
    "anything", "everything", "nothing", "something", "thing",
    "morning", "evening", "spring", "string", "bring", "during",
})


class ConceptError(ValueError):
    pass


class Token(NamedTuple):
    surface: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    """Lowercased tokens with character ranges back into the original text."""
    return [
        Token(m.group().lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)
    ]


def sentence_spans(tokens: list[Token], text: str) -> list[tuple[int, int]]:
    """[start, end) token index ranges of sentences.

    A sentence ends after a run of '.', '!' or '?' tokens, or where the
    original text has a newline between consecutive tokens.
    """
    spans = []
    start = 0
    i = 0
    n = len(tokens)
    while i < n:
        if tokens[i].surface in _SENTENCE_END:
            while i + 1 < n and tokens[i + 1].surface in _SENTENCE_END:
                i += 1
            spans.append((start, i + 1))
            start = i + 1
        elif i + 1 < n and "\n" in text[tokens[i].end : tokens[i + 1].start]:
            spans.append((start, i + 1))
            start = i + 1
        i += 1
    if start < n:
        spans.append((start, n))
    return spans


# ---------------------------------------------------------------------------
# Lexicons
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Lexicons:
    pronouns: frozenset
    person_dictionary: frozenset
    irregular_past_verbs: frozenset
    common_adjectives: frozenset
    past_participles: frozenset


def load_wordlist(path) -> tuple[str, ...]:
    """One entry per line, UTF-8, '#' comments; entries lowercased, unique."""
    entries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            entry = line.split("#", 1)[0].strip().lower()
            if not entry:
                continue
            if entry in seen:
                raise ConceptError(f"{path}: duplicate entry {entry!r} at line {line_no}")
            seen.add(entry)
            entries.append(entry)
    return tuple(entries)


def lexicon_dir(directory=None) -> Path:
    if directory is not None:
        return Path(directory)
    env = os.environ.get(LEXICON_DIR_ENV)
    return Path(env) if env else DATA_DIR


def load_lexicons(directory=None) -> Lexicons:
    base = lexicon_dir(directory)
    return Lexicons(
        pronouns=frozenset(load_wordlist(base / "pronouns.txt")),
        person_dictionary=frozenset(load_wordlist(base / "person_dictionary.txt")),
        irregular_past_verbs=frozenset(load_wordlist(base / "irregular_past_verbs.txt")),
        common_adjectives=frozenset(load_wordlist(base / "adjectives.txt")),
        past_participles=frozenset(load_wordlist(base / "past_participles.txt")),
    )


# ---------------------------------------------------------------------------
# Concept views
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KeyConceptSet:
    """One concept view: the human-mention view or a keyword list."""

    name: str
    kind: str  # "human" | "keyword"
    keywords: tuple[str, ...] = ()
    mask_token: str | None = None

    def __post_init__(self):
        if self.kind not in ("human", "keyword"):
            raise ConceptError(f"kcs {self.name!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "keywords", tuple(k.lower() for k in self.keywords))
        if self.kind == "keyword" and not self.keywords:
            raise ConceptError(f"kcs {self.name!r}: keyword view needs keywords")
        if self.kind == "human" and self.keywords:
            raise ConceptError(f"kcs {self.name!r}: human view takes no keywords")


@dataclass(frozen=True)
class Mention:
    doc_id: str
    kcs_name: str
    token_range: tuple[int, int]  # [start, end) token indices
    surface: str
    synthetic: bool = False


@dataclass(frozen=True)
class Bag:
    """All mention occurrences of one concept view within one document."""

    doc_id: str
    kcs_name: str
    instances: tuple[tuple[Mention, str], ...]  # (mention, label)

    def labels(self) -> list[str]:
        return [label for _, label in self.instances]


def _is_human_word(surface: str, lexicons: Lexicons) -> bool:
    return (
        surface in lexicons.pronouns
        or surface.startswith("@")
        or surface in lexicons.person_dictionary
    )


def extract_human_mentions(tokens, lexicons: Lexicons, doc_id: str = "",
                           kcs_name: str = "human") -> list[Mention]:
    """Single-token human mentions: lexicon pronouns, @-handles, person words.

    "it" never matches -- it is deliberately absent from the pronoun lexicon.
    """
    return [
        Mention(doc_id=doc_id, kcs_name=kcs_name, token_range=(i, i + 1),
                surface=tok.surface)
        for i, tok in enumerate(tokens)
        if _is_human_word(tok.surface, lexicons)
    ]


def _is_past_tense(word: str, lexicons: Lexicons) -> bool:
    if word in lexicons.irregular_past_verbs:
        return True
    return word.endswith("ed") and len(word) >= 4 and word not in lexicons.past_participles


def _is_present_continuous(word: str) -> bool:
    return word.endswith("ing") and len(word) >= 5 and word not in _NON_VERB_ING


def synthesize_human_mention(sentence_tokens, lexicons: Lexicons):
    """Insert an elided first-person mention at the start of a sentence.

    Exactly one of five rewrites may fire, checked in order against the
    first token: past-tense verb -> prepend "i"; adjective -> prepend
    "i am"; past participle -> prepend "i have"; -ing verb -> prepend
    "i am"; literal "is" -> replace with "i am". Returns the (possibly
    modified) token list and the synthetic mention covering the inserted
    "i", or None when no rule fires. Idempotent: "i" matches no rule.
    """
    if not sentence_tokens:
        return list(sentence_tokens), None
    first = sentence_tokens[0].surface
    at = sentence_tokens[0].start
    inserted = None
    rest = list(sentence_tokens)
    if _is_past_tense(first, lexicons):
        inserted = ["i"]
    elif first in lexicons.common_adjectives:
        inserted = ["i", "am"]
    elif first in lexicons.past_participles:
        inserted = ["i", "have"]
    elif _is_present_continuous(first):
        inserted = ["i", "am"]
    elif first == "is":
        inserted = ["i", "am"]
        rest = rest[1:]
    if inserted is None:
        return rest, None
    synthetic = [Token(s, at, at) for s in inserted]  # zero-width: no source text
    mention = Mention(doc_id="", kcs_name="human", token_range=(0, 1),
                      surface="i", synthetic=True)
    return synthetic + rest, mention


def synthesize_document(tokens, text: str, lexicons: Lexicons):
    """Run the synthesizer over every sentence of a document.

    Sentences that already open with a human mention are left alone.
    Returns the new token list and the document-level token positions of
    inserted mentions.
    """
    out = []
    synth_positions = []
    for start, end in sentence_spans(tokens, text):
        sentence = tokens[start:end]
        if sentence and _is_human_word(sentence[0].surface, lexicons):
            out.extend(sentence)
            continue
        modified, mention = synthesize_human_mention(sentence, lexicons)
        if mention is not None:
            synth_positions.append(len(out))
        out.extend(modified)
    return out, synth_positions


def _keyword_sequences(kcs: KeyConceptSet) -> list[tuple[str, ...]]:
    seqs = {tuple(t.surface for t in tokenize(kw)) for kw in kcs.keywords}
    seqs.discard(())
    # longest first so multi-word names win over their own sub-words
    return sorted(seqs, key=lambda s: (-len(s), s))


def extract_keyword_mentions(tokens, kcs: KeyConceptSet, doc_id: str = "") -> list[Mention]:
    """Case-insensitive exact-token keyword occurrences, in document order.

    Multi-token keywords match contiguous token runs; overlapping matches
    are resolved greedily left-to-right, longest keyword first.
    """
    if kcs.kind != "keyword":
        raise ConceptError(f"kcs {kcs.name!r} is not a keyword view")
    sequences = _keyword_sequences(kcs)
    surfaces = [t.surface for t in tokens]
    mentions = []
    i = 0
    while i < len(surfaces):
        matched = None
        for seq in sequences:
            if tuple(surfaces[i : i + len(seq)]) == seq:
                matched = seq
                break
        if matched is None:
            i += 1
            continue
        mentions.append(
            Mention(doc_id=doc_id, kcs_name=kcs.name, token_range=(i, i + len(matched)),
                    surface=" ".join(matched))
        )
        i += len(matched)
    return mentions


def _masked_tokens_with_map(tokens, replacements):
    """Apply (token_range, mask_surface) replacements; also return the map
    from old token index to new token index.

    Each replaced range collapses to a single mask token; ranges must not
    overlap.
    """
    replacements = sorted(replacements, key=lambda r: r[0])
    for ((_, e1), _), ((s2, _), _) in zip(replacements, replacements[1:]):
        if s2 < e1:
            raise ConceptError("overlapping mentions cannot be masked")
    out = []
    index_map = [0] * len(tokens)
    cursor = 0
    for (s, e), surface in replacements:
        if not (0 <= s < e <= len(tokens)):
            raise ConceptError(f"mention range [{s}, {e}) outside token list")
        for i in range(cursor, s):
            index_map[i] = len(out)
            out.append(tokens[i])
        mask_tok = Token(surface, tokens[s].start, tokens[e - 1].end)
        for i in range(s, e):
            index_map[i] = len(out)
        out.append(mask_tok)
        cursor = e
    for i in range(cursor, len(tokens)):
        index_map[i] = len(out)
        out.append(tokens[i])
    return out, index_map


def mask(tokens, mentions, kcs: KeyConceptSet) -> list[Token]:
    """Replace every mention's token range with the view's mask token."""
    if not kcs.mask_token:
        raise ConceptError(f"kcs {kcs.name!r} has no mask token")
    for m in mentions:
        if m.kcs_name != kcs.name:
            raise ConceptError(
                f"mention of {m.kcs_name!r} passed to mask for {kcs.name!r}"
            )
    masked, _ = _masked_tokens_with_map(
        tokens, [(m.token_range, kcs.mask_token) for m in mentions]
    )
    return masked


# ---------------------------------------------------------------------------
# Task presets and bag construction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaskPreset:
    name: str
    kcs_list: tuple[KeyConceptSet, ...]

    def __post_init__(self):
        names = [k.name for k in self.kcs_list]
        if len(set(names)) != len(names):
            raise ConceptError(f"preset {self.name!r}: duplicate view names")

    @property
    def has_human_view(self) -> bool:
        return any(k.kind == "human" for k in self.kcs_list)


@dataclass(frozen=True)
class ProcessedDocument:
    """A document with its final tokens, per-view bags, and the fully
    masked token list fed to context providers.

    ``masked_ranges[kcs_name][i]`` is instance i's token range within
    ``masked_tokens`` (masking can collapse multi-token mentions, shifting
    positions).
    """

    document: Document
    tokens: tuple[Token, ...]
    bags: tuple[Bag, ...]
    masked_tokens: tuple[Token, ...]
    masked_ranges: dict

    def bag(self, kcs_name: str) -> Bag:
        for b in self.bags:
            if b.kcs_name == kcs_name:
                return b
        raise KeyError(kcs_name)


def _span_overlap(tokens, token_range, spans) -> bool:
    s, e = token_range
    char_start, char_end = tokens[s].start, tokens[e - 1].end
    return any(char_start < b and a < char_end for a, b in spans)


def instance_labels(kcs: KeyConceptSet, mentions, tokens, gold_label,
                    positive_spans, doc_id: str = "") -> list[str]:
    """Automatic instance labels from the document label.

    Negative documents mark every instance negative. In positive documents
    keyword instances are positive, and human instances are positive only
    where the annotated spans cover them. A positive document without span
    annotation leaves its human instances unlabeled (with a warning), since
    the affected mention is unknown.
    """
    if gold_label is None:
        return [UNLABELED] * len(mentions)
    if gold_label == NEGATIVE:
        return [NEGATIVE] * len(mentions)
    if kcs.kind == "keyword":
        return [POSITIVE] * len(mentions)
    if not positive_spans:
        if mentions:
            logger.warning(
                "positive document %r has no positive_human_spans; "
                "leaving %d human instances unlabeled", doc_id, len(mentions),
            )
        return [UNLABELED] * len(mentions)
    return [
        NEGATIVE if m.synthetic or not _span_overlap(tokens, m.token_range, positive_spans)
        else POSITIVE
        for m in mentions
    ]


def process_document(doc: Document, preset: TaskPreset, lexicons: Lexicons) -> ProcessedDocument:
    """Tokenize, synthesize, extract, label, and mask one document."""
    tokens = tokenize(doc.text)
    if preset.has_human_view:
        tokens, synth_positions = synthesize_document(tokens, doc.text, lexicons)
        synth_positions = set(synth_positions)
    else:
        synth_positions = set()

    view_mentions = {}
    for kcs in preset.kcs_list:
        if kcs.kind == "human":
            found = extract_human_mentions(tokens, lexicons, doc_id=doc.id,
                                           kcs_name=kcs.name)
            found = [
                replace(m, synthetic=True) if m.token_range[0] in synth_positions else m
                for m in found
            ]
        else:
            found = extract_keyword_mentions(tokens, kcs, doc_id=doc.id)
        view_mentions[kcs.name] = found

    bags = []
    for kcs in preset.kcs_list:
        mentions = view_mentions[kcs.name]
        labels = instance_labels(kcs, mentions, tokens, doc.gold_label,
                                 doc.positive_human_spans, doc_id=doc.id)
        bags.append(Bag(doc_id=doc.id, kcs_name=kcs.name,
                        instances=tuple(zip(mentions, labels))))

    replacements = [
        (m.token_range, kcs.mask_token)
        for kcs in preset.kcs_list if kcs.mask_token
        for m in view_mentions[kcs.name]
    ]
    masked_tokens, index_map = _masked_tokens_with_map(tokens, replacements)
    masked_ranges = {
        kcs.name: [
            (index_map[m.token_range[0]], index_map[m.token_range[1] - 1] + 1)
            for m in view_mentions[kcs.name]
        ]
        for kcs in preset.kcs_list
    }
    return ProcessedDocument(
        document=doc,
        tokens=tuple(tokens),
        bags=tuple(bags),
        masked_tokens=tuple(masked_tokens),
        masked_ranges=masked_ranges,
    )


def build_bags(doc: Document, preset: TaskPreset, lexicons: Lexicons) -> list[Bag]:
    """One labeled Bag per concept view of the task preset."""
    return list(process_document(doc, preset, lexicons).bags)
