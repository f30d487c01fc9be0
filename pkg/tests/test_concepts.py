import logging

import numpy as np
import pytest

from codecomp.concepts import (
    ConceptError,
    KeyConceptSet,
    Mention,
    NEGATIVE,
    POSITIVE,
    Token,
    UNLABELED,
    build_bags,
    extract_human_mentions,
    extract_keyword_mentions,
    load_wordlist,
    mask,
    process_document,
    sentence_spans,
    synthesize_human_mention,
    synthesize_document,
    tokenize,
)
from codecomp.corpus import Document
from codecomp.presets import DRUG_TOK, HUM_TOK, task_preset


class TestTokenize:
    def test_example_tweet(self):
        tokens = tokenize("I Just went to my Oncology appointment")
        assert [t.surface for t in tokens] == [
            "i", "just", "went", "to", "my", "oncology", "appointment"]

    def test_handles_and_punctuation(self):
        tokens = tokenize("@john is sick!!!")
        assert [t.surface for t in tokens] == ["@john", "is", "sick", "!", "!", "!"]

    def test_empty(self):
        assert tokenize("") == []

    def test_char_ranges_map_back(self):
        text = "My friend HAS cancer."
        for tok in tokenize(text):
            assert text[tok.start:tok.end].lower() == tok.surface

    def test_hashtag_split_keeps_tag_word(self):
        assert [t.surface for t in tokenize("#flu season")] == ["#", "flu", "season"]


def test_sentence_spans_on_terminators_and_newlines():
    text = "i am sick!!! call the doctor\nplease come"
    tokens = tokenize(text)
    spans = sentence_spans(tokens, text)
    sentences = [[t.surface for t in tokens[s:e]] for s, e in spans]
    assert sentences == [
        ["i", "am", "sick", "!", "!", "!"],
        ["call", "the", "doctor"],
        ["please", "come"],
    ]


class TestHumanMentions:
    def test_pronoun_rule(self, lexicons):
        tokens = tokenize("i just went to the doctor")
        mentions = extract_human_mentions(tokens, lexicons)
        surfaces = [m.surface for m in mentions]
        assert surfaces[0] == "i"
        assert "doctor" in surfaces  # person dictionary

    def test_it_never_marked(self, lexicons):
        tokens = tokenize("it hurts and its sting and itself")
        assert extract_human_mentions(tokens, lexicons) == []

    def test_at_mention_rule(self, lexicons):
        tokens = tokenize("@nurse_joy call home")
        mentions = extract_human_mentions(tokens, lexicons)
        assert mentions[0].surface == "@nurse_joy"

    def test_dictionary_and_pronoun_trace(self, lexicons):
        # rule-by-rule: "@mary" by the handle rule, "my" by the pronoun
        # lexicon, "friend" by the person dictionary, "and" by nothing
        tokens = tokenize("@mary and my friend")
        mentions = extract_human_mentions(tokens, lexicons)
        assert [(m.surface, m.token_range) for m in mentions] == [
            ("@mary", (0, 1)), ("my", (2, 3)), ("friend", (3, 4))]

    def test_ordered_by_position(self, lexicons):
        tokens = tokenize("doctor saw me and my mom")
        mentions = extract_human_mentions(tokens, lexicons)
        starts = [m.token_range[0] for m in mentions]
        assert starts == sorted(starts)


class TestSynthesizer:
    def _run(self, text, lexicons):
        out, mention = synthesize_human_mention(tokenize(text), lexicons)
        return [t.surface for t in out], mention

    def test_past_tense_prepends_i(self, lexicons):
        out, mention = self._run("went to the er", lexicons)
        assert out == ["i", "went", "to", "the", "er"]
        assert mention.synthetic and mention.token_range == (0, 1)

    def test_adjective_prepends_i_am(self, lexicons):
        out, _ = self._run("sick of this flu", lexicons)
        assert out == ["i", "am", "sick", "of", "this", "flu"]

    def test_past_participle_prepends_i_have(self, lexicons):
        out, _ = self._run("diagnosed with flu", lexicons)
        assert out == ["i", "have", "diagnosed", "with", "flu"]

    def test_present_continuous_prepends_i_am(self, lexicons):
        out, _ = self._run("coughing all night", lexicons)
        assert out == ["i", "am", "coughing", "all", "night"]

    def test_is_replaced_with_i_am(self, lexicons):
        out, _ = self._run("is feeling sick", lexicons)
        assert out == ["i", "am", "feeling", "sick"]

    def test_no_rule_fires(self, lexicons):
        out, mention = self._run("the earthquake hit", lexicons)
        assert out == ["the", "earthquake", "hit"]
        assert mention is None

    def test_one_rule_only_ed_adjectives(self, lexicons):
        # "tired" ends in -ed but reads as an adjective, not "i tired"
        out, _ = self._run("tired of being sick", lexicons)
        assert out[:3] == ["i", "am", "tired"]

    def test_idempotent_on_own_output(self, lexicons):
        first, mention = synthesize_human_mention(
            tokenize("diagnosed with flu"), lexicons)
        assert mention is not None
        second, again = synthesize_human_mention(first, lexicons)
        assert again is None
        assert [t.surface for t in second] == [t.surface for t in first]

    def test_empty_sentence(self, lexicons):
        out, mention = synthesize_human_mention([], lexicons)
        assert out == [] and mention is None

    def test_document_gate_skips_initial_mentions(self, lexicons):
        text = "my friend is sick. hospitalized now"
        tokens, positions = synthesize_document(tokenize(text), text, lexicons)
        surfaces = [t.surface for t in tokens]
        # first sentence opens with "my": untouched; second gets "i have"
        assert surfaces[:3] == ["my", "friend", "is"]
        assert surfaces[surfaces.index("hospitalized") - 2:][:2] == ["i", "have"]
        assert len(positions) == 1


class TestKeywordMentions:
    def test_crisis_keywords(self):
        kcs = KeyConceptSet(name="crisis", kind="keyword",
                            keywords=("earthquake", "quake"))
        mentions = extract_keyword_mentions(tokenize("the quake hit"), kcs)
        assert [(m.surface, m.token_range) for m in mentions] == [("quake", (1, 2))]

    def test_no_keywords_present(self):
        kcs = KeyConceptSet(name="disease", kind="keyword", keywords=("cancer",))
        assert extract_keyword_mentions(tokenize("all is well"), kcs) == []

    def test_multiplicity(self):
        kcs = KeyConceptSet(name="disease", kind="keyword", keywords=("cancer",))
        mentions = extract_keyword_mentions(
            tokenize("cancer sucks , cancer again"), kcs)
        assert [m.token_range for m in mentions] == [(0, 1), (3, 4)]

    def test_multi_token_keyword(self):
        kcs = KeyConceptSet(name="disease", kind="keyword", keywords=("heart attack",))
        mentions = extract_keyword_mentions(
            tokenize("had a heart attack yesterday"), kcs)
        assert [m.token_range for m in mentions] == [(2, 4)]
        assert mentions[0].surface == "heart attack"

    def test_case_insensitive(self):
        kcs = KeyConceptSet(name="disease", kind="keyword", keywords=("Cancer",))
        assert len(extract_keyword_mentions(tokenize("CANCER awareness"), kcs)) == 1

    def test_bruteforce_oracle_on_random_documents(self):
        # independent oracle for single-token keywords: a plain membership scan
        rng = np.random.default_rng(77)
        alphabet = [f"w{i}" for i in range(6)]
        kcs = KeyConceptSet(name="k", kind="keyword", keywords=("w0", "w3"))
        for _ in range(100):
            surfaces = [alphabet[rng.integers(6)] for _ in range(rng.integers(0, 15))]
            tokens = [Token(s, 0, 0) for s in surfaces]
            expected = [i for i, s in enumerate(surfaces) if s in ("w0", "w3")]
            found = [m.token_range[0] for m in extract_keyword_mentions(tokens, kcs)]
            assert found == expected


class TestMask:
    def test_hum_tok(self, lexicons):
        kcs = KeyConceptSet(name="human", kind="human", mask_token=HUM_TOK)
        tokens = tokenize("my friend has cancer")
        mentions = extract_human_mentions(tokens, lexicons, kcs_name="human")
        masked = mask(tokens, mentions, kcs)
        assert [t.surface for t in masked] == [HUM_TOK, HUM_TOK, "has", "cancer"]

    def test_drug_tok(self):
        kcs = KeyConceptSet(name="drug", kind="keyword", keywords=("advil",),
                            mask_token=DRUG_TOK)
        tokens = tokenize("took advil twice")
        mentions = extract_keyword_mentions(tokens, kcs)
        masked = mask(tokens, mentions, kcs)
        assert [t.surface for t in masked] == ["took", DRUG_TOK, "twice"]

    def test_no_mentions_identity(self):
        kcs = KeyConceptSet(name="drug", kind="keyword", keywords=("advil",),
                            mask_token=DRUG_TOK)
        tokens = tokenize("feeling fine today")
        assert mask(tokens, [], kcs) == tokens

    def test_overlap_rejected(self):
        kcs = KeyConceptSet(name="k", kind="keyword", keywords=("a",), mask_token="M")
        tokens = tokenize("a b c")
        mentions = [
            Mention(doc_id="", kcs_name="k", token_range=(0, 2), surface="a b"),
            Mention(doc_id="", kcs_name="k", token_range=(1, 3), surface="b c"),
        ]
        with pytest.raises(ConceptError, match="overlap"):
            mask(tokens, mentions, kcs)

    def test_wrong_view_rejected(self):
        kcs = KeyConceptSet(name="k", kind="keyword", keywords=("a",), mask_token="M")
        foreign = Mention(doc_id="", kcs_name="other", token_range=(0, 1), surface="a")
        with pytest.raises(ConceptError, match="other"):
            mask(tokenize("a b"), [foreign], kcs)

    def test_count_preserved_and_rest_untouched(self):
        rng = np.random.default_rng(8)
        kcs = KeyConceptSet(name="k", kind="keyword", keywords=("x",), mask_token="M")
        for _ in range(50):
            n = int(rng.integers(1, 20))
            surfaces = [("x" if rng.random() < 0.3 else f"t{rng.integers(5)}")
                        for _ in range(n)]
            tokens = [Token(s, i, i + 1) for i, s in enumerate(surfaces)]
            mentions = [
                Mention(doc_id="", kcs_name="k", token_range=(i, i + 1), surface="x")
                for i, s in enumerate(surfaces) if s == "x"
            ]
            masked = mask(tokens, mentions, kcs)
            assert len(masked) == len(tokens)
            starts = {m.token_range[0] for m in mentions}
            for i, tok in enumerate(masked):
                assert tok.surface == ("M" if i in starts else surfaces[i])

    def test_multi_token_collapse(self):
        kcs = KeyConceptSet(name="drug", kind="keyword", keywords=("pepto bismol",),
                            mask_token=DRUG_TOK)
        tokens = tokenize("took pepto bismol today")
        mentions = extract_keyword_mentions(tokens, kcs)
        masked = mask(tokens, mentions, kcs)
        assert [t.surface for t in masked] == ["took", DRUG_TOK, "today"]


class TestBuildBags:
    def test_two_mention_positive_document(self, lexicons, phm_cancer):
        # "me" annotated positive, "friend" negative, "cancer" positive
        text = "cancer hit me and my friend"
        me = text.index("me")
        doc = Document(id="1", text=text, gold_label=POSITIVE,
                       positive_human_spans=((me, me + 2),))
        bags = {b.kcs_name: b for b in build_bags(doc, phm_cancer, lexicons)}
        human = {m.surface: label for m, label in bags["human"].instances}
        assert human["me"] == POSITIVE
        assert human["friend"] == NEGATIVE
        disease = [(m.surface, label) for m, label in bags["disease"].instances]
        assert disease == [("cancer", POSITIVE)]

    def test_negative_document_all_negative(self, lexicons, phm_cancer):
        doc = Document(id="2", text="worried about cancer awareness for my mom",
                       gold_label=NEGATIVE)
        bags = build_bags(doc, phm_cancer, lexicons)
        for bag in bags:
            assert bag.instances
            assert all(label == NEGATIVE for _, label in bag.instances)

    def test_unlabeled_document(self, lexicons, phm_cancer):
        doc = Document(id="3", text="my friend has cancer")
        for bag in build_bags(doc, phm_cancer, lexicons):
            assert all(label == UNLABELED for _, label in bag.instances)

    def test_positive_without_spans_warns(self, lexicons, phm_cancer, caplog):
        doc = Document(id="4", text="i have cancer", gold_label=POSITIVE)
        with caplog.at_level(logging.WARNING, logger="codecomp.concepts"):
            bags = {b.kcs_name: b for b in build_bags(doc, phm_cancer, lexicons)}
        assert "no positive_human_spans" in caplog.text
        assert all(label == UNLABELED for _, label in bags["human"].instances)
        assert all(label == POSITIVE for _, label in bags["disease"].instances)

    def test_synthetic_mentions_label_negative_when_spans_exist(
            self, lexicons, phm_cancer):
        text = "my son has cancer. diagnosed yesterday"
        son = text.index("son")
        doc = Document(id="5", text=text, gold_label=POSITIVE,
                       positive_human_spans=((son, son + 3),))
        bags = {b.kcs_name: b for b in build_bags(doc, phm_cancer, lexicons)}
        by_surface = {(m.surface, m.synthetic): label
                      for m, label in bags["human"].instances}
        assert by_surface[("son", False)] == POSITIVE
        assert by_surface[("i", True)] == NEGATIVE

    def test_policy_rederivation(self, lexicons, phm_cancer):
        # independent recheck of every instance label against the rules
        docs = [
            Document(id="a", text="cancer got my mom. hurts", gold_label=POSITIVE,
                     positive_human_spans=((14, 17),)),
            Document(id="b", text="cancer awareness run with my friend",
                     gold_label=NEGATIVE),
            Document(id="c", text="she fears cancer"),
        ]
        for doc in docs:
            pdoc = process_document(doc, phm_cancer, lexicons)
            for bag, kcs in zip(pdoc.bags, phm_cancer.kcs_list):
                for mention, label in bag.instances:
                    if doc.gold_label is None:
                        expected = UNLABELED
                    elif doc.gold_label == NEGATIVE:
                        expected = NEGATIVE
                    elif kcs.kind == "keyword":
                        expected = POSITIVE
                    elif mention.synthetic:
                        expected = NEGATIVE
                    else:
                        s, e = mention.token_range
                        lo = pdoc.tokens[s].start
                        hi = pdoc.tokens[e - 1].end
                        hit = any(lo < b and a < hi
                                  for a, b in doc.positive_human_spans)
                        expected = POSITIVE if hit else NEGATIVE
                    assert label == expected, (doc.id, mention.surface)


def test_masked_ranges_follow_collapse(lexicons):
    preset = task_preset("adr")
    text = "my friend took pepto bismol and advil"
    doc = Document(id="1", text=text)
    pdoc = process_document(doc, preset, lexicons)
    masked = [t.surface for t in pdoc.masked_tokens]
    assert masked == ["HUM_TOK", "HUM_TOK", "took", DRUG_TOK, "and", DRUG_TOK]
    drug_ranges = pdoc.masked_ranges["drug"]
    assert [masked[s:e] for s, e in drug_ranges] == [[DRUG_TOK], [DRUG_TOK]]


def test_wordlists_are_lowercase_and_unique(lexicons):
    for entries in (lexicons.pronouns, lexicons.person_dictionary,
                    lexicons.irregular_past_verbs, lexicons.common_adjectives,
                    lexicons.past_participles):
        assert entries
        assert all(e == e.lower() for e in entries)


def test_wordlist_rejects_duplicates(tmp_path):
    path = tmp_path / "dup.txt"
    path.write_text("alpha\nbeta\nalpha\n", encoding="utf-8")
    with pytest.raises(ConceptError, match="duplicate"):
        load_wordlist(path)


def test_wordlist_comments_and_blanks(tmp_path):
    path = tmp_path / "list.txt"
    path.write_text("# header\nalpha  # trailing\n\nBeta\n", encoding="utf-8")
    assert load_wordlist(path) == ("alpha", "beta")


def test_kcs_validation():
    with pytest.raises(ConceptError, match="keywords"):
        KeyConceptSet(name="d", kind="keyword")
    with pytest.raises(ConceptError, match="kind"):
        KeyConceptSet(name="d", kind="verb")
