import math
import random

import pytest

from casekit.entities import KBEntry, Mention
from casekit.errors import TypeMismatchError
from casekit.neel.clustering import cluster_mentions
from casekit.neel.embedding import embed
from casekit.neel.linking import (
    decide_link,
    default_nil_model,
    link_mention,
    mention_text,
    nil_predict,
)
from casekit.neel.logistic import LogisticModel
from casekit.neel.recognize import recognize_mentions
from casekit.neel.similarity import default_pair_model


def M(doc, start, end, mtype, doc_id="d1"):
    return Mention(
        mention_id=f"{doc_id}:m-{start}-{end}",
        doc_id=doc_id,
        start=start,
        end=end,
        surface=doc[start:end],
        mtype=mtype,
    )


class TestRecognize:
    GAZ = {"steve brown": "PER", "steve": "PER", "Boston": "LOC"}

    def test_longest_match_wins(self):
        doc = "meet steve brown in Boston"
        got = [(m.surface, m.mtype) for m in recognize_mentions(doc, self.GAZ)]
        assert got == [("steve brown", "PER"), ("Boston", "LOC")]

    def test_money_symbol(self):
        doc = "pay 200 € tomorrow"
        got = recognize_mentions(doc, {})
        assert [(m.surface, m.mtype) for m in got] == [("200 €", "MONEY")]

    def test_money_words_and_dates(self):
        doc = "wire 1500 euros by 12/05/2024 or 2024-06-01 or 3 June 2024"
        got = [(m.surface, m.mtype) for m in recognize_mentions(doc, {})]
        assert ("1500 euros", "MONEY") in got
        assert ("12/05/2024", "DATE") in got
        assert ("2024-06-01", "DATE") in got
        assert ("3 June 2024", "DATE") in got

    def test_empty_gazetteer_no_rules_hit(self):
        assert recognize_mentions("nothing interesting here", {}) == []

    def test_word_boundaries(self):
        got = recognize_mentions("tomorrow or tomcat", {"Tom": "PER"})
        assert got == []

    def test_case_insensitive_surface_preserved(self):
        got = recognize_mentions("BOSTON calling", {"Boston": "LOC"})
        assert got[0].surface == "BOSTON"

    def test_non_overlapping_sorted(self):
        rng = random.Random(12)
        words = ["steve", "brown", "boston", "acme", "corp", "ok", "and"]
        gaz = {"steve brown": "PER", "steve": "PER", "boston": "LOC", "acme corp": "ORG"}
        for _ in range(100):
            doc = " ".join(rng.choice(words) for _ in range(rng.randint(1, 30)))
            ms = recognize_mentions(doc, gaz)
            for a, b in zip(ms, ms[1:]):
                assert a.end <= b.start
            assert all(doc[m.start : m.end] == m.surface for m in ms)

    def test_empty_doc_rejected(self):
        with pytest.raises(ValueError):
            recognize_mentions("", {})

    def test_tie_resolved_by_type_priority(self):
        got = recognize_mentions("visit Georgia now", {"Georgia": "LOC", "georgia": "PER"})
        assert [(m.surface, m.mtype) for m in got] == [("Georgia", "PER")]


KB = [
    KBEntry("loc:boston", "Boston", "city in Massachusetts, United States", "LOC"),
    KBEntry("loc:milan", "Milan", "city in northern Italy", "LOC"),
    KBEntry("org:acme", "Acme Corp", "industrial supplies company", "ORG"),
    KBEntry("part:+391", "Mario Rossi", "phone number: +391", "PER", origin="PARTICIPANT"),
    KBEntry("part:+392", "Lucia Verdi", "phone number: +392", "PER", origin="PARTICIPANT"),
]


class TestLinking:
    def test_per_only_against_participants(self):
        doc = "call Mario Rossi today"
        m = M(doc, 5, 16, "PER")
        cands = link_mention(m, doc, KB)
        assert all(kb_id.startswith("part:") for kb_id, _ in cands)
        assert cands[0][0] == "part:+391"

    def test_loc_only_against_external(self):
        doc = "the office in Boston downtown"
        m = M(doc, 14, 20, "LOC")
        cands = link_mention(m, doc, KB)
        assert {kb_id for kb_id, _ in cands} == {"loc:boston", "loc:milan"}
        assert cands[0][0] == "loc:boston"

    def test_exact_title_ranks_first(self):
        doc = "Acme Corp invoice attached"
        m = M(doc, 0, 9, "ORG")
        cands = link_mention(m, doc, KB)
        assert cands[0][0] == "org:acme"

    def test_empty_partition_forces_nil(self):
        doc = "call Mario Rossi today"
        m = M(doc, 5, 16, "PER")
        cands = link_mention(m, doc, [e for e in KB if e.origin == "EXTERNAL"])
        assert cands == []
        decision = decide_link(m, cands, default_nil_model())
        assert decision.outcome == "NIL"
        assert decision.nil_probability == 0.0

    def test_date_not_linkable(self):
        doc = "due 2024-05-12 sharp"
        m = M(doc, 4, 14, "DATE")
        with pytest.raises(TypeMismatchError):
            link_mention(m, doc, KB)

    def test_candidates_sorted_descending(self):
        doc = "somewhere in Milan maybe"
        m = M(doc, 13, 18, "LOC")
        cands = link_mention(m, doc, KB)
        scores = [s for _, s in cands]
        assert scores == sorted(scores, reverse=True)

    def test_context_clipping(self):
        doc = "AAAA Boston BBBB"
        m = M(doc, 5, 11, "LOC")
        full = mention_text(m, doc)
        clipped = mention_text(m, doc, bounds=(5, 11))
        assert full == "Boston [CTX] AAAA Boston BBBB"
        assert clipped == "Boston [CTX] Boston"


class TestNilPredict:
    def test_zero_model_half(self):
        model = LogisticModel.plain([0.0, 0.0], 0.0, ["top_score", "gap"])
        assert abs(nil_predict(model, 0.7, 0.2) - 0.5) <= 1e-12

    def test_sigmoid_arithmetic(self):
        model = LogisticModel.plain([1.0, 1.0], 0.0, ["top_score", "gap"])
        assert nil_predict(model, 2.0, 2.0) == pytest.approx(
            1 / (1 + math.exp(-4.0)), abs=1e-12
        )

    def test_single_candidate_gap_rule(self):
        model = LogisticModel.plain([0.0, 1.0], 0.0, ["top_score", "gap"])
        # gap defaults to top - (-1)
        assert nil_predict(model, 0.25) == pytest.approx(
            1 / (1 + math.exp(-1.25)), abs=1e-12
        )

    def test_monotone_in_top_score(self):
        model = default_nil_model()
        probs = [nil_predict(model, t / 20, 0.1) for t in range(-20, 21)]
        assert probs == sorted(probs)

    def test_linked_iff_threshold(self):
        doc = "x Boston y"
        m = M(doc, 2, 8, "LOC")
        cands = link_mention(m, doc, KB)
        hot = LogisticModel.plain([0.0, 0.0], 5.0, ["top_score", "gap"])
        cold = LogisticModel.plain([0.0, 0.0], -5.0, ["top_score", "gap"])
        assert decide_link(m, cands, hot).outcome == "LINKED"
        assert decide_link(m, cands, hot).kb_id == cands[0][0]
        assert decide_link(m, cands, cold).outcome == "NIL"


class TestClustering:
    def _mention_set(self, doc, spec):
        """Mentions with per-span context bounds, as if each sat in its own
        message line (which is how the pipeline embeds them)."""
        mentions, decisions, embeddings = [], {}, {}
        from casekit.entities import LinkDecision

        for start, end, mtype, outcome, kb_id in spec:
            m = M(doc, start, end, mtype)
            mentions.append(m)
            decisions[m.mention_id] = LinkDecision(
                mention_id=m.mention_id,
                outcome=outcome,
                kb_id=kb_id,
                nil_probability=0.9 if outcome == "LINKED" else 0.1,
            )
            embeddings[m.mention_id] = embed(mention_text(m, doc, bounds=(start, end)))
        return mentions, decisions, embeddings

    def test_fig3_shape(self):
        doc = "steve brown then steve then Tom then Boston"
        spec = [
            (0, 11, "PER", "NIL", None),
            (17, 22, "PER", "NIL", None),
            (28, 31, "PER", "NIL", None),
            (37, 43, "LOC", "LINKED", "loc:boston"),
        ]
        mentions, decisions, embeddings = self._mention_set(doc, spec)
        clusters = cluster_mentions(mentions, decisions, embeddings, default_pair_model())
        by_id = {c.cluster_id: c for c in clusters}
        assert set(by_id) == {"NIL-1", "NIL-2", "loc:boston"}
        assert by_id["NIL-1"].member_ids == ["d1:m-0-11", "d1:m-17-22"]
        assert by_id["NIL-2"].member_ids == ["d1:m-28-31"]
        assert by_id["NIL-1"].representative == "steve brown"

    def test_all_linked_same_kb_one_cluster(self):
        doc = "Boston and Boston again"
        spec = [
            (0, 6, "LOC", "LINKED", "loc:boston"),
            (11, 17, "LOC", "LINKED", "loc:boston"),
        ]
        mentions, decisions, embeddings = self._mention_set(doc, spec)
        clusters = cluster_mentions(mentions, decisions, embeddings, default_pair_model())
        assert len(clusters) == 1
        assert len(clusters[0].member_ids) == 2

    def test_low_similarity_singletons(self):
        doc = "alpha then omega"
        spec = [(0, 5, "PER", "NIL", None), (11, 16, "PER", "NIL", None)]
        mentions, decisions, embeddings = self._mention_set(doc, spec)
        clusters = cluster_mentions(mentions, decisions, embeddings, default_pair_model())
        nil = [c for c in clusters if c.cluster_id.startswith("NIL-")]
        assert len(nil) == 2

    def test_types_never_mix(self):
        doc = "Acme and Acme the place"
        spec = [(0, 4, "ORG", "NIL", None), (9, 13, "LOC", "NIL", None)]
        mentions, decisions, embeddings = self._mention_set(doc, spec)
        clusters = cluster_mentions(mentions, decisions, embeddings, default_pair_model())
        assert len(clusters) == 2
        assert {c.mtype for c in clusters} == {"ORG", "LOC"}

    def test_unlinkable_types_not_clustered(self):
        doc = "2024-05-12 costs 200 €"
        mentions = [M(doc, 0, 10, "DATE"), M(doc, 17, 22, "MONEY")]
        clusters = cluster_mentions(mentions, {}, {}, default_pair_model())
        assert clusters == []
