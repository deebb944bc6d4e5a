import json
import random
import re

import pytest

from casekit.casegraph import build_graph
from casekit.errors import NoDocsError, NoSuchDocError
from casekit.ingest import derive_sameas
from casekit.textindex import (
    FacetedQuery,
    SearchIndex,
    build_index,
    reindex_doc,
    search,
)
from conftest import random_case

_ORACLE_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


# ---------------------------------------------------------------------------
# independent naive-scan oracle
# ---------------------------------------------------------------------------

def oracle_messages(g, docs):
    """Recompute every message's tokens and facets straight from the graph."""
    out = []
    for chat_node in sorted(g.nodes_of_kind("CHAT"), key=lambda n: n.node_id):
        chat_id = chat_node.props["chat_id"]
        participants = sorted(
            g.nodes[e.src].props["phone"]
            for e in g.in_edges(chat_node.node_id, "PARTICIPATES_IN")
        )
        members = sorted(
            (g.nodes[e.src] for e in g.in_edges(chat_node.node_id, "IN_CHAT")),
            key=lambda n: n.props["msg_id"],
        )
        doc = docs.get(chat_id) if docs else None
        for ordinal, msg in enumerate(members):
            content = g.message_text(msg.node_id) or ""
            is_audio = msg.props["kind"] == "AUDIO" and content != ""
            facets = {
                "participant": set(participants),
                "sender": {msg.props["sender"]},
                "chat": {chat_id},
                "date": {msg.props["timestamp"][:10]},
                "source": {"audio" if is_audio else "text"},
            }
            if msg.props["kind"] != "TEXT":
                facets["attachment"] = {msg.props["kind"]}
            if doc is not None:
                lo, hi = doc.offset_map[ordinal]
                ents = {
                    m.cluster_id
                    for m in doc.mentions
                    if lo <= m.start and m.end <= hi and m.cluster_id
                }
                etypes = {m.mtype for m in doc.mentions if lo <= m.start and m.end <= hi}
                if ents:
                    facets["entity"] = ents
                if etypes:
                    facets["entity_type"] = etypes
            out.append(
                {
                    "chat": chat_id,
                    "ordinal": ordinal,
                    "timestamp": msg.props["timestamp"],
                    "tokens": {t.casefold() for t in _ORACLE_TOKEN.findall(content)},
                    "facets": facets,
                    "audio": is_audio,
                }
            )
    return out


def oracle_search(g, docs, q: FacetedQuery):
    tokens = []
    for kw in q.keywords:
        tokens.extend(t.casefold() for t in _ORACLE_TOKEN.findall(kw))
    hits = []
    for rec in oracle_messages(g, docs):
        if any(t not in rec["tokens"] for t in tokens):
            continue
        ok = True
        for facet, wanted in q.filters.items():
            if not (rec["facets"].get(facet, set()) & set(wanted)):
                ok = False
                break
        if ok:
            hits.append(rec)

    by_chat = {}
    for rec in hits:
        by_chat.setdefault(rec["chat"], []).append(rec)
    ordering = sorted(
        by_chat,
        key=lambda c: (max(r["timestamp"] for r in by_chat[c]), _neg_str(c)),
        reverse=True,
    )
    counts = {
        "chats": len(by_chat),
        "messages": len(hits),
        "transcripts": sum(1 for r in hits if r["audio"]),
    }
    facet_counts = {}
    for rec in hits:
        for facet, values in rec["facets"].items():
            for v in values:
                facet_counts.setdefault(facet, {}).setdefault(v, 0)
                facet_counts[facet][v] += 1
    return {
        "order": ordering,
        "per_chat": {c: sorted(r["ordinal"] for r in rs) for c, rs in by_chat.items()},
        "counts": counts,
        "facets": facet_counts,
    }


def _neg_str(s: str):
    # a key that reverses sort order for strings inside a reverse=True sort
    return [-ord(ch) for ch in s]


def assert_matches_oracle(g, docs, index, q):
    got = search(index, q)
    want = oracle_search(g, docs, q)
    assert [c.chat_id for c in got.chats] == want["order"]
    assert {c.chat_id: c.ordinals for c in got.chats} == want["per_chat"]
    assert got.chat_count == want["counts"]["chats"]
    assert got.message_count == want["counts"]["messages"]
    assert got.transcript_count == want["counts"]["transcripts"]
    if q.want_facet_counts:
        assert got.facet_counts == {
            f: dict(sorted(v.items())) for f, v in sorted(want["facets"].items())
        }


@pytest.fixture()
def indexed_fixture(pipeline_result):
    result, g = pipeline_result
    return g, result.docs, build_index(g, result.docs)


class TestBuildIndex:
    def test_meeting_postings(self, indexed_fixture, manifest):
        _, _, index = indexed_fixture
        postings = index.postings["meeting"]
        assert len(postings) == manifest["keyword_meeting"]["messages"]
        assert sorted({d for d, _, _ in postings}) == manifest["keyword_meeting"]["chats"]

    def test_rebuild_byte_identical(self, indexed_fixture, pipeline_result):
        _, docs, index = indexed_fixture
        result, g = pipeline_result
        again = build_index(g, result.docs)
        assert json.dumps(index.to_json(), sort_keys=True) == json.dumps(
            again.to_json(), sort_keys=True
        )

    def test_without_annotations_entity_facets_empty(self, enriched_graph):
        index = build_index(enriched_graph, None)
        for rec in index.messages.values():
            assert "entity" not in rec.facets
            assert "entity_type" not in rec.facets

    def test_empty_case_rejected(self):
        g = build_graph([], [])
        with pytest.raises(NoDocsError):
            build_index(g, None)

    def test_save_load_round_trip(self, indexed_fixture, tmp_path):
        _, _, index = indexed_fixture
        index.save(tmp_path / "index.json")
        back = SearchIndex.load(tmp_path / "index.json")
        assert json.dumps(back.to_json(), sort_keys=True) == json.dumps(
            index.to_json(), sort_keys=True
        )


class TestSearch:
    def test_audio_only_keyword(self, indexed_fixture, manifest):
        g, docs, index = indexed_fixture
        q = FacetedQuery(keywords=[manifest["audio_only_keyword"]])
        res = search(index, q)
        assert res.chat_count == 1
        assert res.chats[0].chat_id == manifest["audio_only_keyword_chat"]
        assert res.transcript_count == 1
        assert res.message_count == 1

    def test_keyword_plus_filter_subset(self, indexed_fixture):
        g, docs, index = indexed_fixture
        broad = search(index, FacetedQuery(keywords=["meeting"]))
        narrow = search(
            index,
            FacetedQuery(keywords=["meeting"], filters={"sender": {"+393331110001"}}),
        )
        broad_keys = {(c.chat_id, o) for c in broad.chats for o in c.ordinals}
        narrow_keys = {(c.chat_id, o) for c in narrow.chats for o in c.ordinals}
        assert narrow_keys <= broad_keys

    def test_facet_count_equals_filtered_size(self, indexed_fixture):
        g, docs, index = indexed_fixture
        res = search(index, FacetedQuery(keywords=["meeting"], want_facet_counts=True))
        for facet, values in res.facet_counts.items():
            for value, count in values.items():
                narrowed = search(
                    index, FacetedQuery(keywords=["meeting"], filters={facet: {value}})
                )
                assert narrowed.message_count == count, (facet, value)

    def test_entity_facet_narrows(self, indexed_fixture):
        g, docs, index = indexed_fixture
        res = search(index, FacetedQuery(filters={"entity": {"part:+393331110003"}}))
        assert res.message_count == 3  # Steve Brown mentioned in 3 messages

    def test_needs_keyword_or_filter(self, indexed_fixture):
        _, _, index = indexed_fixture
        with pytest.raises(ValueError):
            search(index, FacetedQuery())

    def test_unknown_facet_rejected(self, indexed_fixture):
        _, _, index = indexed_fixture
        with pytest.raises(ValueError):
            search(index, FacetedQuery(filters={"bogus": {"x"}}))

    def test_fixture_queries_match_oracle(self, indexed_fixture):
        g, docs, index = indexed_fixture
        rng = random.Random(42)
        vocab = ["meeting", "warehouse", "ok", "the", "offer", "boston", "zzz", "euros"]
        for _ in range(100):
            q = _random_query(rng, vocab, g)
            assert_matches_oracle(g, docs, index, q)

    def test_random_cases_match_oracle(self):
        rng = random.Random(20240607)
        done = 0
        while done < 100:
            chats = random_case(rng)
            if not any(c.messages for c in chats):
                continue
            g = build_graph(chats, derive_sameas(chats))
            try:
                index = build_index(g, None)
            except NoDocsError:
                continue
            done += 1
            vocab = ["a", "e", "q", "7", "zz"]
            for _ in range(2):
                q = _random_query(rng, vocab, g)
                assert_matches_oracle(g, None, index, q)


def _random_query(rng, vocab, g) -> FacetedQuery:
    q = FacetedQuery(want_facet_counts=rng.random() < 0.5)
    if rng.random() < 0.7:
        q.keywords = rng.sample(vocab, rng.randint(1, 2))
    facet_pool = {
        "sender": [n.props["phone"] for n in g.nodes_of_kind("CONTACT")],
        "chat": [n.props["chat_id"] for n in g.nodes_of_kind("CHAT")],
        "attachment": ["AUDIO", "IMAGE", "DOC", "VIDEO"],
        "source": ["text", "audio"],
    }
    while not q.keywords and not q.filters or rng.random() < 0.4:
        name = rng.choice(sorted(facet_pool))
        values = facet_pool[name]
        if values:
            q.filters[name] = {rng.choice(values)}
        if rng.random() < 0.6:
            break
    if not q.keywords and not q.filters:
        q.keywords = [rng.choice(vocab)]
    return q


class TestAudioTokens:
    def test_indexed_audio_tokens_equal_transcript_union(self, indexed_fixture, fixture_dir):
        _, _, index = indexed_fixture
        indexed = set()
        for rec in index.messages.values():
            if rec.facets["source"] == ["audio"]:
                indexed.update(rec.tokens)
        expected = set()
        for sidecar in (fixture_dir / "media").glob("*.txt"):
            expected.update(
                t.casefold() for t in _ORACLE_TOKEN.findall(sidecar.read_text())
            )
        assert indexed == expected


class TestReindex:
    def test_reindex_unchanged_doc_identity(self, indexed_fixture):
        g, docs, index = indexed_fixture
        before = json.dumps(index.to_json(), sort_keys=True)
        reindex_doc(index, g, "acme-2", docs["acme-2"])
        assert json.dumps(index.to_json(), sort_keys=True) == before

    def test_reindex_equals_full_rebuild(self, pipeline_result):
        import copy

        result, g = pipeline_result
        docs = {k: copy.deepcopy(v) for k, v in result.docs.items()}
        index = build_index(g, docs)
        doc = docs["acme-2"]
        victim = next(m for m in doc.mentions if m.surface == "Tom")
        doc.mentions.remove(victim)
        reindex_doc(index, g, "acme-2", doc)
        rebuilt = build_index(g, docs)
        assert json.dumps(index.to_json(), sort_keys=True) == json.dumps(
            rebuilt.to_json(), sort_keys=True
        )

    def test_delete_mention_decrements_entity_facet(self, pipeline_result):
        import copy

        result, g = pipeline_result
        docs = {k: copy.deepcopy(v) for k, v in result.docs.items()}
        index = build_index(g, docs)
        before = search(
            index, FacetedQuery(filters={"chat": {"acme-2"}}, want_facet_counts=True)
        ).facet_counts["entity"]
        doc = docs["acme-2"]
        victim = next(m for m in doc.mentions if m.cluster_id == "NIL-2")
        doc.mentions.remove(victim)
        reindex_doc(index, g, "acme-2", doc)
        after = search(
            index, FacetedQuery(filters={"chat": {"acme-2"}}, want_facet_counts=True)
        ).facet_counts["entity"]
        assert before["NIL-2"] == 1
        assert "NIL-2" not in after
        assert after["NIL-1"] == before["NIL-1"]

    def test_unknown_doc_rejected(self, indexed_fixture):
        g, _, index = indexed_fixture
        with pytest.raises(NoSuchDocError):
            reindex_doc(index, g, "nope", None)
