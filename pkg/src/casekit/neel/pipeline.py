"""End-to-end entity extraction over every chat of a case.

Per chat: serialize, recognize mentions, rank knowledge-base candidates,
decide LINKED vs NIL, cluster. A failure in one chat is recorded and the run
continues with the rest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..annotations import (
    PROV_MODEL,
    AnnotatedDocument,
    AnnotatedMention,
    merge_model_mentions,
    serialize_chat,
)
from ..casegraph import CHAT, CONTACT, CaseGraph, sameas_closure
from ..entities import (
    LINKABLE_TYPES,
    MENTION_TYPES,
    SOURCE_AUDIO,
    KBEntry,
    LinkDecision,
    Mention,
    mention_id_for,
)
from .clustering import DEFAULT_EDGE_THRESHOLD, cluster_mentions
from .embedding import embed
from .linking import (
    DEFAULT_NIL_THRESHOLD,
    decide_link,
    default_nil_model,
    link_mention,
    mention_text,
    participant_entries,
)
from .logistic import LogisticModel
from .recognize import recognize_mentions
from .similarity import default_pair_model


@dataclass
class TypeStats:
    mentions_text: int = 0
    mentions_audio: int = 0
    linked: int | None = None
    nil: int | None = None
    entities: int | None = None

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class ExtractionStats:
    per_type: dict[str, TypeStats] = field(
        default_factory=lambda: {t: TypeStats() for t in MENTION_TYPES}
    )
    processed_chats: int = 0
    failed_chats: int = 0

    def to_dict(self) -> dict:
        return {
            "processed_chats": self.processed_chats,
            "failed_chats": self.failed_chats,
            "per_type": {t: s.to_dict() for t, s in self.per_type.items()},
        }


@dataclass
class PipelineResult:
    docs: dict[str, AnnotatedDocument] = field(default_factory=dict)
    stats: ExtractionStats = field(default_factory=ExtractionStats)
    failures: list[tuple[str, str]] = field(default_factory=list)


def persons_from_graph(g: CaseGraph) -> list[tuple[str, set[str]]]:
    """One (display name, phones) pair per sameAs equivalence class."""
    persons = []
    unseen = {n.node_id for n in g.nodes_of_kind(CONTACT)}
    while unseen:
        member = min(unseen)
        closure = sameas_closure(g, member)
        unseen -= closure
        names: list[str] = []
        phones: set[str] = set()
        for cid in sorted(closure):
            node = g.nodes[cid]
            phones.add(node.props["phone"])
            names.extend(node.props.get("names", []))
        persons.append((sorted(names)[0] if names else min(phones), phones))
    return sorted(persons, key=lambda p: min(p[1]))


def build_gazetteer(
    kb: list[KBEntry], extra: dict[str, str] | None = None
) -> dict[str, str]:
    """Recognizer name list: participant names + KB titles + extras."""
    gaz: dict[str, str] = {}
    for entry in kb:
        gaz[entry.title] = entry.etype
    if extra:
        gaz.update(extra)
    return gaz


def annotate_document(
    doc: AnnotatedDocument,
    kb: list[KBEntry],
    gazetteer: dict[str, str],
    nil_model: LogisticModel,
    pair_model: LogisticModel,
    tau: float = DEFAULT_EDGE_THRESHOLD,
    theta: float = DEFAULT_NIL_THRESHOLD,
    resolution: float = 1.0,
) -> list[AnnotatedMention]:
    """Run recognition, linking, and clustering over one document.

    Recognition runs per message body (the content span of each line), so
    sender names in the serialized metadata prefix never become mentions.
    """
    mentions: list[Mention] = []
    for ordinal, (lo, hi) in sorted(doc.content_map.items()):
        region = doc.text[lo:hi]
        if not region:
            continue
        for m in recognize_mentions(region, gazetteer, doc_id=doc.doc_id):
            m.start += lo
            m.end += lo
            m.mention_id = mention_id_for(doc.doc_id, m.start, m.end)
            m.source = doc.sources.get(ordinal, m.source)
            mentions.append(m)

    regions = sorted(doc.content_map.values())

    def region_of(m: Mention) -> tuple[int, int] | None:
        for lo, hi in regions:
            if lo <= m.start and m.end <= hi:
                return lo, hi
        return None

    decisions: dict[str, LinkDecision] = {}
    embeddings = {}
    for m in mentions:
        if m.mtype not in LINKABLE_TYPES:
            continue
        emb = embed(mention_text(m, doc.text, bounds=region_of(m)))
        embeddings[m.mention_id] = emb
        candidates = link_mention(m, doc.text, kb, mention_embedding=emb)
        decisions[m.mention_id] = decide_link(m, candidates, nil_model, threshold=theta)

    clusters = cluster_mentions(
        mentions, decisions, embeddings, pair_model, tau=tau, resolution=resolution
    )
    cluster_of = {
        member: cluster.cluster_id for cluster in clusters for member in cluster.member_ids
    }

    annotated = []
    for m in mentions:
        decision = decisions.get(m.mention_id)
        annotated.append(
            AnnotatedMention(
                mention_id=m.mention_id,
                start=m.start,
                end=m.end,
                surface=m.surface,
                mtype=m.mtype,
                source=m.source,
                kb_id=decision.kb_id if decision else None,
                cluster_id=cluster_of.get(m.mention_id),
                provenance=PROV_MODEL,
                nil_probability=decision.nil_probability if decision else None,
            )
        )
    return annotated


def run_pipeline(
    g: CaseGraph,
    kb_external: list[KBEntry],
    nil_model: LogisticModel | None = None,
    pair_model: LogisticModel | None = None,
    extra_gazetteer: dict[str, str] | None = None,
    existing_docs: dict[str, AnnotatedDocument] | None = None,
    tau: float = DEFAULT_EDGE_THRESHOLD,
    theta: float = DEFAULT_NIL_THRESHOLD,
    resolution: float = 1.0,
) -> PipelineResult:
    """Annotate every chat in the graph; per-chat failures never abort."""
    nil_model = nil_model or default_nil_model()
    pair_model = pair_model or default_pair_model()
    kb = list(kb_external) + participant_entries(persons_from_graph(g))
    gazetteer = build_gazetteer(kb, extra_gazetteer)

    result = PipelineResult()
    chat_ids = sorted(n.props["chat_id"] for n in g.nodes_of_kind(CHAT))
    for chat_id in chat_ids:
        try:
            doc = serialize_chat(g, chat_id)
            if existing_docs and chat_id in existing_docs:
                prior = existing_docs[chat_id]
                if prior.text_digest == doc.text_digest:
                    doc = prior
            if doc.text:
                model_mentions = annotate_document(
                    doc,
                    kb,
                    gazetteer,
                    nil_model,
                    pair_model,
                    tau=tau,
                    theta=theta,
                    resolution=resolution,
                )
            else:
                model_mentions = []
            merge_model_mentions(doc, model_mentions)
        except Exception as exc:  # per-chat isolation is the contract
            result.failures.append((chat_id, f"{type(exc).__name__}: {exc}"))
            result.stats.failed_chats += 1
            continue
        result.docs[chat_id] = doc
        result.stats.processed_chats += 1

    _collect_stats(result)
    return result


def _collect_stats(result: PipelineResult) -> None:
    stats = result.stats
    for t in LINKABLE_TYPES:
        ts = stats.per_type[t]
        ts.linked = ts.nil = ts.entities = 0

    kb_entities: dict[str, set[str]] = {t: set() for t in MENTION_TYPES}
    for doc in result.docs.values():
        nil_clusters: dict[str, set[str]] = {t: set() for t in MENTION_TYPES}
        for m in doc.mentions:
            ts = stats.per_type[m.mtype]
            if m.source == SOURCE_AUDIO:
                ts.mentions_audio += 1
            else:
                ts.mentions_text += 1
            if m.mtype in LINKABLE_TYPES:
                if m.kb_id:
                    ts.linked += 1
                    kb_entities[m.mtype].add(m.kb_id)
                else:
                    ts.nil += 1
                    if m.cluster_id:
                        nil_clusters[m.mtype].add(m.cluster_id)
        for t in LINKABLE_TYPES:
            stats.per_type[t].entities += len(nil_clusters[t])
    for t in LINKABLE_TYPES:
        stats.per_type[t].entities += len(kb_entities[t])
