"""In-memory property graph for one investigation case.

Nodes: CONTACT, CHAT, MESSAGE, ATTACHMENT, ENTITY. Edges carry a label and
optional properties; SAME_AS is kept symmetric, MENTIONED_IN carries the
mention span. The graph persists as two JSON-lines files (nodes + edges) and
reloads into an isomorphic structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable

from .errors import DuplicateChatError, NoSuchNodeError, SpanError
from .ingest import ChatDump, MessageKind, SameAsPair, format_timestamp, parse_timestamp

CONTACT = "CONTACT"
CHAT = "CHAT"
MESSAGE = "MESSAGE"
ATTACHMENT = "ATTACHMENT"
ENTITY = "ENTITY"

PARTICIPATES_IN = "PARTICIPATES_IN"
SENT = "SENT"
IN_CHAT = "IN_CHAT"
HAS_ATTACHMENT = "HAS_ATTACHMENT"
SAME_AS = "SAME_AS"
MENTIONED_IN = "MENTIONED_IN"


def contact_id(phone: str) -> str:
    return f"contact:{phone}"


def chat_node_id(chat_id: str) -> str:
    return f"chat:{chat_id}"


def message_node_id(msg_id: str) -> str:
    return f"msg:{msg_id}"


def attachment_node_id(msg_id: str) -> str:
    return f"att:{msg_id}"


def entity_node_id(cluster_id: str, doc_id: str | None = None) -> str:
    """KB-linked entities are global; NIL clusters are scoped to a document."""
    if cluster_id.startswith("NIL-"):
        return f"ent:{doc_id}/{cluster_id}"
    return f"ent:{cluster_id}"


@dataclass
class Node:
    node_id: str
    kind: str
    props: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Edge:
    src: str
    label: str
    dst: str
    props_json: str = "{}"

    @property
    def props(self) -> dict[str, Any]:
        return json.loads(self.props_json)


@dataclass
class GraphQuery:
    """Conjunctive filter over messages; all present clauses must match."""

    participants: set[str] | None = None
    chats: set[str] | None = None
    time_range: tuple[datetime, datetime] | None = None
    keyword: str | None = None
    mentioned_entity: str | None = None

    def validate(self) -> None:
        clauses = [
            self.participants,
            self.chats,
            self.time_range,
            self.keyword,
            self.mentioned_entity,
        ]
        if all(c is None for c in clauses):
            raise ValueError("query needs at least one clause")
        if self.time_range is not None and self.time_range[0] > self.time_range[1]:
            raise ValueError("time_range start must be <= end")

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> "GraphQuery":
        tr = payload.get("time_range")
        return cls(
            participants=set(payload["participants"]) if payload.get("participants") else None,
            chats=set(payload["chats"]) if payload.get("chats") else None,
            time_range=(parse_timestamp(tr[0]), parse_timestamp(tr[1])) if tr else None,
            keyword=payload.get("keyword"),
            mentioned_entity=payload.get("mentioned_entity"),
        )


@dataclass
class CaseStats:
    chats: int = 0
    processed_chats: int = 0
    messages: int = 0
    attachments: int = 0
    attachments_img: int = 0
    attachments_audio: int = 0
    attachments_docs: int = 0
    persons: int = 0

    def to_dict(self) -> dict[str, int]:
        return dict(vars(self))


class CaseGraph:
    """Adjacency-list property graph with deduplicated labeled edges."""

    def __init__(self) -> None:
        self.nodes: dict[str, Node] = {}
        self.edges: list[Edge] = []
        self._edge_set: set[Edge] = set()
        self._out: dict[tuple[str, str], list[Edge]] = {}
        self._in: dict[tuple[str, str], list[Edge]] = {}

    # -- construction -----------------------------------------------------

    def add_node(self, node_id: str, kind: str, props: dict[str, Any] | None = None) -> Node:
        node = self.nodes.get(node_id)
        if node is None:
            node = Node(node_id=node_id, kind=kind, props=props or {})
            self.nodes[node_id] = node
        elif props:
            node.props.update(props)
        return node

    def add_edge(
        self, src: str, label: str, dst: str, props: dict[str, Any] | None = None
    ) -> bool:
        """Insert an edge; returns False if the identical edge already exists."""
        edge = Edge(src, label, dst, json.dumps(props or {}, sort_keys=True))
        if edge in self._edge_set:
            return False
        self._edge_set.add(edge)
        self.edges.append(edge)
        self._out.setdefault((src, label), []).append(edge)
        self._in.setdefault((dst, label), []).append(edge)
        return True

    def remove_edge(self, edge: Edge) -> bool:
        if edge not in self._edge_set:
            return False
        self._edge_set.discard(edge)
        self.edges.remove(edge)
        self._out[(edge.src, edge.label)].remove(edge)
        self._in[(edge.dst, edge.label)].remove(edge)
        return True

    def out_edges(self, src: str, label: str) -> list[Edge]:
        return list(self._out.get((src, label), []))

    def in_edges(self, dst: str, label: str) -> list[Edge]:
        return list(self._in.get((dst, label), []))

    def require(self, node_id: str) -> Node:
        node = self.nodes.get(node_id)
        if node is None:
            raise NoSuchNodeError(f"unknown node {node_id!r}")
        return node

    def nodes_of_kind(self, kind: str) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == kind]

    # -- message helpers ---------------------------------------------------

    def message_chat(self, msg_node: str) -> str:
        return self._out[(msg_node, IN_CHAT)][0].dst

    def message_text(self, msg_node: str) -> str | None:
        """Searchable text of a message: body text, or its audio transcript."""
        node = self.nodes[msg_node]
        if node.props.get("kind") == MessageKind.TEXT.value:
            return node.props.get("text")
        for edge in self._out.get((msg_node, HAS_ATTACHMENT), []):
            att = self.nodes[edge.dst]
            if att.props.get("kind") == MessageKind.AUDIO.value:
                return att.props.get("transcript")
        return None


def build_graph(dumps: list[ChatDump], sameas: list[SameAsPair]) -> CaseGraph:
    """Populate a CaseGraph from parsed dumps and deterministic identity pairs."""
    g = CaseGraph()
    seen_chats: set[str] = set()
    for chat in dumps:
        if chat.chat_id in seen_chats:
            raise DuplicateChatError(f"chat id {chat.chat_id!r} appears twice")
        seen_chats.add(chat.chat_id)

        cnode = g.add_node(
            chat_node_id(chat.chat_id),
            CHAT,
            {
                "chat_id": chat.chat_id,
                "started": format_timestamp(chat.started),
                "last": format_timestamp(chat.last_activity),
            },
        )
        for p in chat.participants:
            _ensure_contact(g, p.phone, p.display_name)
            g.add_edge(contact_id(p.phone), PARTICIPATES_IN, cnode.node_id)

        for m in chat.messages:
            _ensure_contact(g, m.sender.phone, m.sender.display_name)
            props: dict[str, Any] = {
                "msg_id": m.msg_id,
                "timestamp": format_timestamp(m.timestamp),
                "kind": m.kind.value,
                "sender": m.sender.phone,
                "sender_name": m.sender.display_name,
            }
            if m.text is not None:
                props["text"] = m.text
            mnode = g.add_node(message_node_id(m.msg_id), MESSAGE, props)
            g.add_edge(contact_id(m.sender.phone), SENT, mnode.node_id)
            g.add_edge(mnode.node_id, IN_CHAT, cnode.node_id)
            if m.attachment is not None:
                aprops: dict[str, Any] = {
                    "filename": m.attachment.filename,
                    "kind": m.kind.value,
                }
                if m.attachment.duration_s is not None:
                    aprops["duration_s"] = m.attachment.duration_s
                anode = g.add_node(attachment_node_id(m.msg_id), ATTACHMENT, aprops)
                g.add_edge(mnode.node_id, HAS_ATTACHMENT, anode.node_id)

    for pair in sameas:
        a, b = contact_id(pair.phone_a), contact_id(pair.phone_b)
        if a in g.nodes and b in g.nodes:
            g.add_edge(a, SAME_AS, b, {"evidence": pair.evidence})
            g.add_edge(b, SAME_AS, a, {"evidence": pair.evidence})
    return g


def _ensure_contact(g: CaseGraph, phone: str, display_name: str) -> None:
    node = g.add_node(contact_id(phone), CONTACT, {"phone": phone})
    names = node.props.setdefault("names", [])
    if display_name not in names:
        names.append(display_name)
        names.sort()


def sameas_closure(g: CaseGraph, contact: str) -> set[str]:
    """Connected component of a contact under SAME_AS (always contains it)."""
    g.require(contact)
    seen = {contact}
    frontier = [contact]
    while frontier:
        cur = frontier.pop()
        for edge in g.out_edges(cur, SAME_AS):
            if edge.dst not in seen:
                seen.add(edge.dst)
                frontier.append(edge.dst)
    return seen


def query(g: CaseGraph, q: GraphQuery) -> list[str]:
    """Message node ids matching every present clause, sorted by timestamp."""
    q.validate()

    expanded: set[str] | None = None
    if q.participants is not None:
        expanded = set()
        for cid in sorted(q.participants):
            expanded |= sameas_closure(g, cid)
    if q.chats is not None:
        for cid in q.chats:
            node = g.require(cid)
            if node.kind != CHAT:
                raise NoSuchNodeError(f"{cid!r} is not a chat node")
    if q.mentioned_entity is not None:
        g.require(q.mentioned_entity)

    keyword = q.keyword.casefold() if q.keyword is not None else None
    hits: list[tuple[str, str]] = []
    for node in g.nodes_of_kind(MESSAGE):
        if q.chats is not None and g.message_chat(node.node_id) not in q.chats:
            continue
        if expanded is not None:
            sender = contact_id(node.props["sender"])
            chat = g.message_chat(node.node_id)
            members = {e.src for e in g.in_edges(chat, PARTICIPATES_IN)}
            if sender not in expanded and not (members & expanded):
                continue
        if q.time_range is not None:
            ts = parse_timestamp(node.props["timestamp"])
            if not (q.time_range[0] <= ts <= q.time_range[1]):
                continue
        if keyword is not None:
            text = g.message_text(node.node_id)
            if text is None or keyword not in text.casefold():
                continue
        if q.mentioned_entity is not None:
            mentioned = any(
                e.src == q.mentioned_entity
                for e in g.in_edges(node.node_id, MENTIONED_IN)
            )
            if not mentioned:
                continue
        hits.append((node.props["timestamp"], node.node_id))
    return [node_id for _, node_id in sorted(hits)]


def upsert_entity_mentions(
    g: CaseGraph,
    doc_id: str,
    mentions: Iterable[Any],
    offset_map: dict[int, tuple[int, int]],
) -> int:
    """Add ENTITY nodes and MENTIONED_IN edges for resolved mentions.

    Each mention must expose start, end, mtype, surface, cluster_id and an
    optional kb_id. Idempotent: an identical re-run adds zero edges.
    """
    chat = g.require(chat_node_id(doc_id))
    ordinal_spans = sorted(offset_map.items())

    added = 0
    for m in mentions:
        cluster = getattr(m, "cluster_id", None)
        if cluster is None:
            continue
        ordinal = None
        for o, (lo, hi) in ordinal_spans:
            if lo <= m.start and m.end <= hi:
                ordinal = o
                break
        if ordinal is None:
            raise SpanError(
                f"mention [{m.start},{m.end}) falls outside every message of {doc_id}"
            )
        ent_id = entity_node_id(cluster, doc_id)
        props = {"etype": m.mtype, "surface": m.surface, "cluster": cluster}
        kb_id = getattr(m, "kb_id", None)
        if kb_id:
            props["kb_id"] = kb_id
        g.add_node(ent_id, ENTITY, props)
        msg_node = _message_for_ordinal(g, chat.props["chat_id"], ordinal)
        if g.add_edge(
            ent_id,
            MENTIONED_IN,
            msg_node,
            {"start": m.start, "end": m.end, "mention_type": m.mtype},
        ):
            added += 1
    return added


def remove_entity_mentions(
    g: CaseGraph, doc_id: str, spans: Iterable[tuple[int, int]]
) -> int:
    """Drop MENTIONED_IN edges for the given document spans; prune orphans."""
    spans = set(spans)
    chat = chat_node_id(doc_id)
    doc_messages = {e.src for e in g.in_edges(chat, IN_CHAT)}
    removed = 0
    for edge in list(g.edges):
        if edge.label != MENTIONED_IN or edge.dst not in doc_messages:
            continue
        props = edge.props
        if (props.get("start"), props.get("end")) in spans:
            g.remove_edge(edge)
            removed += 1
    for node in list(g.nodes_of_kind(ENTITY)):
        if not g.out_edges(node.node_id, MENTIONED_IN):
            del g.nodes[node.node_id]
    return removed


def stats(g: CaseGraph) -> CaseStats:
    """Counts in the investigation-report layout; persons are sameAs classes."""
    s = CaseStats()
    s.processed_chats = len(g.nodes_of_kind(CHAT))
    s.chats = s.processed_chats
    s.messages = len(g.nodes_of_kind(MESSAGE))
    for att in g.nodes_of_kind(ATTACHMENT):
        s.attachments += 1
        kind = att.props.get("kind")
        if kind == MessageKind.IMAGE.value:
            s.attachments_img += 1
        elif kind == MessageKind.AUDIO.value:
            s.attachments_audio += 1
        elif kind == MessageKind.DOC.value:
            s.attachments_docs += 1

    unseen = {n.node_id for n in g.nodes_of_kind(CONTACT)}
    while unseen:
        member = min(unseen)
        unseen -= sameas_closure(g, member)
        s.persons += 1
    return s


def export_graph(g: CaseGraph, nodes_path: Path, edges_path: Path) -> None:
    """Write the graph to deterministic JSON-lines files."""
    with open(nodes_path, "w", encoding="utf-8") as fh:
        for node_id in sorted(g.nodes):
            node = g.nodes[node_id]
            fh.write(
                json.dumps(
                    {"id": node.node_id, "kind": node.kind, "props": node.props},
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )
    with open(edges_path, "w", encoding="utf-8") as fh:
        for edge in sorted(g.edges, key=lambda e: (e.src, e.label, e.dst, e.props_json)):
            fh.write(
                json.dumps(
                    {
                        "src": edge.src,
                        "label": edge.label,
                        "dst": edge.dst,
                        "props": edge.props,
                    },
                    sort_keys=True,
                    ensure_ascii=False,
                )
                + "\n"
            )


def import_graph(nodes_path: Path, edges_path: Path) -> CaseGraph:
    g = CaseGraph()
    with open(nodes_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            g.add_node(rec["id"], rec["kind"], rec["props"])
    with open(edges_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            g.add_edge(rec["src"], rec["label"], rec["dst"], rec["props"])
    return g


def _message_for_ordinal(g: CaseGraph, chat_id: str, ordinal: int) -> str:
    from .ingest import MSG_ORDINAL_WIDTH

    return message_node_id(f"{chat_id}-{ordinal:0{MSG_ORDINAL_WIDTH}d}")
