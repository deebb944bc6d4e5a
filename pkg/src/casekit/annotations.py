"""Serialized chat documents, standoff annotations, and human edits.

A chat serializes to one text line per message; annotations live beside the
text as character-offset records keyed by the text's SHA-256 digest, so a
stale editor can never corrupt a document that moved under it. All edit
operations are atomic: on any validation error the document is unchanged.
"""

from __future__ import annotations

import hashlib
import json
import re
from copy import deepcopy
from dataclasses import dataclass, field, replace
from pathlib import Path

from .casegraph import (
    HAS_ATTACHMENT,
    IN_CHAT,
    CaseGraph,
    chat_node_id,
)
from .errors import (
    NoSuchMentionError,
    OverlapError,
    SpanError,
    StaleDocumentError,
)
from .ingest import MessageKind
from .entities import (
    MENTION_TYPES,
    SOURCE_AUDIO,
    SOURCE_TEXT,
    mention_id_for,
)

PROV_MODEL = "MODEL"
PROV_HUMAN = "HUMAN"

_NIL_ID_RE = re.compile(r"^NIL-(\d+)$")


@dataclass
class AnnotatedMention:
    mention_id: str
    start: int
    end: int
    surface: str
    mtype: str
    source: str = SOURCE_TEXT
    kb_id: str | None = None
    cluster_id: str | None = None
    provenance: str = PROV_MODEL
    nil_probability: float | None = None

    def to_json(self) -> dict:
        return {
            "id": self.mention_id,
            "start": self.start,
            "end": self.end,
            "type": self.mtype,
            "link": {"kb_id": self.kb_id},
            "cluster": self.cluster_id,
            "provenance": self.provenance,
        }


@dataclass
class AnnotatedDocument:
    doc_id: str
    text: str
    text_digest: str
    offset_map: dict[int, tuple[int, int]]
    # span of the message body inside each line, after the "[ts] name: " prefix;
    # extraction runs here so metadata names never count as content mentions
    content_map: dict[int, tuple[int, int]]
    sources: dict[int, str]
    mentions: list[AnnotatedMention] = field(default_factory=list)

    def mention(self, mention_id: str) -> AnnotatedMention:
        for m in self.mentions:
            if m.mention_id == mention_id:
                return m
        raise NoSuchMentionError(f"no mention {mention_id!r} in {self.doc_id}")

    def ordinal_for_span(self, start: int, end: int) -> int:
        for ordinal, (lo, hi) in sorted(self.offset_map.items()):
            if lo <= start and end <= hi:
                return ordinal
        raise SpanError(f"span [{start},{end}) is outside every message of {self.doc_id}")

    def nil_ids(self) -> list[int]:
        out = []
        for m in self.mentions:
            if m.cluster_id:
                match = _NIL_ID_RE.match(m.cluster_id)
                if match:
                    out.append(int(match.group(1)))
        return out


@dataclass
class EditOp:
    kind: str
    start: int | None = None
    end: int | None = None
    mtype: str | None = None
    mention_id: str | None = None
    kb_id: str | None = None
    cluster_a: str | None = None
    cluster_b: str | None = None
    cluster_id: str | None = None
    member_ids: list[str] | None = None

    KINDS = (
        "ADD_MENTION",
        "DELETE_MENTION",
        "RETYPE",
        "RELINK",
        "MERGE_CLUSTERS",
        "SPLIT_CLUSTER",
    )

    @classmethod
    def from_dict(cls, payload: dict) -> "EditOp":
        kind = payload.get("kind")
        if kind not in cls.KINDS:
            raise ValueError(f"unknown edit kind {kind!r}")
        fields = {
            k: payload.get(k)
            for k in (
                "start",
                "end",
                "mtype",
                "mention_id",
                "kb_id",
                "cluster_a",
                "cluster_b",
                "cluster_id",
                "member_ids",
            )
        }
        return cls(kind=kind, **fields)


@dataclass
class Changeset:
    """Graph/index sync instructions: drop `removed` spans, upsert `added`."""

    doc_id: str
    added: list[AnnotatedMention] = field(default_factory=list)
    removed: list[AnnotatedMention] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "added": [m.to_json() for m in self.added],
            "removed": [m.to_json() for m in self.removed],
        }


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def serialize_chat(g: CaseGraph, chat_id: str) -> AnnotatedDocument:
    """Render a chat to text, one line per message, audio transcripts inline."""
    chat_node = g.require(chat_node_id(chat_id))
    messages = sorted(
        (g.nodes[e.src] for e in g.in_edges(chat_node.node_id, IN_CHAT)),
        key=lambda n: n.props["msg_id"],
    )

    lines: list[str] = []
    offset_map: dict[int, tuple[int, int]] = {}
    content_map: dict[int, tuple[int, int]] = {}
    sources: dict[int, str] = {}
    pos = 0
    for ordinal, msg in enumerate(messages):
        name = msg.props.get("sender_name", msg.props["sender"])
        kind = msg.props["kind"]
        source = SOURCE_TEXT
        if kind == MessageKind.TEXT.value:
            content = msg.props.get("text", "")
        else:
            att = g.nodes[g.out_edges(msg.node_id, HAS_ATTACHMENT)[0].dst]
            if kind == MessageKind.AUDIO.value and "transcript" in att.props:
                content = att.props["transcript"]
                source = SOURCE_AUDIO
            else:
                content = f"[{kind}: {att.props['filename']}]"
        prefix = f"[{msg.props['timestamp']}] {name}: "
        line = prefix + content
        lines.append(line)
        offset_map[ordinal] = (pos, pos + len(line))
        content_map[ordinal] = (pos + len(prefix), pos + len(line))
        sources[ordinal] = source
        pos += len(line) + 1  # joining newline

    text = "\n".join(lines)
    return AnnotatedDocument(
        doc_id=chat_id,
        text=text,
        text_digest=text_digest(text),
        offset_map=offset_map,
        content_map=content_map,
        sources=sources,
    )


def _check_invariants(doc: AnnotatedDocument, mentions: list[AnnotatedMention]) -> None:
    ordered = sorted(mentions, key=lambda m: m.start)
    for i, m in enumerate(ordered):
        if not (0 <= m.start < m.end <= len(doc.text)):
            raise SpanError(f"bad span [{m.start},{m.end})")
        if doc.text[m.start : m.end] != m.surface:
            raise SpanError(f"surface mismatch at [{m.start},{m.end})")
        if i and ordered[i - 1].end > m.start:
            raise OverlapError(
                f"mentions {ordered[i - 1].mention_id} and {m.mention_id} overlap"
            )


def _fresh_nil_id(mentions: list[AnnotatedMention]) -> str:
    used = [
        int(m.group(1))
        for m in (_NIL_ID_RE.match(x.cluster_id or "") for x in mentions)
        if m
    ]
    return f"NIL-{max(used, default=0) + 1}"


def apply_edit(
    doc: AnnotatedDocument,
    op: EditOp,
    digest: str,
    known_kb_ids: set[str] | None = None,
) -> Changeset:
    """Apply one edit; rejects stale digests; atomic on failure."""
    if digest != doc.text_digest:
        raise StaleDocumentError(
            f"digest mismatch for {doc.doc_id}: document changed since it was read"
        )

    working = deepcopy(doc.mentions)
    change = Changeset(doc_id=doc.doc_id)

    def find(mention_id: str | None) -> AnnotatedMention:
        if mention_id is None:
            raise ValueError(f"{op.kind} requires mention_id")
        for m in working:
            if m.mention_id == mention_id:
                return m
        raise NoSuchMentionError(f"no mention {mention_id!r} in {doc.doc_id}")

    def check_kb(kb_id: str) -> None:
        if known_kb_ids is not None and kb_id not in known_kb_ids:
            raise ValueError(f"kb id {kb_id!r} not in knowledge base")

    if op.kind == "ADD_MENTION":
        if op.start is None or op.end is None or op.mtype is None:
            raise ValueError("ADD_MENTION requires start, end, mtype")
        if op.mtype not in MENTION_TYPES:
            raise ValueError(f"unknown mention type {op.mtype!r}")
        for m in working:
            if m.start < op.end and op.start < m.end:
                raise OverlapError(f"span overlaps mention {m.mention_id}")
        ordinal = doc.ordinal_for_span(op.start, op.end)
        if op.kb_id is not None:
            check_kb(op.kb_id)
        new = AnnotatedMention(
            mention_id=mention_id_for(doc.doc_id, op.start, op.end),
            start=op.start,
            end=op.end,
            surface=doc.text[op.start : op.end],
            mtype=op.mtype,
            source=doc.sources.get(ordinal, SOURCE_TEXT),
            kb_id=op.kb_id,
            cluster_id=op.kb_id if op.kb_id else _fresh_nil_id(working),
            provenance=PROV_HUMAN,
        )
        working.append(new)
        change.added.append(new)

    elif op.kind == "DELETE_MENTION":
        target = find(op.mention_id)
        working.remove(target)
        change.removed.append(target)

    elif op.kind == "RETYPE":
        target = find(op.mention_id)
        if op.mtype not in MENTION_TYPES:
            raise ValueError(f"unknown mention type {op.mtype!r}")
        change.removed.append(replace(target))
        target.mtype = op.mtype
        target.kb_id = None
        target.cluster_id = _fresh_nil_id([m for m in working if m is not target])
        target.provenance = PROV_HUMAN
        change.added.append(target)

    elif op.kind == "RELINK":
        target = find(op.mention_id)
        change.removed.append(replace(target))
        if op.kb_id is None:
            target.kb_id = None
            target.cluster_id = _fresh_nil_id([m for m in working if m is not target])
        else:
            check_kb(op.kb_id)
            target.kb_id = op.kb_id
            target.cluster_id = op.kb_id
        target.provenance = PROV_HUMAN
        change.added.append(target)

    elif op.kind == "MERGE_CLUSTERS":
        if not op.cluster_a or not op.cluster_b:
            raise ValueError("MERGE_CLUSTERS requires cluster_a and cluster_b")
        ma, mb = _NIL_ID_RE.match(op.cluster_a), _NIL_ID_RE.match(op.cluster_b)
        if not ma or not mb:
            raise ValueError("only NIL clusters can be merged")
        winner = op.cluster_a if int(ma.group(1)) <= int(mb.group(1)) else op.cluster_b
        members = [m for m in working if m.cluster_id in (op.cluster_a, op.cluster_b)]
        if not members:
            raise NoSuchMentionError(f"no mentions in {op.cluster_a} or {op.cluster_b}")
        for m in members:
            change.removed.append(replace(m))
            m.cluster_id = winner
            m.provenance = PROV_HUMAN
            change.added.append(m)

    elif op.kind == "SPLIT_CLUSTER":
        if not op.cluster_id or not op.member_ids:
            raise ValueError("SPLIT_CLUSTER requires cluster_id and member_ids")
        targets = [find(mid) for mid in op.member_ids]
        for t in targets:
            if t.cluster_id != op.cluster_id:
                raise ValueError(f"{t.mention_id} is not in cluster {op.cluster_id}")
        fresh = _fresh_nil_id(working)
        for t in targets:
            change.removed.append(replace(t))
            t.cluster_id = fresh
            t.kb_id = None
            t.provenance = PROV_HUMAN
            change.added.append(t)

    else:
        raise ValueError(f"unknown edit kind {op.kind!r}")

    _check_invariants(doc, working)
    doc.mentions = sorted(working, key=lambda m: m.start)
    return change


def merge_model_mentions(
    doc: AnnotatedDocument, model_mentions: list[AnnotatedMention]
) -> None:
    """Replace MODEL mentions with fresh pipeline output; HUMAN mentions win."""
    human = [m for m in doc.mentions if m.provenance == PROV_HUMAN]
    kept = [
        m
        for m in model_mentions
        if not any(h.start < m.end and m.start < h.end for h in human)
    ]
    doc.mentions = sorted(human + kept, key=lambda m: m.start)
    _check_invariants(doc, doc.mentions)


def write_annotation_file(doc: AnnotatedDocument, path: Path) -> None:
    payload = {
        "doc_id": doc.doc_id,
        "text_sha256": doc.text_digest,
        "mentions": [m.to_json() for m in sorted(doc.mentions, key=lambda m: m.start)],
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def read_annotation_file(doc: AnnotatedDocument, path: Path) -> None:
    """Attach mentions from an .ann.json file to a freshly serialized document."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload["text_sha256"] != doc.text_digest:
        raise StaleDocumentError(
            f"{path} was written for a different version of {doc.doc_id}"
        )
    mentions = []
    for rec in payload["mentions"]:
        ordinal = doc.ordinal_for_span(rec["start"], rec["end"])
        mentions.append(
            AnnotatedMention(
                mention_id=rec["id"],
                start=rec["start"],
                end=rec["end"],
                surface=doc.text[rec["start"] : rec["end"]],
                mtype=rec["type"],
                source=doc.sources.get(ordinal, SOURCE_TEXT),
                kb_id=rec["link"]["kb_id"],
                cluster_id=rec["cluster"],
                provenance=rec["provenance"],
            )
        )
    doc.mentions = sorted(mentions, key=lambda m: m.start)
    _check_invariants(doc, doc.mentions)


def export_corpus(docs: dict[str, AnnotatedDocument], out_dir: Path) -> None:
    """Write doc_id.txt + doc_id.ann.json per document plus a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for doc_id in sorted(docs):
        doc = docs[doc_id]
        (out_dir / f"{doc_id}.txt").write_text(doc.text, encoding="utf-8")
        write_annotation_file(doc, out_dir / f"{doc_id}.ann.json")
    manifest = {"schema": 1, "docs": sorted(docs)}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def import_corpus(g: CaseGraph, in_dir: Path) -> dict[str, AnnotatedDocument]:
    """Rebuild documents from the graph and attach the exported annotations."""
    in_dir = Path(in_dir)
    manifest = json.loads((in_dir / "manifest.json").read_text(encoding="utf-8"))
    docs: dict[str, AnnotatedDocument] = {}
    for doc_id in manifest["docs"]:
        doc = serialize_chat(g, doc_id)
        exported_text = (in_dir / f"{doc_id}.txt").read_text(encoding="utf-8")
        if exported_text != doc.text:
            raise StaleDocumentError(f"{doc_id}.txt does not match the case graph")
        read_annotation_file(doc, in_dir / f"{doc_id}.ann.json")
        docs[doc_id] = doc
    return docs
