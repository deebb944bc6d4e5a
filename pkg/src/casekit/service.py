"""HTTP/JSON API over a loaded case bundle.

Handlers are thin adapters: every response body is the serialized result of
the corresponding library call, and every mutation persists to the bundle
before the request is acknowledged. Reads see a consistent snapshot; writes
are serialized per case.
"""

from __future__ import annotations

import json
import threading
from copy import deepcopy
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import annotations as ann
from . import casegraph, textindex
from .bundle import CaseBundle, CaseState
from .errors import (
    CasekitError,
    NoSuchDocError,
    NoSuchMentionError,
    NoSuchNodeError,
    StaleDocumentError,
)

_STATUS = {
    StaleDocumentError: 409,
    NoSuchDocError: 404,
    NoSuchMentionError: 404,
    NoSuchNodeError: 404,
}


class CaseSession:
    """One loaded case: bundle + in-memory state + serialized mutations."""

    def __init__(self, bundle: CaseBundle, state: CaseState):
        self.bundle = bundle
        self.state = state
        self.write_lock = threading.Lock()

    def doc_payload(self, doc_id: str) -> dict:
        doc = self.state.docs.get(doc_id)
        if doc is None:
            raise NoSuchDocError(f"unknown document {doc_id!r}")
        chat = f"chat:{doc_id}"
        attachments = {}
        for edge in self.state.graph.in_edges(chat, casegraph.IN_CHAT):
            msg = self.state.graph.nodes[edge.src]
            for att_edge in self.state.graph.out_edges(edge.src, casegraph.HAS_ATTACHMENT):
                ordinal = int(msg.props["msg_id"].rsplit("-", 1)[1])
                attachments[str(ordinal)] = att_edge.dst
        return {
            "doc_id": doc.doc_id,
            "text": doc.text,
            "text_sha256": doc.text_digest,
            "offset_map": {str(k): list(v) for k, v in sorted(doc.offset_map.items())},
            "sources": {str(k): v for k, v in sorted(doc.sources.items())},
            "attachments": dict(sorted(attachments.items())),
            "mentions": [m.to_json() for m in doc.mentions],
        }

    def apply_edits(self, doc_id: str, digest: str, ops: list[ann.EditOp]) -> dict:
        """Apply an edit batch atomically, then persist graph, doc, and index."""
        with self.write_lock:
            doc = self.state.docs.get(doc_id)
            if doc is None:
                raise NoSuchDocError(f"unknown document {doc_id!r}")
            working = deepcopy(doc)
            kb_ids = {e.kb_id for e in self.state.kb} or None
            changes = [ann.apply_edit(working, op, digest, known_kb_ids=kb_ids) for op in ops]

            removed_spans = [(m.start, m.end) for c in changes for m in c.removed]
            upserts = [m for c in changes for m in c.added]
            if removed_spans:
                casegraph.remove_entity_mentions(self.state.graph, doc_id, removed_spans)
            if upserts:
                casegraph.upsert_entity_mentions(
                    self.state.graph, doc_id, upserts, working.offset_map
                )
            self.state.docs[doc_id] = working
            if self.state.index is not None:
                textindex.reindex_doc(self.state.index, self.state.graph, doc_id, working)

            self.bundle.save_doc(working)
            self.bundle.save_graph(self.state.graph)
            if self.state.index is not None:
                self.bundle.save_index(self.state.index)
            manifest = self.bundle.read_manifest()
            self.bundle.write_manifest(manifest)
            self.bundle.audit(
                "edit", doc_id=doc_id, ops=[op.kind for op in ops], digest=digest
            )
            return {
                "doc": self.doc_payload(doc_id),
                "changes": [c.to_json() for c in changes],
            }


def _parse_faceted_query(request: Request) -> textindex.FacetedQuery:
    params = request.query_params
    keywords = params.get("q", "").split()
    filters: dict[str, set[str]] = {}
    for key, value in params.multi_items():
        if key.startswith("facet."):
            filters.setdefault(key[len("facet."):], set()).add(value)
    return textindex.FacetedQuery(
        keywords=keywords,
        filters=filters,
        want_facet_counts=params.get("counts", "").lower() in ("1", "true", "yes"),
    )


def create_app(session: CaseSession, frontend_dir: Path | None = None) -> FastAPI:
    app = FastAPI(title="casekit", docs_url=None, redoc_url=None)
    state = session.state

    @app.exception_handler(CasekitError)
    async def casekit_error(_request: Request, exc: CasekitError):
        status = _STATUS.get(type(exc), 400)
        return JSONResponse(
            status_code=status, content={"error": exc.code, "detail": str(exc)}
        )

    @app.exception_handler(ValueError)
    async def value_error(_request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400, content={"error": "E_BAD_REQUEST", "detail": str(exc)}
        )

    @app.get("/api/stats")
    def get_stats():
        return casegraph.stats(state.graph).to_dict()

    @app.get("/api/search")
    def get_search(request: Request):
        if state.index is None:
            raise NoSuchDocError("case has no search index; run the index stage")
        query = _parse_faceted_query(request)
        return textindex.search(state.index, query).to_json()

    @app.get("/api/chats/{doc_id}")
    def get_chat(doc_id: str):
        return session.doc_payload(doc_id)

    @app.patch("/api/chats/{doc_id}/annotations")
    async def patch_annotations(doc_id: str, request: Request):
        body = await request.json()
        digest = body.get("text_sha256")
        if not digest:
            raise ValueError("body must carry text_sha256")
        ops = [ann.EditOp.from_dict(o) for o in body.get("ops", [])]
        if not ops:
            raise ValueError("body must carry at least one op")
        return session.apply_edits(doc_id, digest, ops)

    @app.get("/api/graph/contacts/{contact}")
    def get_contact(contact: str):
        node_id = contact if contact.startswith("contact:") else f"contact:{contact}"
        closure = sorted(casegraph.sameas_closure(state.graph, node_id))
        chats = sorted(
            {
                e.dst
                for member in closure
                for e in state.graph.out_edges(member, casegraph.PARTICIPATES_IN)
            }
        )
        return {"contact": node_id, "closure": closure, "chats": chats}

    @app.get("/api/graph/query")
    def get_graph_query(q: str):
        query = casegraph.GraphQuery.from_dict(json.loads(q))
        message_ids = casegraph.query(state.graph, query)
        messages = []
        for mid in message_ids:
            node = state.graph.nodes[mid]
            messages.append(
                {
                    "id": mid,
                    "chat": state.graph.message_chat(mid),
                    "timestamp": node.props["timestamp"],
                    "sender": node.props["sender"],
                    "kind": node.props["kind"],
                    "text": state.graph.message_text(mid),
                }
            )
        return {"messages": messages}

    @app.get("/api/media/{attachment_id}")
    def get_media(attachment_id: str):
        node = state.graph.require(attachment_id)
        if node.kind != casegraph.ATTACHMENT:
            raise NoSuchNodeError(f"{attachment_id} is not an attachment")
        media_dir = session.bundle.media_dir()
        if media_dir is None:
            raise NoSuchNodeError("bundle has no media directory")
        path = media_dir / node.props["filename"]
        if not path.is_file():
            raise NoSuchNodeError(f"media file {node.props['filename']} missing")
        return Response(content=path.read_bytes(), media_type="application/octet-stream")

    if frontend_dir and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="ui")

    return app


def load_session(bundle_path: Path) -> CaseSession:
    bundle = CaseBundle(Path(bundle_path))
    state = bundle.load_state()
    return CaseSession(bundle, state)
