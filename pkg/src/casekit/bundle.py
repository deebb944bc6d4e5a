"""On-disk case bundle: one directory holding every artifact of a case.

Layout: case.json (manifest + stage flags), nodes.jsonl / edges.jsonl (graph),
docs/ + ann/ (serialized chats and standoff annotations), index/ (search
index), models/ (logistic model weights), kb.tsv, audit.log. Stages refuse to
run out of order, mutations go through an advisory lock, and every writer is
deterministic so re-running a stage on unchanged input rewrites identical
bytes. audit.log is append-only and excluded from the manifest digests.
"""

from __future__ import annotations

import hashlib
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import annotations as ann
from .casegraph import CHAT, CaseGraph, export_graph, import_graph
from .errors import BundleError
from .neel.linking import load_kb_tsv
from .neel.logistic import LogisticModel
from .entities import KBEntry
from .textindex import SearchIndex

SCHEMA_VERSION = 1
STAGE_ORDER = ["ingest", "enrich", "extract", "index"]

NODES_FILE = "nodes.jsonl"
EDGES_FILE = "edges.jsonl"
CASE_FILE = "case.json"
AUDIT_FILE = "audit.log"
KB_FILE = "kb.tsv"
INDEX_FILE = "index/index.json"
NIL_MODEL_FILE = "models/nil.json"
PAIR_MODEL_FILE = "models/pair.json"


@dataclass
class CaseState:
    """Everything a loaded case keeps in memory."""

    graph: CaseGraph
    docs: dict[str, ann.AnnotatedDocument] = field(default_factory=dict)
    index: SearchIndex | None = None
    kb: list[KBEntry] = field(default_factory=list)
    nil_model: LogisticModel | None = None
    pair_model: LogisticModel | None = None


class CaseBundle:
    def __init__(self, root: Path):
        self.root = Path(root)

    # -- manifest ------------------------------------------------------------

    @property
    def case_path(self) -> Path:
        return self.root / CASE_FILE

    def exists(self) -> bool:
        return self.case_path.is_file()

    def read_manifest(self) -> dict:
        if not self.exists():
            raise BundleError(f"{self.root} is not a case bundle (missing {CASE_FILE})")
        manifest = json.loads(self.case_path.read_text(encoding="utf-8"))
        if manifest.get("schema") != SCHEMA_VERSION:
            raise BundleError(f"unsupported bundle schema {manifest.get('schema')!r}")
        return manifest

    def write_manifest(self, manifest: dict) -> None:
        manifest["schema"] = SCHEMA_VERSION
        manifest["files"] = self._file_digests()
        self.case_path.write_text(
            json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    def _file_digests(self) -> dict[str, str]:
        digests = {}
        for path in sorted(self.root.rglob("*")):
            if not path.is_file():
                continue
            rel = path.relative_to(self.root).as_posix()
            if rel in (CASE_FILE, AUDIT_FILE) or rel.startswith("."):
                continue
            digests[rel] = hashlib.sha256(path.read_bytes()).hexdigest()
        return digests

    def stage_done(self, stage: str) -> bool:
        if not self.exists():
            return False
        return bool(self.read_manifest().get("stages", {}).get(stage))

    def require_stage(self, stage: str) -> None:
        if not self.stage_done(stage):
            raise BundleError(f"stage '{stage}' has not run yet in {self.root}")

    def mark_stage(self, stage: str, **extra) -> None:
        manifest = self.read_manifest() if self.exists() else {"stages": {}}
        manifest.setdefault("stages", {})[stage] = True
        manifest.update(extra)
        self.write_manifest(manifest)

    # -- locking + audit -------------------------------------------------------

    @contextmanager
    def lock(self):
        """Advisory lock guarding bundle mutation."""
        self.root.mkdir(parents=True, exist_ok=True)
        lock_path = self.root / ".lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise BundleError(f"{self.root} is locked by another process") from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield self
        finally:
            lock_path.unlink(missing_ok=True)

    def audit(self, event: str, **details) -> None:
        stamp = datetime.now(timezone.utc).isoformat()
        line = json.dumps({"ts": stamp, "event": event, **details}, sort_keys=True)
        with open(self.root / AUDIT_FILE, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    # -- component io ----------------------------------------------------------

    def save_graph(self, g: CaseGraph) -> None:
        export_graph(g, self.root / NODES_FILE, self.root / EDGES_FILE)

    def load_graph(self) -> CaseGraph:
        return import_graph(self.root / NODES_FILE, self.root / EDGES_FILE)

    def save_docs(self, docs: dict[str, ann.AnnotatedDocument]) -> None:
        docs_dir = self.root / "docs"
        ann_dir = self.root / "ann"
        docs_dir.mkdir(exist_ok=True)
        ann_dir.mkdir(exist_ok=True)
        for doc_id in sorted(docs):
            doc = docs[doc_id]
            (docs_dir / f"{doc_id}.txt").write_text(doc.text, encoding="utf-8")
            ann.write_annotation_file(doc, ann_dir / f"{doc_id}.ann.json")

    def save_doc(self, doc: ann.AnnotatedDocument) -> None:
        self.save_docs({doc.doc_id: doc})

    def save_index(self, index: SearchIndex) -> None:
        (self.root / "index").mkdir(exist_ok=True)
        index.save(self.root / INDEX_FILE)

    def save_models(self, nil_model: LogisticModel, pair_model: LogisticModel) -> None:
        (self.root / "models").mkdir(exist_ok=True)
        nil_model.save(self.root / NIL_MODEL_FILE)
        pair_model.save(self.root / PAIR_MODEL_FILE)

    def media_dir(self) -> Path | None:
        raw = self.read_manifest().get("media_dir")
        if raw is None:
            return None
        path = Path(raw)
        return path if path.is_absolute() else self.root / path

    def load_state(self) -> CaseState:
        """Load the full case back into memory."""
        manifest = self.read_manifest()
        graph = self.load_graph()
        state = CaseState(graph=graph)

        for node in graph.nodes_of_kind(CHAT):
            chat_id = node.props["chat_id"]
            doc = ann.serialize_chat(graph, chat_id)
            ann_path = self.root / "ann" / f"{chat_id}.ann.json"
            if ann_path.is_file():
                ann.read_annotation_file(doc, ann_path)
            state.docs[chat_id] = doc

        if manifest.get("stages", {}).get("index"):
            state.index = SearchIndex.load(self.root / INDEX_FILE)
        if (self.root / KB_FILE).is_file():
            state.kb = load_kb_tsv(self.root / KB_FILE)
        if (self.root / NIL_MODEL_FILE).is_file():
            state.nil_model = LogisticModel.load(self.root / NIL_MODEL_FILE)
        if (self.root / PAIR_MODEL_FILE).is_file():
            state.pair_model = LogisticModel.load(self.root / PAIR_MODEL_FILE)
        return state
