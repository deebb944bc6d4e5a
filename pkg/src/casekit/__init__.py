"""casekit: entity-centric analysis of instant-messaging chat dumps.

Pipeline: parse dumps into chats, build the case property graph, enrich audio
attachments with transcripts, extract and cluster entity mentions, index
everything for faceted search, and serve the result to interactive clients.
"""

from . import annotations, casegraph, enrich, evalkit, ingest, neel, textindex
from .bundle import CaseBundle, CaseState
from .errors import CasekitError

__version__ = "0.1.0"

__all__ = [
    "CaseBundle",
    "CaseState",
    "CasekitError",
    "annotations",
    "casegraph",
    "enrich",
    "evalkit",
    "ingest",
    "neel",
    "textindex",
]
