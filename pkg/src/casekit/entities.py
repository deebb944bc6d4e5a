"""Shared entity-extraction data types (mentions, KB entries, link decisions)."""

from __future__ import annotations

from dataclasses import dataclass, field

PER = "PER"
ORG = "ORG"
LOC = "LOC"
DATE = "DATE"
MONEY = "MONEY"
MISC = "MISC"

MENTION_TYPES = (PER, ORG, LOC, DATE, MONEY, MISC)
LINKABLE_TYPES = (PER, ORG, LOC)

SOURCE_TEXT = "TEXT"
SOURCE_AUDIO = "AUDIO"

# overlap resolution order; earlier wins on equal span length
TYPE_PRIORITY = {t: i for i, t in enumerate(MENTION_TYPES)}


@dataclass
class Mention:
    mention_id: str
    doc_id: str
    start: int
    end: int
    surface: str
    mtype: str
    source: str = SOURCE_TEXT

    def overlaps(self, other: "Mention") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass(frozen=True)
class KBEntry:
    kb_id: str
    title: str
    description: str
    etype: str
    origin: str = "EXTERNAL"  # EXTERNAL | PARTICIPANT


@dataclass
class LinkDecision:
    mention_id: str
    candidates: list[tuple[str, float]] = field(default_factory=list)
    nil_probability: float = 0.0
    outcome: str = "NIL"  # "NIL" or "LINKED"
    kb_id: str | None = None


@dataclass
class MentionCluster:
    cluster_id: str
    member_ids: list[str]
    representative: str
    mtype: str


def mention_id_for(doc_id: str, start: int, end: int) -> str:
    """Deterministic mention id; non-overlap makes the span unique per doc."""
    return f"{doc_id}:m-{start}-{end}"
