"""Candidate ranking against the knowledge base and NIL prediction.

Person mentions are linked only to chat participants; organizations and
locations only to external knowledge-base entries. Dates, money amounts, and
miscellaneous mentions are never linked.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import NoCandidatesError, TypeMismatchError
from .embedding import cosine, embed, participant_repr
from .logistic import LogisticModel
from ..entities import LOC, ORG, PER, KBEntry, LinkDecision, Mention

CONTEXT_CHARS = 64
NIL_FEATURES = ["top_score", "gap"]
DEFAULT_NIL_THRESHOLD = 0.5

# configuration defaults calibrated on the built-in embedder, not ground truth
DEFAULT_NIL_WEIGHTS = [6.0, 3.0]
DEFAULT_NIL_BIAS = -2.0


def default_nil_model() -> LogisticModel:
    return LogisticModel.plain(
        weights=DEFAULT_NIL_WEIGHTS, bias=DEFAULT_NIL_BIAS, feature_names=NIL_FEATURES
    )


def load_kb_tsv(path: Path) -> list[KBEntry]:
    """Read external KB entries from a TSV of kb_id, title, description, etype."""
    entries = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 tab-separated fields")
        kb_id, title, description, etype = parts
        if etype not in (PER, ORG, LOC):
            raise ValueError(f"{path}:{lineno}: bad etype {etype!r}")
        entries.append(KBEntry(kb_id=kb_id, title=title, description=description, etype=etype))
    return entries


def participant_entries(persons: list[tuple[str, set[str]]]) -> list[KBEntry]:
    """KB entries for sameAs-merged persons: (display name, phones) pairs."""
    entries = []
    for name, phones in persons:
        kbid = "part:" + min(phones)
        repr_text = participant_repr(name, phones)
        _, _, description = repr_text.partition(" [ENT] ")
        entries.append(
            KBEntry(kb_id=kbid, title=name, description=description, etype=PER, origin="PARTICIPANT")
        )
    return entries


def entry_text(entry: KBEntry) -> str:
    return f"{entry.title} [ENT] {entry.description}"


def mention_text(m: Mention, doc: str, bounds: tuple[int, int] | None = None) -> str:
    """Embedding template: surface plus up to 64 chars of context each side.

    `bounds` clips the context to the message the mention sits in, so
    serialization metadata from neighboring lines never leaks into the
    similarity signal.
    """
    blo, bhi = bounds if bounds is not None else (0, len(doc))
    lo = max(blo, m.start - CONTEXT_CHARS)
    hi = min(bhi, m.end + CONTEXT_CHARS)
    return f"{m.surface} [CTX] {doc[lo:hi]}"


def kb_partition(kb: list[KBEntry], mtype: str) -> list[KBEntry]:
    if mtype == PER:
        return [e for e in kb if e.origin == "PARTICIPANT"]
    if mtype in (ORG, LOC):
        return [e for e in kb if e.origin == "EXTERNAL" and e.etype == mtype]
    raise TypeMismatchError(f"{mtype} mentions are not linkable")


def link_mention(
    m: Mention,
    doc: str,
    kb: list[KBEntry],
    k: int = 10,
    mention_embedding: np.ndarray | None = None,
) -> list[tuple[str, float]]:
    """Top-k (kb_id, cosine score) candidates from the type-compatible KB slice."""
    pool = kb_partition(kb, m.mtype)
    if mention_embedding is None:
        mention_embedding = embed(mention_text(m, doc))
    scored = [
        (entry.kb_id, cosine(mention_embedding, embed(entry_text(entry)))) for entry in pool
    ]
    scored.sort(key=lambda c: (-c[1], c[0]))
    return scored[:k]


def nil_predict(
    model: LogisticModel, top_score: float, gap: float | None = None
) -> float:
    """Probability that the top-ranked candidate is the correct link."""
    if gap is None:
        gap = top_score - (-1.0)
    return model.predict_proba([top_score, gap])


def decide_link(
    m: Mention,
    candidates: list[tuple[str, float]],
    model: LogisticModel,
    threshold: float = DEFAULT_NIL_THRESHOLD,
) -> LinkDecision:
    """Turn ranked candidates into a LINKED/NIL outcome."""
    try:
        require_candidates(candidates)
    except NoCandidatesError:
        # an empty candidate list forces NIL
        return LinkDecision(mention_id=m.mention_id, candidates=[], nil_probability=0.0)
    top_id, top_score = candidates[0]
    gap = top_score - candidates[1][1] if len(candidates) > 1 else None
    p = nil_predict(model, top_score, gap)
    if p >= threshold:
        return LinkDecision(
            mention_id=m.mention_id,
            candidates=candidates,
            nil_probability=p,
            outcome="LINKED",
            kb_id=top_id,
        )
    return LinkDecision(
        mention_id=m.mention_id, candidates=candidates, nil_probability=p, outcome="NIL"
    )


def require_candidates(candidates: list[tuple[str, float]]) -> None:
    if not candidates:
        raise NoCandidatesError("no candidates for NIL prediction")
