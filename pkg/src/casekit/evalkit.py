"""Evaluation metrics: strong/partial NER scoring and word error rate."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyReferenceError, OverlapError

STRONG = "STRONG"
PARTIAL = "PARTIAL"


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    mtype: str


@dataclass
class NerScore:
    precision: float
    recall: float
    f1: float
    mode: str
    per_type: dict[str, "NerScore"] = field(default_factory=dict)


@dataclass
class WerScore:
    substitutions: int
    insertions: int
    deletions: int
    reference_len: int

    @property
    def wer(self) -> float:
        return (self.substitutions + self.insertions + self.deletions) / self.reference_len


def _check_no_overlap(spans: list[Span], which: str) -> None:
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.end > b.start:
            raise OverlapError(f"{which} spans overlap: {a} / {b}")


def _matches(
    gold: list[Span], pred: list[Span], mode: str, require_type: bool
) -> int:
    """Greedy one-to-one matching in gold order."""
    taken = [False] * len(pred)
    count = 0
    for g in gold:
        for i, p in enumerate(pred):
            if taken[i]:
                continue
            if mode == STRONG:
                ok = p.start == g.start and p.end == g.end and p.mtype == g.mtype
            else:
                overlap = p.start < g.end and g.start < p.end
                ok = overlap and (not require_type or p.mtype == g.mtype)
            if ok:
                taken[i] = True
                count += 1
                break
    return count


def _prf(matches: int, n_pred: int, n_gold: int, mode: str) -> NerScore:
    p = matches / n_pred if n_pred else 0.0
    r = matches / n_gold if n_gold else 0.0
    f1 = 2 * p * r / (p + r) if (p + r) else 0.0
    return NerScore(precision=p, recall=r, f1=f1, mode=mode)


def ner_eval(
    gold: list[Span],
    pred: list[Span],
    mode: str = STRONG,
    require_type: bool = True,
) -> NerScore:
    """Precision/recall/F1 with exact (STRONG) or overlap (PARTIAL) matching.

    PARTIAL requires type equality by default so it relaxes STRONG along the
    span axis only; pass require_type=False for the span-only reading.
    """
    if mode not in (STRONG, PARTIAL):
        raise ValueError(f"unknown mode {mode!r}")
    gold = sorted(gold, key=lambda s: (s.start, s.end))
    pred = sorted(pred, key=lambda s: (s.start, s.end))
    _check_no_overlap(gold, "gold")
    _check_no_overlap(pred, "pred")

    score = _prf(_matches(gold, pred, mode, require_type), len(pred), len(gold), mode)
    for mtype in sorted({s.mtype for s in gold} | {s.mtype for s in pred}):
        g = [s for s in gold if s.mtype == mtype]
        p = [s for s in pred if s.mtype == mtype]
        score.per_type[mtype] = _prf(_matches(g, p, mode, require_type), len(p), len(g), mode)
    return score


def spans_from_ann_file(path: Path) -> list[Span]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        Span(start=m["start"], end=m["end"], mtype=m["type"]) for m in payload["mentions"]
    ]


def ner_eval_corpus(
    gold_dir: Path,
    pred_dir: Path,
    mode: str = STRONG,
    require_type: bool = True,
) -> NerScore:
    """Micro-averaged NER score over paired .ann.json directories."""
    gold_dir, pred_dir = Path(gold_dir), Path(pred_dir)
    gold_files = sorted(gold_dir.glob("*.ann.json"))
    if not gold_files:
        raise ValueError(f"no .ann.json files in {gold_dir}")
    matches = n_gold = n_pred = 0
    for gf in gold_files:
        pf = pred_dir / gf.name
        gold = sorted(spans_from_ann_file(gf), key=lambda s: (s.start, s.end))
        pred = (
            sorted(spans_from_ann_file(pf), key=lambda s: (s.start, s.end))
            if pf.is_file()
            else []
        )
        _check_no_overlap(gold, "gold")
        _check_no_overlap(pred, "pred")
        matches += _matches(gold, pred, mode, require_type)
        n_gold += len(gold)
        n_pred += len(pred)
    return _prf(matches, n_pred, n_gold, mode)


def wer(reference: list[str], hypothesis: list[str]) -> WerScore:
    """Token-level edit distance; ties prefer substitution, then deletion."""
    if not reference:
        raise EmptyReferenceError("reference token list is empty")
    R, H = len(reference), len(hypothesis)
    dist = [[0] * (H + 1) for _ in range(R + 1)]
    for i in range(1, R + 1):
        dist[i][0] = i
    for j in range(1, H + 1):
        dist[0][j] = j
    for i in range(1, R + 1):
        for j in range(1, H + 1):
            sub = dist[i - 1][j - 1] + (reference[i - 1] != hypothesis[j - 1])
            dele = dist[i - 1][j] + 1
            ins = dist[i][j - 1] + 1
            dist[i][j] = min(sub, dele, ins)

    s = d = ins_count = 0
    i, j = R, H
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            diag = dist[i - 1][j - 1] + (reference[i - 1] != hypothesis[j - 1])
            if dist[i][j] == diag:
                if reference[i - 1] != hypothesis[j - 1]:
                    s += 1
                i, j = i - 1, j - 1
                continue
        if i > 0 and dist[i][j] == dist[i - 1][j] + 1:
            d += 1
            i -= 1
            continue
        ins_count += 1
        j -= 1

    return WerScore(substitutions=s, insertions=ins_count, deletions=d, reference_len=R)
