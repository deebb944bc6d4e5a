import random
from functools import lru_cache

import pytest

from casekit.errors import EmptyReferenceError, OverlapError
from casekit.evalkit import PARTIAL, STRONG, Span, ner_eval, wer


# ---------------------------------------------------------------------------
# exhaustive edit-distance oracle: try every alignment
# ---------------------------------------------------------------------------

def exhaustive_edit_distance(ref: tuple, hyp: tuple) -> int:
    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == len(ref):
            return len(hyp) - j
        if j == len(hyp):
            return len(ref) - i
        return min(
            go(i + 1, j + 1) + (ref[i] != hyp[j]),
            go(i + 1, j) + 1,
            go(i, j + 1) + 1,
        )

    return go(0, 0)


def random_spans(rng: random.Random, length: int = 60, max_spans: int = 6) -> list[Span]:
    spans = []
    cursor = 0
    for _ in range(rng.randint(0, max_spans)):
        start = cursor + rng.randint(0, 6)
        end = start + rng.randint(1, 6)
        if end > length:
            break
        spans.append(Span(start, end, rng.choice(["PER", "ORG", "LOC"])))
        cursor = end + rng.randint(0, 2)
    return spans


class TestNerEval:
    def test_identity_perfect(self):
        gold = [Span(0, 5, "PER"), Span(10, 16, "LOC")]
        for mode in (STRONG, PARTIAL):
            score = ner_eval(gold, list(gold), mode=mode)
            assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_hand_case_strong_vs_partial(self):
        gold = [Span(0, 5, "PER"), Span(10, 16, "LOC")]
        pred = [Span(0, 5, "PER"), Span(9, 16, "LOC")]
        strong = ner_eval(gold, pred, mode=STRONG)
        partial = ner_eval(gold, pred, mode=PARTIAL)
        assert (strong.precision, strong.recall) == (0.5, 0.5)
        assert (partial.precision, partial.recall) == (1.0, 1.0)

    def test_partial_requires_type_by_default(self):
        gold = [Span(0, 5, "PER")]
        pred = [Span(0, 5, "LOC")]
        assert ner_eval(gold, pred, mode=PARTIAL).f1 == 0.0
        relaxed = ner_eval(gold, pred, mode=PARTIAL, require_type=False)
        assert relaxed.f1 == 1.0

    def test_empty_lists(self):
        score = ner_eval([], [], mode=STRONG)
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_self_overlap_rejected(self):
        bad = [Span(0, 5, "PER"), Span(3, 8, "PER")]
        with pytest.raises(OverlapError):
            ner_eval(bad, [], mode=STRONG)
        with pytest.raises(OverlapError):
            ner_eval([], bad, mode=STRONG)

    def test_partial_never_below_strong(self):
        rng = random.Random(20240610)
        for _ in range(1000):
            gold = random_spans(rng)
            pred = random_spans(rng)
            strong = ner_eval(gold, pred, mode=STRONG)
            partial = ner_eval(gold, pred, mode=PARTIAL)
            assert partial.precision >= strong.precision - 1e-12
            assert partial.recall >= strong.recall - 1e-12
            assert partial.f1 >= strong.f1 - 1e-12

    def test_prediction_order_invariant(self):
        rng = random.Random(8)
        for _ in range(100):
            gold = random_spans(rng)
            pred = random_spans(rng)
            shuffled = list(pred)
            rng.shuffle(shuffled)
            a = ner_eval(gold, pred, mode=PARTIAL)
            b = ner_eval(gold, shuffled, mode=PARTIAL)
            assert (a.precision, a.recall, a.f1) == (b.precision, b.recall, b.f1)

    def test_per_type_breakdown(self):
        gold = [Span(0, 5, "PER"), Span(10, 16, "LOC")]
        pred = [Span(0, 5, "PER")]
        score = ner_eval(gold, pred, mode=STRONG)
        assert score.per_type["PER"].f1 == 1.0
        assert score.per_type["LOC"].f1 == 0.0


class TestWer:
    def test_identity_zero(self):
        score = wer(["a", "b", "c"], ["a", "b", "c"])
        assert score.wer == 0.0
        assert (score.substitutions, score.insertions, score.deletions) == (0, 0, 0)

    def test_hand_case(self):
        score = wer("the cat sat".split(), "the bat sat on".split())
        assert (score.substitutions, score.insertions, score.deletions) == (1, 1, 0)
        assert score.wer == pytest.approx(2 / 3)

    def test_empty_hypothesis_is_all_deletions(self):
        score = wer(["a", "b"], [])
        assert score.deletions == 2
        assert score.wer == 1.0

    def test_empty_reference_rejected(self):
        with pytest.raises(EmptyReferenceError):
            wer([], ["x"])

    def test_wer_can_exceed_one(self):
        score = wer(["a"], ["b", "c", "d"])
        assert score.wer > 1.0

    def test_matches_exhaustive_oracle_1000(self):
        rng = random.Random(20240611)
        vocab = ["a", "b", "c", "d"]
        for _ in range(1000):
            ref = tuple(rng.choice(vocab) for _ in range(rng.randint(1, 8)))
            hyp = tuple(rng.choice(vocab) for _ in range(rng.randint(0, 8)))
            score = wer(list(ref), list(hyp))
            assert score.substitutions + score.insertions + score.deletions == (
                exhaustive_edit_distance(ref, hyp)
            )

    def test_relabel_invariance(self):
        rng = random.Random(13)
        vocab = ["a", "b", "c"]
        mapping = {"a": "xx", "b": "yy", "c": "zz"}
        for _ in range(200):
            ref = [rng.choice(vocab) for _ in range(rng.randint(1, 8))]
            hyp = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
            direct = wer(ref, hyp)
            mapped = wer([mapping[t] for t in ref], [mapping[t] for t in hyp])
            assert (direct.substitutions, direct.insertions, direct.deletions) == (
                mapped.substitutions,
                mapped.insertions,
                mapped.deletions,
            )

    def test_tie_break_prefers_substitution(self):
        # "ab" -> "ba" can be done as 2 subs or ins+del; counts must say 2 subs
        score = wer(["a", "b"], ["b", "a"])
        assert (score.substitutions, score.insertions, score.deletions) == (2, 0, 0)
