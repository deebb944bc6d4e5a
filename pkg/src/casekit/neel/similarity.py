"""Surface and vector similarities for mention pairs."""

from __future__ import annotations

import numpy as np

from ..errors import TypeMismatchError
from .embedding import cosine
from .logistic import LogisticModel

PAIR_FEATURES = ["jaro_winkler", "jaccard_tokens", "cosine"]

# configuration defaults, not ground truth; retrain with train_logistic
DEFAULT_PAIR_WEIGHTS = [2.0, 1.0, 2.0]
DEFAULT_PAIR_BIAS = -2.5


def jaro(s1: str, s2: str) -> float:
    if s1 == s2:
        return 1.0
    if not s1 or not s2:
        return 0.0
    window = max(len(s1), len(s2)) // 2 - 1
    window = max(window, 0)
    matched1 = [False] * len(s1)
    matched2 = [False] * len(s2)
    matches = 0
    for i, c1 in enumerate(s1):
        lo, hi = max(0, i - window), min(i + window + 1, len(s2))
        for j in range(lo, hi):
            if matched2[j] or s2[j] != c1:
                continue
            matched1[i] = matched2[j] = True
            matches += 1
            break
    if matches == 0:
        return 0.0
    transpositions = 0
    k = 0
    for i, c1 in enumerate(s1):
        if not matched1[i]:
            continue
        while not matched2[k]:
            k += 1
        if c1 != s2[k]:
            transpositions += 1
        k += 1
    t = transpositions // 2
    m = matches
    return (m / len(s1) + m / len(s2) + (m - t) / m) / 3.0


def jaro_winkler(s1: str, s2: str, prefix_scale: float = 0.1, max_prefix: int = 4) -> float:
    base = jaro(s1, s2)
    prefix = 0
    for a, b in zip(s1[:max_prefix], s2[:max_prefix]):
        if a != b:
            break
        prefix += 1
    return base + prefix * prefix_scale * (1.0 - base)


def jaccard_tokens(s1: str, s2: str) -> float:
    t1, t2 = set(s1.split()), set(s2.split())
    if not t1 and not t2:
        return 1.0
    union = t1 | t2
    return len(t1 & t2) / len(union)


def pair_features(
    surface_a: str,
    surface_b: str,
    emb_a: np.ndarray,
    emb_b: np.ndarray,
    mtype_a: str | None = None,
    mtype_b: str | None = None,
) -> list[float]:
    """[jaro_winkler, jaccard_tokens, cosine] on case-folded surfaces."""
    if mtype_a is not None and mtype_b is not None and mtype_a != mtype_b:
        raise TypeMismatchError(f"cannot compare {mtype_a} with {mtype_b}")
    a, b = surface_a.casefold(), surface_b.casefold()
    return [jaro_winkler(a, b), jaccard_tokens(a, b), cosine(emb_a, emb_b)]


def default_pair_model() -> LogisticModel:
    return LogisticModel.plain(
        weights=DEFAULT_PAIR_WEIGHTS, bias=DEFAULT_PAIR_BIAS, feature_names=PAIR_FEATURES
    )


def pair_score(model: LogisticModel, features: list[float]) -> float:
    """Probability that two mentions refer to the same entity."""
    return model.predict_proba(features)
