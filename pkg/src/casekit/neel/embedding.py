"""Deterministic text embeddings.

The built-in embedder hashes character trigrams into a fixed number of signed
buckets and L2-normalizes. It is not a neural encoder and does not try to be
one: it gives the linking and clustering stages a reproducible similarity
signal, and anything exposing the same text -> unit-vector contract (for
example an external bi-encoder) can be dropped in instead.
"""

from __future__ import annotations

import hashlib

import numpy as np

EMBED_DIM = 256
_HASH_PERSON = b"ck-trigram"


def _bucket_sign(gram: str) -> tuple[int, float]:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, person=_HASH_PERSON).digest()
    h = int.from_bytes(digest, "big")
    return h % EMBED_DIM, 1.0 if (h >> 8) & 1 == 0 else -1.0


def embed(text: str) -> np.ndarray:
    """Unit vector for the text; the zero vector flags empty input."""
    vec = np.zeros(EMBED_DIM)
    s = text.casefold()
    if not s:
        return vec
    grams = [s[i : i + 3] for i in range(len(s) - 2)] if len(s) >= 3 else [s]
    for gram in grams:
        bucket, sign = _bucket_sign(gram)
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        # pathological all-cancelling input; keep the flagged-zero contract
        return vec
    return vec / norm


def is_empty_embedding(vec: np.ndarray) -> bool:
    return not np.any(vec)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity; zero (flagged) vectors score 0 against everything."""
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def participant_repr(name: str, phones: set[str] | list[str]) -> str:
    """Entity text for one person (a sameAs class of contact records)."""
    if not phones:
        raise ValueError("participant class needs at least one phone")
    return f"{name} [ENT] phone number: {','.join(sorted(phones))}"
