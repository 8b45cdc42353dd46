"""Text embedding, cosine similarity and exploration priority scoring."""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .core import TaskGoal, UiElement, element_text_repr
from .phash import DEFAULT_TAU, Hash64, hamming

DEFAULT_DIM = 256
DEFAULT_LAMBDA = 1.0

_TOKEN_RE = re.compile(r"[a-z0-9]+")
_COMPOUND_RE = re.compile(r"[a-z0-9]+(?:-[a-z0-9]+)+")


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    values: np.ndarray
    norm: float

    @classmethod
    def of(cls, values) -> "EmbeddingVector":
        v = np.asarray(values, dtype=np.float64)
        v.flags.writeable = False
        return cls(v, float(np.linalg.norm(v)))

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def scaled(self, c: float) -> "EmbeddingVector":
        return EmbeddingVector.of(self.values * c)


@dataclass(frozen=True)
class HistoryKey:
    screen_hash: Hash64
    element_repr: str

    def __post_init__(self):
        if not self.element_repr:
            raise ValueError("history keys need a nonempty element repr")


def tokenize(text: str) -> List[str]:
    """Alphanumeric runs, plus the joined form of hyphenated compounds ("wi-fi" -> wi, fi, wifi)."""
    low = text.lower()
    return _TOKEN_RE.findall(low) + [m.replace("-", "") for m in _COMPOUND_RE.findall(low)]


def token_bucket(token: str, dim: int) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


class HashingEmbedder:
    """Feature-hashed bag of tokens, L2-normalized. Deterministic across runs."""

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim
        self._cached = lru_cache(maxsize=4096)(self._embed)

    def _embed(self, text: str) -> EmbeddingVector:
        counts = np.zeros(self.dim)
        for tok in tokenize(text):
            counts[token_bucket(tok, self.dim)] += 1.0
        n = np.linalg.norm(counts)
        if n > 0:
            counts /= n
        return EmbeddingVector.of(counts)

    def __call__(self, text: str) -> EmbeddingVector:
        return self._cached(text)


Embedder = Callable[[str], EmbeddingVector]
DEFAULT_EMBEDDER = HashingEmbedder()


def embed(t: str, embedder: Optional[Embedder] = None) -> EmbeddingVector:
    return (embedder or DEFAULT_EMBEDDER)(t)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    if a.norm == 0 or b.norm == 0:
        return 0.0
    c = float(np.dot(a.values, b.values) / (a.norm * b.norm))
    return max(-1.0, min(1.0, c))


def relevance_score(e: UiElement, goal: TaskGoal, embedder: Optional[Embedder] = None) -> float:
    text = element_text_repr(e)
    if not text:
        return 0.0
    return cosine(embed(text, embedder), embed(goal.instruction, embedder))


def priority_score(r: float, visited: bool, lam: float = DEFAULT_LAMBDA) -> float:
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    return r - lam if visited else r


def is_visited(repr_: str, screen_hash: Hash64, history: Iterable[HistoryKey], tau: int = DEFAULT_TAU) -> bool:
    return any(k.element_repr == repr_ and hamming(screen_hash, k.screen_hash) <= tau for k in history)


def rank_candidates(
    elements: Sequence[UiElement],
    goal: TaskGoal,
    history: Iterable[HistoryKey],
    screen_hash: Hash64,
    lam: float = DEFAULT_LAMBDA,
    tau: int = DEFAULT_TAU,
    embedder: Optional[Embedder] = None,
) -> List[Tuple[UiElement, float]]:
    history = list(history)
    scored = []
    for e in elements:
        text = element_text_repr(e)
        if not e.clickable or not text:
            continue
        r = relevance_score(e, goal, embedder)
        scored.append((e, priority_score(r, is_visited(text, screen_hash, history, tau), lam)))
    scored.sort(key=lambda pair: (-pair[1], pair[0].index))
    return scored
