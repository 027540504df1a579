"""Sentence-embedding providers.

Two implementations of the same interface: a remote HTTP service (the real
backend) and a deterministic hashed bag-of-words embedder for offline tests
and replay runs. All providers return unit-norm float64 vectors of a fixed
dimension.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from typing import Protocol, Sequence

import numpy as np
import requests

from sitquery.errors import ProviderError

EMBED_URL_ENV = "SITQUERY_EMBED_URL"
EMBED_KEY_ENV = "SITQUERY_EMBED_API_KEY"

_WORD = re.compile(r"[a-z0-9']+")


class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


def normalize_rows(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim == 1:
        vectors = vectors.reshape(1, -1)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return vectors / norms


class HashedBagOfWordsEmbedder:
    """Deterministic test embedder: tokens hash into signed buckets, L2-normalized.

    Identical text always maps to the identical vector, independent of process
    or platform (hashing goes through sha1, not Python's salted hash).
    """

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    def _bucket(self, token: str) -> tuple[int, float]:
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        index = int.from_bytes(digest[:4], "big") % self.dimension
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        return index, sign

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dimension), dtype=np.float64)
        for row, text in enumerate(texts):
            tokens = _WORD.findall(text.lower())
            if not tokens:
                tokens = [""]
            for token in tokens:
                index, sign = self._bucket(token)
                out[row, index] += sign
        return normalize_rows(out)


class RemoteEmbedder:
    """HTTP sentence-embedding service client.

    POSTs {"texts": [...]} and expects {"vectors": [[...], ...]}. The endpoint
    comes from the constructor or SITQUERY_EMBED_URL; the bearer credential
    only ever from SITQUERY_EMBED_API_KEY.
    """

    def __init__(self, url: str | None = None, dimension: int = 768, timeout: float = 60.0):
        self.url = url or os.environ.get(EMBED_URL_ENV, "")
        if not self.url:
            raise ProviderError(f"no embedding endpoint configured (set {EMBED_URL_ENV})")
        self.dimension = dimension
        self.timeout = timeout

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(EMBED_KEY_ENV, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            response = requests.post(
                self.url,
                data=json.dumps({"texts": list(texts)}),
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
        except (requests.RequestException, ValueError) as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        vectors = payload.get("vectors")
        if vectors is None or len(vectors) != len(texts):
            raise ProviderError("embedding response missing or mis-sized 'vectors'")
        arr = np.asarray(vectors, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != self.dimension:
            raise ProviderError(
                f"embedding response has shape {arr.shape}, expected (*, {self.dimension})"
            )
        return normalize_rows(arr)
