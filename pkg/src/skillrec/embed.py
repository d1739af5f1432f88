"""Source-text embeddings: native TF-IDF, precomputed vectors, remote service.

All providers expose the same small surface (``tag``, ``dim``,
``embed_one``, ``embed_many``) and are keyed by a content digest of the
exact source text, so the same cache serves student submissions and
reference solutions alike.

Cache file format: line 1 is a JSON header ``{"provider": str, "dim": int}``,
every following line is ``{"digest": hex-sha256, "values": [floats]}``.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
import threading
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import httpx
import numpy as np

from .errors import (
    CorruptRecord,
    DimMismatch,
    EmbeddingFailure,
    EmptyCorpus,
    HttpError,
    RemoteTimeout,
)

DEFAULT_DIM = 768

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|\S")


def source_digest(source: str) -> str:
    """Hex SHA-256 of the UTF-8 source text."""
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class Embedding:
    """Dense real vector for one source text."""

    values: np.ndarray
    dim: int
    provider_tag: str
    source_digest: str

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) != self.dim:
            raise DimMismatch(f"expected {self.dim} components, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("embedding components must be finite")
        object.__setattr__(self, "values", values)


def tokenize(source: str) -> list[str]:
    """Lexical splitting: [A-Za-z0-9_] runs, then single non-space characters.

    Language-agnostic on purpose; case is preserved and comments are kept.
    """
    return _TOKEN_RE.findall(source)


@dataclass(frozen=True)
class TfIdfVocabulary:
    """Top terms of a corpus with their document frequencies."""

    terms: tuple[str, ...]
    doc_freqs: tuple[int, ...]
    corpus_doc_count: int
    max_terms: int

    def to_json(self) -> str:
        doc = {
            "terms": list(self.terms),
            "doc_freqs": list(self.doc_freqs),
            "corpus_doc_count": self.corpus_doc_count,
            "max_terms": self.max_terms,
        }
        return json.dumps(doc, ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TfIdfVocabulary":
        doc = json.loads(text)
        return cls(
            terms=tuple(doc["terms"]),
            doc_freqs=tuple(doc["doc_freqs"]),
            corpus_doc_count=doc["corpus_doc_count"],
            max_terms=doc["max_terms"],
        )


def build_vocabulary(corpus_sources: list[str], max_terms: int = DEFAULT_DIM) -> TfIdfVocabulary:
    """Top ``max_terms`` tokens by total corpus count, ties broken lexicographically."""
    if not corpus_sources:
        raise EmptyCorpus("cannot build a vocabulary from zero documents")
    totals: Counter[str] = Counter()
    dfs: Counter[str] = Counter()
    for source in corpus_sources:
        tokens = tokenize(source)
        totals.update(tokens)
        dfs.update(set(tokens))
    ordered = sorted(totals, key=lambda t: (-totals[t], t))[:max_terms]
    return TfIdfVocabulary(
        terms=tuple(ordered),
        doc_freqs=tuple(dfs[t] for t in ordered),
        corpus_doc_count=len(corpus_sources),
        max_terms=max_terms,
    )


def _idf(vocab: TfIdfVocabulary) -> np.ndarray:
    df = np.asarray(vocab.doc_freqs, dtype=np.float64)
    return np.log((1.0 + vocab.corpus_doc_count) / (1.0 + df)) + 1.0


def tfidf_embed(source: str, vocab: TfIdfVocabulary) -> Embedding:
    """tf * idf with smoothed idf, L2-normalized; dim = max_terms (zero tail)."""
    index = {t: i for i, t in enumerate(vocab.terms)}
    vec = np.zeros(vocab.max_terms, dtype=np.float64)
    counts = Counter(tokenize(source))
    idf = _idf(vocab)
    for term, tf in counts.items():
        i = index.get(term)
        if i is not None:
            vec[i] = tf * idf[i]
    norm = math.sqrt(float(np.dot(vec, vec)))
    if norm > 0.0:
        vec /= norm
    return Embedding(vec, vocab.max_terms, "tfidf", source_digest(source))


# ---------------------------------------------------------------------------
# Persistent cache and precomputed vectors
# ---------------------------------------------------------------------------


def _parse_cache_header(line: str, path) -> tuple[str, int]:
    try:
        header = json.loads(line)
        provider = header["provider"]
        dim = header["dim"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise CorruptRecord(f"{path}:1: bad cache header ({e})") from e
    if not isinstance(provider, str) or not isinstance(dim, int):
        raise CorruptRecord(f"{path}:1: bad cache header types")
    return provider, dim


def load_precomputed(path: str | Path, expected_dim: int) -> dict[str, Embedding]:
    """Read an embedding-cache file into a digest-keyed map."""
    path = Path(path)
    out: dict[str, Embedding] = {}
    with path.open(encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise CorruptRecord(f"{path}: missing header line")
        provider, dim = _parse_cache_header(first, path)
        if dim != expected_dim:
            raise DimMismatch(f"{path}: file dim {dim} != expected {expected_dim}")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                digest, values = rec["digest"], rec["values"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise CorruptRecord(f"{path}:{lineno}: bad record ({e})") from e
            if len(values) != expected_dim:
                raise DimMismatch(
                    f"{path}:{lineno}: vector has {len(values)} components, expected {expected_dim}"
                )
            out[digest] = Embedding(np.asarray(values, dtype=np.float64), expected_dim, provider, digest)
    return out


class EmbeddingCache:
    """Append-only persistent store; concurrent reads, serialized writes."""

    def __init__(self, path: str | Path, provider: str, dim: int):
        self.path = Path(path)
        self.provider = provider
        self.dim = dim
        self._lock = threading.Lock()
        self._entries: dict[str, Embedding] = {}
        if self.path.exists():
            existing = load_precomputed(self.path, dim)
            self._entries.update(existing)
        else:
            header = json.dumps({"provider": provider, "dim": dim})
            self.path.write_text(header + "\n", encoding="utf-8")

    def get(self, digest: str) -> Embedding | None:
        return self._entries.get(digest)

    def put(self, embedding: Embedding) -> None:
        if embedding.dim != self.dim:
            raise DimMismatch(f"cache dim {self.dim}, embedding dim {embedding.dim}")
        with self._lock:
            if embedding.source_digest in self._entries:
                return
            record = json.dumps(
                {"digest": embedding.source_digest, "values": [float(v) for v in embedding.values]}
            )
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(record + "\n")
            self._entries[embedding.source_digest] = embedding

    def __contains__(self, digest: str) -> bool:
        return digest in self._entries

    def __len__(self) -> int:
        return len(self._entries)


# ---------------------------------------------------------------------------
# Remote embedding service client
# ---------------------------------------------------------------------------


def remote_embed(
    endpoint: str,
    sources: list[str],
    timeout_s: float,
    expected_dim: int | None = None,
    provider_tag: str = "remote",
    cache: EmbeddingCache | None = None,
) -> list[Embedding]:
    """POST {"inputs": [...]} and return one embedding per source, in order."""
    try:
        response = httpx.post(endpoint, json={"inputs": sources}, timeout=timeout_s)
    except httpx.TransportError as e:
        raise RemoteTimeout(f"embedding service unreachable within {timeout_s}s: {e}") from e
    if response.status_code != 200:
        raise HttpError(response.status_code)
    try:
        vectors = response.json()["embeddings"]
    except (json.JSONDecodeError, KeyError, TypeError) as e:
        raise CorruptRecord(f"malformed embedding-service response ({e})") from e
    if len(vectors) != len(sources):
        raise CorruptRecord(f"service returned {len(vectors)} vectors for {len(sources)} inputs")
    out = []
    for source, values in zip(sources, vectors):
        if expected_dim is not None and len(values) != expected_dim:
            raise DimMismatch(f"service returned dim {len(values)}, expected {expected_dim}")
        emb = Embedding(
            np.asarray(values, dtype=np.float64), len(values), provider_tag, source_digest(source)
        )
        if cache is not None:
            cache.put(emb)
        out.append(emb)
    return out


# ---------------------------------------------------------------------------
# Providers
# ---------------------------------------------------------------------------


class TfIdfProvider:
    """Embeds with a fixed, already-built vocabulary; memoizes by digest."""

    def __init__(self, vocab: TfIdfVocabulary):
        self.vocab = vocab
        self.tag = "tfidf"
        self.dim = vocab.max_terms
        self._index = {t: i for i, t in enumerate(vocab.terms)}
        self._idf = _idf(vocab)
        self._memo: dict[str, Embedding] = {}

    def embed_one(self, source: str) -> Embedding:
        digest = source_digest(source)
        hit = self._memo.get(digest)
        if hit is not None:
            return hit
        vec = np.zeros(self.dim, dtype=np.float64)
        for term, tf in Counter(tokenize(source)).items():
            i = self._index.get(term)
            if i is not None:
                vec[i] = tf * self._idf[i]
        norm = math.sqrt(float(np.dot(vec, vec)))
        if norm > 0.0:
            vec /= norm
        emb = Embedding(vec, self.dim, self.tag, digest)
        self._memo[digest] = emb
        return emb

    def embed_many(self, sources: list[str]) -> list[Embedding]:
        return [self.embed_one(s) for s in sources]


class PrecomputedProvider:
    """Serves vectors loaded from an embedding-cache file."""

    def __init__(self, vectors: dict[str, Embedding], tag: str, dim: int):
        self._vectors = vectors
        self.tag = tag
        self.dim = dim

    @classmethod
    def from_file(cls, path: str | Path, expected_dim: int) -> "PrecomputedProvider":
        vectors = load_precomputed(path, expected_dim)
        tag = next(iter(vectors.values())).provider_tag if vectors else "precomputed"
        return cls(vectors, tag, expected_dim)

    def embed_one(self, source: str) -> Embedding:
        digest = source_digest(source)
        emb = self._vectors.get(digest)
        if emb is None:
            raise EmbeddingFailure(f"no precomputed embedding for digest {digest[:12]}...")
        return emb

    def embed_many(self, sources: list[str]) -> list[Embedding]:
        return [self.embed_one(s) for s in sources]


class RemoteProvider:
    """Fetches embeddings over HTTP, writing through an optional cache."""

    def __init__(
        self,
        endpoint: str,
        dim: int,
        timeout_s: float = 30.0,
        tag: str = "remote",
        cache: EmbeddingCache | None = None,
    ):
        self.endpoint = endpoint
        self.dim = dim
        self.timeout_s = timeout_s
        self.tag = tag
        self.cache = cache

    def embed_many(self, sources: list[str]) -> list[Embedding]:
        out: list[Embedding | None] = [None] * len(sources)
        misses: list[int] = []
        for i, source in enumerate(sources):
            if self.cache is not None:
                hit = self.cache.get(source_digest(source))
                if hit is not None:
                    out[i] = hit
                    continue
            misses.append(i)
        if misses:
            fetched = remote_embed(
                self.endpoint,
                [sources[i] for i in misses],
                self.timeout_s,
                expected_dim=self.dim,
                provider_tag=self.tag,
                cache=self.cache,
            )
            for i, emb in zip(misses, fetched):
                out[i] = emb
        return out  # type: ignore[return-value]

    def embed_one(self, source: str) -> Embedding:
        return self.embed_many([source])[0]


# ---------------------------------------------------------------------------
# Factories: how the evaluation harness obtains a provider per training cut
# ---------------------------------------------------------------------------


class TfIdfProviderFactory:
    """Fits a fresh vocabulary on each training corpus (temporal hygiene)."""

    def __init__(self, max_terms: int = DEFAULT_DIM):
        self.max_terms = max_terms

    def fit(self, training_sources: list[str]) -> TfIdfProvider:
        return TfIdfProvider(build_vocabulary(training_sources, self.max_terms))


class StaticProviderFactory:
    """Wraps an externally given provider (precomputed or remote); no fitting."""

    def __init__(self, provider):
        self.provider = provider

    def fit(self, training_sources: list[str]):
        return self.provider
