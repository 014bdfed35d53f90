"""Embedding spaces, IDF weighting and weighted n-gram decomposition.

The on-disk word-vector format is the plain-text one used by FastText and
word2vec: a ``"<vocab_count> <dim>"`` header followed by one
``"<token> <f1> ... <fd>"`` line per word.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import FormatError


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Whitespace tokenization with optional lowercasing (default on)."""
    if lowercase:
        text = text.lower()
    return text.split()


@dataclass(frozen=True)
class EmbeddingSpace:
    """Immutable token -> vector map with an optional IDF table.

    Unknown-token lookups return ``None`` explicitly; there is no silent
    zero-vector fallback. IDF lookups for tokens absent from the table
    resolve to the out-of-vocabulary value ``ln(corpus_doc_count + 1)``.
    """

    dimension: int
    vocabulary: dict[str, np.ndarray]
    idf: dict[str, float] = field(default_factory=dict)
    corpus_doc_count: int = 0

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        if self.corpus_doc_count < 0:
            raise ValueError("corpus_doc_count must be nonnegative")

    def __contains__(self, token: str) -> bool:
        return token in self.vocabulary

    def __len__(self) -> int:
        return len(self.vocabulary)

    def __repr__(self) -> str:
        return (
            f"EmbeddingSpace(dimension={self.dimension}, "
            f"vocab_size={len(self.vocabulary)}, "
            f"idf_entries={len(self.idf)})"
        )

    def get(self, token: str) -> Optional[np.ndarray]:
        """Vector for `token`, or None if the token is out of vocabulary."""
        return self.vocabulary.get(token)

    @property
    def oov_idf(self) -> float:
        return math.log(self.corpus_doc_count + 1)

    def idf_of(self, token: str) -> float:
        return self.idf.get(token, self.oov_idf)

    def with_idf(self, idf: dict[str, float], corpus_doc_count: int) -> "EmbeddingSpace":
        """New space sharing this vocabulary but carrying the given IDF table."""
        return EmbeddingSpace(
            dimension=self.dimension,
            vocabulary=self.vocabulary,
            idf=dict(idf),
            corpus_doc_count=corpus_doc_count,
        )


@dataclass(frozen=True)
class NgramSequence:
    """A sentence decomposed into embedded n-grams with normalized weights."""

    order: int
    spans: tuple[tuple[str, ...], ...]
    embeddings: np.ndarray  # (len(spans), d)
    raw_weights: np.ndarray
    weights: np.ndarray  # normalized, sums to 1 for non-empty sequences

    def __len__(self) -> int:
        return len(self.spans)

    @property
    def is_empty(self) -> bool:
        return len(self.spans) == 0

    @property
    def dimension(self) -> int:
        return self.embeddings.shape[1]


@dataclass(frozen=True)
class SentenceEmbedding:
    """A pooled or externally supplied sentence vector."""

    vector: np.ndarray
    provenance: str = "pooled"  # "pooled" | "external-file"
    degenerate: bool = False  # True when no token was in vocabulary


def compute_idf(corpus: Sequence[Iterable[str]]) -> dict[str, float]:
    """Smoothed inverse document frequencies over a tokenized corpus.

    idf(w) = ln((N + 1) / (df(w) + 1)) with df counting the documents that
    contain w at least once. Tokens never seen resolve to ln(N + 1) via
    :meth:`EmbeddingSpace.idf_of`.
    """
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    n_docs = len(corpus)
    df: dict[str, int] = {}
    for doc in corpus:
        for token in set(doc):
            df[token] = df.get(token, 0) + 1
    return {w: math.log((n_docs + 1) / (c + 1)) for w, c in df.items()}


def embed_tokens(
    tokens: Sequence[str], space: EmbeddingSpace
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """In-vocabulary tokens with their vectors and IDF weights.

    Out-of-vocabulary tokens are dropped; order is preserved.
    """
    kept = [t for t in tokens if t in space]
    if not kept:
        return [], np.zeros((0, space.dimension)), np.zeros(0)
    vectors = np.stack([space.vocabulary[t] for t in kept]).astype(np.float64)
    idfs = np.array([space.idf_of(t) for t in kept], dtype=np.float64)
    return kept, vectors, idfs


def ngramize_vectors(
    tokens: Sequence[str],
    vectors: np.ndarray,
    idfs: np.ndarray,
    n: int,
) -> NgramSequence:
    """Form the n-gram sequence from already-embedded tokens.

    Gram embedding is the mean of constituent token vectors; its raw weight
    is the sum of constituent IDFs. Weights are normalized to sum to one,
    falling back to uniform when every raw weight is zero.
    """
    if n not in (1, 2):
        raise ValueError(f"n-gram order must be 1 or 2, got {n}")
    t = len(tokens)
    count = max(0, t - n + 1)
    d = vectors.shape[1]
    if count == 0:
        empty = np.zeros(0)
        return NgramSequence(n, (), np.zeros((0, d)), empty, empty)
    spans = tuple(tuple(tokens[i : i + n]) for i in range(count))
    embeddings = np.stack([vectors[i : i + n].mean(axis=0) for i in range(count)])
    raw = np.array([idfs[i : i + n].sum() for i in range(count)], dtype=np.float64)
    total = raw.sum()
    if total > 0:
        weights = raw / total
    else:
        weights = np.full(count, 1.0 / count)
    return NgramSequence(n, spans, embeddings, raw, weights)


def ngramize(tokens: Sequence[str], space: EmbeddingSpace, n: int) -> NgramSequence:
    """Decompose a sentence into weighted, embedded n-grams.

    OOV tokens are dropped before n-gram formation. A sentence whose every
    token is OOV yields an explicit empty sequence; callers must handle it.
    """
    kept, vectors, idfs = embed_tokens(tokens, space)
    return ngramize_vectors(kept, vectors, idfs, n)


def pool_vectors(vectors: np.ndarray, idfs: np.ndarray) -> SentenceEmbedding:
    """IDF-weighted mean of token vectors; uniform mean if all IDFs are zero."""
    if vectors.shape[0] == 0:
        return SentenceEmbedding(np.zeros(vectors.shape[1]), "pooled", degenerate=True)
    total = idfs.sum()
    if total > 0:
        weights = idfs / total
    else:
        weights = np.full(vectors.shape[0], 1.0 / vectors.shape[0])
    return SentenceEmbedding(weights @ vectors, "pooled", degenerate=False)


def pool_sentence(tokens: Sequence[str], space: EmbeddingSpace) -> SentenceEmbedding:
    """IDF-weighted mean of the in-vocabulary token vectors of a sentence."""
    _, vectors, idfs = embed_tokens(tokens, space)
    return pool_vectors(vectors, idfs)


def _format_float(x: float) -> str:
    # repr of a Python float is the shortest string that round-trips exactly
    return repr(float(x))


def load_embedding_space(path, expected_dim: Optional[int] = None) -> EmbeddingSpace:
    """Parse a word-vector text file into an :class:`EmbeddingSpace`.

    Raises :class:`FormatError` on malformed headers, row arity mismatches,
    non-finite values or a row count that disagrees with the header.
    Duplicate tokens keep the last occurrence and emit a warning.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise FormatError(f"{path}: malformed header {header!r}")
        try:
            declared_count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise FormatError(f"{path}: malformed header {header!r}") from None
        if declared_count < 0 or dim <= 0:
            raise FormatError(f"{path}: malformed header {header!r}")
        if expected_dim is not None and dim != expected_dim:
            raise FormatError(
                f"{path}: header dimension {dim} does not match expected {expected_dim}"
            )
        vocabulary: dict[str, np.ndarray] = {}
        n_rows = 0
        duplicates = 0
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(" ")
            if len(fields) != dim + 1:
                raise FormatError(
                    f"{path}:{lineno}: expected {dim + 1} fields, got {len(fields)}"
                )
            token = fields[0]
            try:
                vec = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric vector component") from None
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"{path}:{lineno}: non-finite vector component")
            if token in vocabulary:
                duplicates += 1
            vocabulary[token] = vec
            n_rows += 1
        if n_rows != declared_count:
            raise FormatError(
                f"{path}: header declares {declared_count} rows, found {n_rows}"
            )
    if duplicates:
        warnings.warn(
            f"{path}: {duplicates} duplicate token(s), last occurrence kept",
            stacklevel=2,
        )
    return EmbeddingSpace(dimension=dim, vocabulary=vocabulary)


def save_embedding_space(space: EmbeddingSpace, path) -> None:
    """Write a space back to the word-vector text format, full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(space.vocabulary)} {space.dimension}\n")
        for token, vec in space.vocabulary.items():
            fh.write(token + " " + " ".join(_format_float(v) for v in vec) + "\n")


def load_sentence_vectors(path, expected_dim: Optional[int] = None) -> dict[str, np.ndarray]:
    """Parse a sentence-embedding dump: ``"<sentence_id>\\t<f1> ... <fd>"``."""
    out: dict[str, np.ndarray] = {}
    dim = expected_dim
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 tab-separated fields")
            sid, payload = fields
            try:
                vec = np.array([float(v) for v in payload.split()], dtype=np.float64)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric vector component") from None
            if not np.all(np.isfinite(vec)):
                raise FormatError(f"{path}:{lineno}: non-finite vector component")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise FormatError(
                    f"{path}:{lineno}: expected {dim} components, got {vec.size}"
                )
            if sid in out:
                raise FormatError(f"{path}:{lineno}: duplicate sentence id {sid!r}")
            out[sid] = vec
    return out
