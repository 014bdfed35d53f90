"""Reference-free similarity scorers.

Both scorers compare a system translation directly against its source
sentence in a shared cross-lingual embedding space and use a uniform
higher-is-better orientation: the mover family reports the negated
transport cost, the sentence family raw cosine similarity. An optional
target-side language model score is fused in as ``base + lm_weight * lm``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .transport import wmd
from .vectors import (
    EmbeddingSpace,
    NgramSequence,
    embed_tokens,
    ngramize_vectors,
    pool_vectors,
)


@dataclass(frozen=True)
class SegmentScore:
    """Score of one (source, hypothesis) pair, tagged rather than dropped."""

    segment_id: Optional[str]
    system_id: Optional[str]
    similarity: Optional[float]
    base_similarity: Optional[float]
    lm_score: Optional[float]
    lm_weight: float
    status: str  # "ok" | "unscorable"
    reason: Optional[str] = None

    @property
    def scorable(self) -> bool:
        return self.status == "ok"


def _unscorable(system_id, segment_id, lm_weight, reason) -> SegmentScore:
    return SegmentScore(
        segment_id=segment_id,
        system_id=system_id,
        similarity=None,
        base_similarity=None,
        lm_score=None,
        lm_weight=lm_weight,
        status="unscorable",
        reason=reason,
    )


class _FusedScorer(BaseEstimator):
    """Shared LM-fusion plumbing for the two metric families."""

    def _validate(self):
        if self.src_space.dimension != self.tgt_space.dimension:
            raise ValueError(
                f"space dimensions differ: {self.src_space.dimension} vs "
                f"{self.tgt_space.dimension}"
            )
        if self.lm_weight < 0:
            raise ValueError(f"lm_weight must be >= 0, got {self.lm_weight}")
        if self.lm is not None and self.lm_scores is not None:
            raise ValueError("pass either an internal lm or external lm_scores, not both")

    def _lm_value(self, y_tokens, segment_id) -> Optional[float]:
        if self.lm_scores is not None:
            if segment_id not in self.lm_scores:
                raise ValueError(f"no external LM score for segment {segment_id!r}")
            return float(self.lm_scores[segment_id])
        if self.lm is not None:
            return self.lm.score_sentence(y_tokens).avg_log_prob
        return None

    def _finish(self, base: float, y_tokens, system_id, segment_id) -> SegmentScore:
        lm_value = self._lm_value(y_tokens, segment_id)
        if lm_value is None:
            similarity = base
        else:
            similarity = base + self.lm_weight * lm_value
        return SegmentScore(
            segment_id=segment_id,
            system_id=system_id,
            similarity=similarity,
            base_similarity=base,
            lm_score=lm_value,
            lm_weight=self.lm_weight,
            status="ok",
        )


class MoverScorer(_FusedScorer):
    """Token-level metric: negated n-gram Word Mover's Distance.

    Re-mapping is applied to token embeddings before n-gram pooling by
    default; set ``remap_after_pooling`` to re-map the pooled gram
    embeddings instead (the two differ for the scale-sensitive UMD step).

    Parameters
    ----------
    src_space, tgt_space : EmbeddingSpace
    ngram_order : 1 or 2
    pipeline : fitted RemapPipeline, optional
    lm : trained NgramLanguageModel, optional
    lm_scores : dict segment_id -> float, optional (external LM)
    lm_weight : nonnegative fusion coefficient, 0.1 by default
    """

    def __init__(
        self,
        src_space: EmbeddingSpace,
        tgt_space: EmbeddingSpace,
        ngram_order: int = 1,
        pipeline=None,
        lm=None,
        lm_scores: Optional[dict] = None,
        lm_weight: float = 0.1,
        remap_after_pooling: bool = False,
    ):
        self.src_space = src_space
        self.tgt_space = tgt_space
        self.ngram_order = ngram_order
        self.pipeline = pipeline
        self.lm = lm
        self.lm_scores = lm_scores
        self.lm_weight = lm_weight
        self.remap_after_pooling = remap_after_pooling

    def _sequence(self, tokens, space, source_side: bool) -> NgramSequence:
        kept, vectors, idfs = embed_tokens(tokens, space)
        if self.pipeline is not None and not self.remap_after_pooling and vectors.shape[0]:
            vectors = (
                self.pipeline.transform(vectors)
                if source_side
                else self.pipeline.transform_target(vectors)
            )
        seq = ngramize_vectors(kept, vectors, idfs, self.ngram_order)
        if self.pipeline is not None and self.remap_after_pooling and not seq.is_empty:
            mapped = (
                self.pipeline.transform(seq.embeddings)
                if source_side
                else self.pipeline.transform_target(seq.embeddings)
            )
            seq = replace(seq, embeddings=mapped)
        return seq

    def score(
        self,
        x_tokens: Sequence[str],
        y_tokens: Sequence[str],
        system_id: Optional[str] = None,
        segment_id: Optional[str] = None,
    ) -> SegmentScore:
        self._validate()
        if self.ngram_order not in (1, 2):
            raise ValueError(f"ngram_order must be 1 or 2, got {self.ngram_order}")
        a = self._sequence(x_tokens, self.src_space, source_side=True)
        b = self._sequence(y_tokens, self.tgt_space, source_side=False)
        if a.is_empty or b.is_empty:
            side = "source" if a.is_empty else "hypothesis"
            return _unscorable(
                system_id,
                segment_id,
                self.lm_weight,
                f"{side} yields no n-grams of order {self.ngram_order}",
            )
        base = -wmd(a, b)
        return self._finish(base, y_tokens, system_id, segment_id)


class CosineScorer(_FusedScorer):
    """Sentence-level metric: cosine similarity of sentence embeddings.

    Sentence vectors are IDF-weighted pools by default; with
    ``sentence_source="external"`` the caller supplies precomputed vectors
    (e.g. from a multilingual sentence encoder dump).
    """

    def __init__(
        self,
        src_space: EmbeddingSpace,
        tgt_space: EmbeddingSpace,
        pipeline=None,
        lm=None,
        lm_scores: Optional[dict] = None,
        lm_weight: float = 0.1,
        sentence_source: str = "pooled",
    ):
        self.src_space = src_space
        self.tgt_space = tgt_space
        self.pipeline = pipeline
        self.lm = lm
        self.lm_scores = lm_scores
        self.lm_weight = lm_weight
        self.sentence_source = sentence_source

    def _sentence_vector(self, tokens, space, external_vector):
        if self.sentence_source == "external":
            if external_vector is None:
                raise ValueError("sentence_source='external' requires a supplied vector")
            return np.asarray(external_vector, dtype=np.float64), False
        embedding = pool_vectors(*embed_tokens(tokens, space)[1:])
        return embedding.vector, embedding.degenerate

    def score(
        self,
        x_tokens: Sequence[str],
        y_tokens: Sequence[str],
        system_id: Optional[str] = None,
        segment_id: Optional[str] = None,
        x_vector=None,
        y_vector=None,
    ) -> SegmentScore:
        self._validate()
        if self.sentence_source not in ("pooled", "external"):
            raise ValueError(f"unknown sentence_source {self.sentence_source!r}")
        ex, x_degenerate = self._sentence_vector(x_tokens, self.src_space, x_vector)
        ey, y_degenerate = self._sentence_vector(y_tokens, self.tgt_space, y_vector)
        if x_degenerate or y_degenerate:
            side = "source" if x_degenerate else "hypothesis"
            return _unscorable(
                system_id, segment_id, self.lm_weight, f"{side} embedding is degenerate"
            )
        if self.pipeline is not None:
            ex = self.pipeline.transform(ex)
            ey = self.pipeline.transform_target(ey)
        nx, ny = np.linalg.norm(ex), np.linalg.norm(ey)
        if nx == 0.0 or ny == 0.0:
            side = "source" if nx == 0.0 else "hypothesis"
            return _unscorable(
                system_id, segment_id, self.lm_weight, f"{side} embedding has zero norm"
            )
        base = float(ex @ ey / (nx * ny))
        return self._finish(base, y_tokens, system_id, segment_id)


def score_batch(
    records,
    scorer,
    workers: int = 1,
    external_source_vectors: Optional[dict] = None,
    external_target_vectors: Optional[dict] = None,
) -> list[SegmentScore]:
    """Score evaluation records in order.

    Unscorable segments come back tagged, never dropped. Output is
    identical for any worker count: jobs are mapped in input order.
    """

    def one(record) -> SegmentScore:
        kwargs = {}
        if getattr(scorer, "sentence_source", "pooled") == "external":
            if external_source_vectors is None or external_target_vectors is None:
                raise ValueError("external sentence vectors required for this scorer")
            sid = record.segment_id
            if sid not in external_source_vectors:
                raise ValueError(f"no external source vector for segment {sid!r}")
            if sid not in external_target_vectors:
                raise ValueError(f"no external target vector for segment {sid!r}")
            kwargs["x_vector"] = external_source_vectors[sid]
            kwargs["y_vector"] = external_target_vectors[sid]
        return scorer.score(
            record.source,
            record.hypothesis,
            system_id=record.system_id,
            segment_id=record.segment_id,
            **kwargs,
        )

    records = list(records)
    if workers <= 1 or len(records) <= 1:
        return [one(r) for r in records]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, records))
