"""Correlation with human judgments and translationese diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from ._validation import check_same_length
from .exceptions import UnscorableError
from .metrics import SegmentScore, score_batch
from .remap import BilingualLexicon, fit_pipeline


def pearson(a, b) -> float:
    """Sample Pearson correlation of two equal-length vectors."""
    a, b = check_same_length(a, b)
    if a.shape[0] < 2:
        raise ValueError("pearson requires at least 2 points")
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va == 0.0 or vb == 0.0:
        raise ValueError("pearson is undefined for zero-variance input")
    return float(da @ db) / math.sqrt(va * vb)


def kendall(a, b) -> float:
    """Kendall tau-b (tie-corrected) of two equal-length vectors."""
    a, b = check_same_length(a, b)
    if a.shape[0] < 2:
        raise ValueError("kendall requires at least 2 points")
    if np.all(a == a[0]) or np.all(b == b[0]):
        raise ValueError("kendall is undefined for all-tied input")
    tau = stats.kendalltau(a, b, variant="b").statistic
    return float(tau)

_STATISTICS: dict[str, Callable] = {"pearson": pearson, "kendall": kendall}


@dataclass(frozen=True)
class PairCorrelation:
    language_pair: str
    n: int
    value: float


@dataclass(frozen=True)
class CorrelationReport:
    """Per-language-pair correlations between metric scores and human scores."""

    level: str  # "segment" | "system"
    statistic: str  # "pearson" | "kendall"
    rows: tuple[PairCorrelation, ...]
    n_excluded: int = 0

    @property
    def average(self) -> float:
        return float(np.mean([r.value for r in self.rows]))


def _statistic_fn(statistic: str) -> Callable:
    try:
        return _STATISTICS[statistic]
    except KeyError:
        raise ValueError(
            f"unknown statistic {statistic!r}; expected one of {sorted(_STATISTICS)}"
        ) from None


def _pair_of(record) -> str:
    return getattr(record, "language_pair", None) or "all"


def _join(scores: Sequence[SegmentScore], records):
    by_key = {(s.system_id, s.segment_id): s for s in scores}
    joined, excluded = [], 0
    for record in records:
        if record.human_score is None:
            continue
        score = by_key.get((record.system_id, record.segment_id))
        if score is None or not score.scorable:
            excluded += 1
            continue
        joined.append((record, score))
    return joined, excluded


def segment_correlation(
    scores: Sequence[SegmentScore],
    records,
    statistic: str = "pearson",
) -> CorrelationReport:
    """Correlate per-segment similarities with human scores.

    Systems are pooled within each language pair; unscorable segments are
    excluded and counted in the report.
    """
    fn = _statistic_fn(statistic)
    joined, excluded = _join(scores, records)
    if len(joined) < 2:
        raise ValueError(f"need at least 2 scorable segments with human scores, got {len(joined)}")
    groups: dict[str, list[tuple[float, float]]] = {}
    for record, score in joined:
        groups.setdefault(_pair_of(record), []).append(
            (score.similarity, record.human_score)
        )
    rows = []
    for pair in sorted(groups):
        points = groups[pair]
        sims = [p[0] for p in points]
        humans = [p[1] for p in points]
        rows.append(PairCorrelation(pair, len(points), fn(sims, humans)))
    return CorrelationReport("segment", statistic, tuple(rows), excluded)


def system_correlation(
    scores: Sequence[SegmentScore],
    records,
    statistic: str = "pearson",
) -> CorrelationReport:
    """Correlate per-system mean similarities with per-system human scores.

    A system whose every segment is unscorable is excluded and counted.
    """
    fn = _statistic_fn(statistic)
    joined, _ = _join(scores, records)
    groups: dict[str, dict[str, tuple[list[float], list[float]]]] = {}
    seen_systems: dict[str, set[str]] = {}
    for record in records:
        if record.human_score is not None:
            seen_systems.setdefault(_pair_of(record), set()).add(record.system_id)
    for record, score in joined:
        pair = groups.setdefault(_pair_of(record), {})
        sims, humans = pair.setdefault(record.system_id, ([], []))
        sims.append(score.similarity)
        humans.append(record.human_score)
    rows = []
    excluded_systems = 0
    for pair in sorted(seen_systems):
        systems = groups.get(pair, {})
        excluded_systems += len(seen_systems[pair]) - len(systems)
        if len(systems) < 2:
            raise ValueError(
                f"need at least 2 systems with scorable segments for {pair!r}, "
                f"got {len(systems)}"
            )
        if len(systems) == 2:
            warnings.warn(
                f"{pair}: only 2 systems; correlation is degenerate (|value| = 1)",
                stacklevel=2,
            )
        sys_ids = sorted(systems)
        sims = [float(np.mean(systems[s][0])) for s in sys_ids]
        humans = [float(np.mean(systems[s][1])) for s in sys_ids]
        rows.append(PairCorrelation(pair, len(sys_ids), fn(sims, humans)))
    return CorrelationReport("system", statistic, tuple(rows), excluded_systems)


def _similarity(metric, x_tokens, y_tokens) -> float:
    """Similarity of a candidate under a scorer object or plain callable."""
    if hasattr(metric, "score"):
        result = metric.score(x_tokens, y_tokens)
    else:
        result = metric(x_tokens, y_tokens)
    if isinstance(result, SegmentScore):
        if not result.scorable:
            raise UnscorableError(result.reason or "candidate is unscorable")
        return result.similarity
    return float(result)


def preference_diff(metric, x_tokens, y_tilde, y_hat) -> float:
    """Score difference m(x, ỹ) − m(x, ŷ); positive means ỹ is preferred."""
    return _similarity(metric, x_tokens, y_tilde) - _similarity(metric, x_tokens, y_hat)


@dataclass(frozen=True)
class W2WResult:
    """Fraction of triples where a metric prefers the word-by-word variant."""

    value: float
    n_used: int
    n_excluded: int


def w2w_statistic(metric, triples) -> W2WResult:
    """Word-by-word preference rate over (source, literal, reference) triples.

    Counts strictly positive preference differences; ties count as
    non-preference. Unscorable triples reduce the denominator and are
    reported in the result.
    """
    n_used = 0
    n_positive = 0
    n_excluded = 0
    for x_tokens, w2w_tokens, reference_tokens in triples:
        try:
            diff = preference_diff(metric, x_tokens, w2w_tokens, reference_tokens)
        except UnscorableError:
            n_excluded += 1
            continue
        n_used += 1
        if diff > 0:
            n_positive += 1
    if n_used == 0:
        raise ValueError(f"no scorable triples ({n_excluded} excluded)")
    return W2WResult(value=n_positive / n_used, n_used=n_used, n_excluded=n_excluded)


@dataclass(frozen=True)
class W2WReport:
    """Per-language-pair W2W statistics, percentage-formatted when written."""

    rows: tuple[tuple[str, W2WResult], ...]


@dataclass(frozen=True)
class SweepTable:
    """Correlation as a function of lexicon size."""

    statistic: str
    level: str
    seed: int
    rows: tuple[tuple[int, float], ...]


def dictionary_size_sweep(
    sizes: Sequence[int],
    lexicon: BilingualLexicon,
    src_space,
    tgt_space,
    records,
    scorer,
    steps: Sequence[str] = ("clp",),
    clp_normalize: bool = False,
    statistic: str = "pearson",
    level: str = "segment",
    seed: int = 0,
) -> SweepTable:
    """Refit the re-mapping on nested lexicon subsamples and re-correlate.

    Subsamples are prefixes of one fixed-seed shuffle (kept in original
    file order), so smaller samples are subsets of larger ones and the full
    size reproduces the non-sweep result exactly.
    """
    n_pairs = len(lexicon.pairs)
    for size in sizes:
        if size <= 0:
            raise ValueError(f"lexicon sample size must be positive, got {size}")
        if size > n_pairs:
            raise ValueError(f"sample size {size} exceeds lexicon size {n_pairs}")
    if level not in ("segment", "system"):
        raise ValueError(f"unknown level {level!r}")
    _statistic_fn(statistic)
    order = np.random.default_rng(seed).permutation(n_pairs)
    rows = []
    for size in sizes:
        indices = np.sort(order[:size])
        sub = BilingualLexicon(
            pairs=tuple(lexicon.pairs[i] for i in indices), kind=lexicon.kind
        )
        pipeline = fit_pipeline(steps, sub, src_space, tgt_space, clp_normalize)
        params = scorer.get_params(deep=False)
        params["pipeline"] = pipeline
        refit = type(scorer)(**params)
        scores = score_batch(records, refit)
        if level == "segment":
            report = segment_correlation(scores, records, statistic)
        else:
            report = system_correlation(scores, records, statistic)
        rows.append((int(size), report.average))
    return SweepTable(statistic=statistic, level=level, seed=seed, rows=tuple(rows))
