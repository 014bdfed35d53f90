"""Target-side n-gram language model with interpolated absolute discounting.

Supplies the per-sentence fluency score fused into the similarity metrics;
externally computed scores (e.g. from a neural LM) can be ingested from a
TSV file instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .exceptions import FormatError

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

LM_FORMAT_TAG = "# refless-lm v1"


@dataclass(frozen=True)
class FluencyScore:
    """Per-token average natural-log probability of a sentence (EOS included)."""

    avg_log_prob: float
    token_count: int


class NgramLanguageModel(BaseEstimator):
    """Interpolated absolute-discounting n-gram model.

    p(w | h) = max(c(h,w) - D, 0)/c(h) + D * N1+(h)/c(h) * p(w | h')

    recursing from the full history down to a uniform 1/(V+1) base (V
    observed types plus one unknown-token slot). Every conditional
    distribution over vocab + UNK sums to one, so all-OOV sentences still
    receive finite scores.
    """

    def __init__(self, order: int = 3, discount: float = 0.75):
        self.order = order
        self.discount = discount

    def fit(self, corpus: Sequence[Sequence[str]]):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must be in (0, 1), got {self.discount}")
        if len(corpus) == 0:
            raise ValueError("corpus is empty")
        top: dict[tuple[str, ...], dict[str, int]] = {}
        for sentence in corpus:
            padded = [BOS] * (self.order - 1) + list(sentence) + [EOS]
            for t in range(self.order - 1, len(padded)):
                history = tuple(padded[t - self.order + 1 : t])
                table = top.setdefault(history, {})
                word = padded[t]
                table[word] = table.get(word, 0) + 1
        self._install_counts(top)
        return self

    def _install_counts(self, top: dict[tuple[str, ...], dict[str, int]]) -> None:
        # lower-order tables are exact suffix sums of the top-order table
        counts: list[dict[tuple[str, ...], dict[str, int]]] = [
            {} for _ in range(self.order)
        ]
        counts[self.order - 1] = top
        for k in range(self.order - 2, -1, -1):
            for history, table in counts[k + 1].items():
                suffix = history[len(history) - k :]
                target = counts[k].setdefault(suffix, {})
                for word, c in table.items():
                    target[word] = target.get(word, 0) + c
        self.counts_ = counts
        self.totals_ = [
            {h: sum(t.values()) for h, t in level.items()} for level in counts
        ]
        self.vocab_ = set(counts[0][()].keys())
        self.vocab_size_ = len(self.vocab_)

    def _check_fitted(self):
        if not hasattr(self, "counts_"):
            raise NotFittedError("NgramLanguageModel is not fitted")

    def conditional_prob(self, word: str, history: Sequence[str] = ()) -> float:
        """p(word | history), truncating the history to the model order."""
        self._check_fitted()
        word = word if word in self.vocab_ or word in (EOS, UNK) else UNK
        h = tuple(history)[max(0, len(history) - self.order + 1) :]
        h = tuple(t if t in self.vocab_ or t in (BOS, EOS) else UNK for t in h)
        return self._prob(word, h)

    def _prob(self, word: str, history: tuple[str, ...]) -> float:
        k = len(history)
        if k == 0:
            table = self.counts_[0][()]
            c_h = self.totals_[0][()]
            base = 1.0 / (self.vocab_size_ + 1)
            lam = self.discount * len(table) / c_h
            return max(table.get(word, 0) - self.discount, 0.0) / c_h + lam * base
        table = self.counts_[k].get(history)
        if table is None:
            return self._prob(word, history[1:])
        c_h = self.totals_[k][history]
        lam = self.discount * len(table) / c_h
        return (
            max(table.get(word, 0) - self.discount, 0.0) / c_h
            + lam * self._prob(word, history[1:])
        )

    def score_sentence(self, tokens: Sequence[str]) -> FluencyScore:
        """Average log probability per token, EOS transition included."""
        self._check_fitted()
        mapped = [t if t in self.vocab_ else UNK for t in tokens]
        padded = [BOS] * (self.order - 1) + mapped + [EOS]
        total = 0.0
        for t in range(self.order - 1, len(padded)):
            history = tuple(padded[t - self.order + 1 : t])
            total += math.log(self._prob(padded[t], history))
        return FluencyScore(
            avg_log_prob=total / (len(tokens) + 1), token_count=len(tokens)
        )

    def perplexity(self, corpus: Iterable[Sequence[str]]) -> float:
        """Corpus perplexity, exp of the negative mean token log probability."""
        self._check_fitted()
        total, n_tokens = 0.0, 0
        for sentence in corpus:
            score = self.score_sentence(sentence)
            total += score.avg_log_prob * (score.token_count + 1)
            n_tokens += score.token_count + 1
        if n_tokens == 0:
            raise ValueError("perplexity requires at least one sentence")
        return math.exp(-total / n_tokens)


def save_lm(model: NgramLanguageModel, path) -> None:
    """Serialize a trained model: parameters plus exact top-order counts."""
    model._check_fitted()
    top = model.counts_[model.order - 1]
    entries = []
    for history, table in top.items():
        for word, count in table.items():
            entries.append((" ".join(history), word, count))
    entries.sort()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(LM_FORMAT_TAG + "\n")
        fh.write(f"order {model.order}\n")
        fh.write(f"discount {model.discount!r}\n")
        fh.write(f"ngrams {len(entries)}\n")
        for history, word, count in entries:
            fh.write(f"{history}\t{word}\t{count}\n")


def load_lm(path) -> NgramLanguageModel:
    """Load a model written by :func:`save_lm`."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0] != LM_FORMAT_TAG:
        raise FormatError(f"{path}: missing language-model format tag")
    try:
        order = int(lines[1].removeprefix("order "))
        discount = float(lines[2].removeprefix("discount "))
        n_entries = int(lines[3].removeprefix("ngrams "))
    except (IndexError, ValueError):
        raise FormatError(f"{path}: malformed model header") from None
    top: dict[tuple[str, ...], dict[str, int]] = {}
    body = lines[4:]
    if len(body) != n_entries:
        raise FormatError(f"{path}: expected {n_entries} n-gram lines, found {len(body)}")
    for offset, line in enumerate(body):
        fields = line.split("\t")
        if len(fields) != 3:
            raise FormatError(f"{path}:{offset + 5}: expected 3 tab-separated fields")
        history = tuple(fields[0].split(" ")) if fields[0] else ()
        try:
            count = int(fields[2])
        except ValueError:
            raise FormatError(f"{path}:{offset + 5}: non-integer count") from None
        top.setdefault(history, {})[fields[1]] = count
    model = NgramLanguageModel(order=order, discount=discount)
    model._install_counts(top)
    return model


def load_external_lm_scores(path) -> dict[str, float]:
    """Parse a per-segment score file: ``"<segment_id>\\t<float>"`` lines."""
    scores: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 tab-separated fields")
            segment_id, payload = fields
            try:
                value = float(payload)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric score") from None
            if not math.isfinite(value):
                raise FormatError(f"{path}:{lineno}: non-finite score")
            if segment_id in scores:
                raise FormatError(f"{path}:{lineno}: duplicate segment id {segment_id!r}")
            scores[segment_id] = value
    return scores
