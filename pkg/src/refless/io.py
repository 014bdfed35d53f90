"""Readers and writers for datasets, lexicons, score files and reports.

One flat TSV schema carries evaluation data; all writers are deterministic
(fixed column order, floats at 6 significant digits in reports and score
files, full precision where a format must round-trip). Every format starts
with a leading-comment version tag.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .evaluation import CorrelationReport, SweepTable, W2WReport
from .exceptions import FormatError
from .metrics import SegmentScore
from .remap import BilingualLexicon
from .vectors import tokenize

DATASET_FORMAT_TAG = "# refless-dataset v1"
SCORES_FORMAT_TAG = "# refless-scores v1"
REPORT_FORMAT_TAG = "# refless-report v1"
W2W_FORMAT_TAG = "# refless-w2w v1"
SWEEP_FORMAT_TAG = "# refless-sweep v1"

_MANDATORY_COLUMNS = ("system_id", "segment_id", "source", "hypothesis")
_OPTIONAL_COLUMNS = ("reference", "w2w", "human_score", "lang_pair")


def fmt6(x: float) -> str:
    """Render a float at 6 significant digits, trailing zeros kept."""
    return f"{float(x):#.6g}"


@dataclass(frozen=True)
class EvaluationRecord:
    """One (system, segment) evaluation row, tokenized."""

    system_id: str
    segment_id: str
    source: tuple[str, ...]
    hypothesis: tuple[str, ...]
    reference: Optional[tuple[str, ...]] = None
    w2w_variant: Optional[tuple[str, ...]] = None
    human_score: Optional[float] = None
    language_pair: Optional[str] = None


@dataclass(frozen=True)
class DatasetTable:
    records: tuple[EvaluationRecord, ...]
    language_pair: Optional[str]
    path: Optional[str] = None

    def __len__(self) -> int:
        return len(self.records)


def _data_lines(path):
    """Yield (lineno, line) pairs, skipping leading comment lines."""
    with open(path, encoding="utf-8") as fh:
        in_header = True
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if in_header and line.startswith("#"):
                continue
            in_header = False
            yield lineno, line


def read_dataset(path, lowercase: bool = True, language_pair: Optional[str] = None) -> DatasetTable:
    """Parse a dataset TSV into typed, tokenized records.

    Mandatory columns: system_id, segment_id, source, hypothesis. Optional:
    reference, w2w, human_score, lang_pair. Empty optional cells become
    absent fields; malformed rows are rejected, never coerced.
    """
    lines = _data_lines(path)
    try:
        _, header_line = next(lines)
    except StopIteration:
        raise FormatError(f"{path}: empty dataset file") from None
    header = header_line.split("\t")
    for column in _MANDATORY_COLUMNS:
        if column not in header:
            raise FormatError(f"{path}: missing mandatory column {column!r}")
    for column in header:
        if column not in _MANDATORY_COLUMNS + _OPTIONAL_COLUMNS:
            raise FormatError(f"{path}: unknown column {column!r}")
    index = {name: header.index(name) for name in header}

    records = []
    seen_keys = set()
    pair_tag = language_pair
    for lineno, line in lines:
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != len(header):
            raise FormatError(
                f"{path}:{lineno}: expected {len(header)} cells, got {len(cells)}"
            )

        def cell(name: str) -> Optional[str]:
            if name not in index:
                return None
            value = cells[index[name]]
            return value if value != "" else None

        system_id, segment_id = cell("system_id"), cell("segment_id")
        source, hypothesis = cell("source"), cell("hypothesis")
        if None in (system_id, segment_id, source, hypothesis):
            raise FormatError(f"{path}:{lineno}: empty mandatory cell")
        key = (system_id, segment_id)
        if key in seen_keys:
            raise FormatError(f"{path}:{lineno}: duplicate (system_id, segment_id) key {key!r}")
        seen_keys.add(key)

        human_score = None
        raw_score = cell("human_score")
        if raw_score is not None:
            try:
                human_score = float(raw_score)
            except ValueError:
                raise FormatError(f"{path}:{lineno}: non-numeric human_score {raw_score!r}") from None
            if not math.isfinite(human_score):
                raise FormatError(f"{path}:{lineno}: non-finite human_score")

        row_pair = cell("lang_pair")
        if row_pair is not None:
            if pair_tag is None:
                pair_tag = row_pair
            elif row_pair != pair_tag:
                raise FormatError(
                    f"{path}:{lineno}: language pair {row_pair!r} differs from {pair_tag!r}"
                )

        def toks(text: Optional[str]):
            return tuple(tokenize(text, lowercase)) if text is not None else None

        records.append(
            EvaluationRecord(
                system_id=system_id,
                segment_id=segment_id,
                source=toks(source),
                hypothesis=toks(hypothesis),
                reference=toks(cell("reference")),
                w2w_variant=toks(cell("w2w")),
                human_score=human_score,
                language_pair=pair_tag,
            )
        )
    return DatasetTable(records=tuple(records), language_pair=pair_tag, path=str(path))


def write_dataset(table: DatasetTable, path) -> None:
    """Write a dataset back to the flat TSV schema (read/write round-trips)."""
    records = table.records
    columns = list(_MANDATORY_COLUMNS)
    if any(r.reference is not None for r in records):
        columns.append("reference")
    if any(r.w2w_variant is not None for r in records):
        columns.append("w2w")
    if any(r.human_score is not None for r in records):
        columns.append("human_score")
    if table.language_pair is not None:
        columns.append("lang_pair")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(DATASET_FORMAT_TAG + "\n")
        fh.write("\t".join(columns) + "\n")
        for r in records:
            cells = [r.system_id, r.segment_id, " ".join(r.source), " ".join(r.hypothesis)]
            if "reference" in columns:
                cells.append(" ".join(r.reference) if r.reference is not None else "")
            if "w2w" in columns:
                cells.append(" ".join(r.w2w_variant) if r.w2w_variant is not None else "")
            if "human_score" in columns:
                cells.append(repr(r.human_score) if r.human_score is not None else "")
            if "lang_pair" in columns:
                cells.append(table.language_pair)
            fh.write("\t".join(cells) + "\n")


@dataclass(frozen=True)
class LexiconFile:
    path: str
    lexicon: BilingualLexicon
    skipped_lines: int


def read_lexicon_file(path, kind: str = "word") -> LexiconFile:
    """Parse a two-column TSV lexicon; '#' comments and blank lines skip."""
    pairs = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                skipped += 1
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise FormatError(
                    f"{path}:{lineno}: expected 2 non-empty tab-separated fields"
                )
            pairs.append((fields[0], fields[1]))
    return LexiconFile(
        path=str(path),
        lexicon=BilingualLexicon(pairs=tuple(pairs), kind=kind),
        skipped_lines=skipped,
    )


def read_lexicon(path, kind: str = "word") -> BilingualLexicon:
    return read_lexicon_file(path, kind).lexicon


_SCORE_COLUMNS = ("system_id", "segment_id", "similarity", "base", "lm", "status")


def write_scores(scores: Sequence[SegmentScore], path, format: str = "tsv") -> None:
    """Write per-segment scores; unscorable rows keep their status tag."""
    if format == "structured":
        payload = [
            {
                "system_id": s.system_id,
                "segment_id": s.segment_id,
                "similarity": _round6(s.similarity),
                "base": _round6(s.base_similarity),
                "lm": _round6(s.lm_score),
                "status": s.status,
                "reason": s.reason,
            }
            for s in scores
        ]
        _write_json(payload, path)
        return
    if format != "tsv":
        raise ValueError(f"unknown format {format!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(SCORES_FORMAT_TAG + "\n")
        fh.write("\t".join(_SCORE_COLUMNS) + "\n")
        for s in scores:
            status = s.status if s.scorable else f"unscorable: {s.reason}"
            cells = [
                s.system_id or "",
                s.segment_id or "",
                fmt6(s.similarity) if s.similarity is not None else "",
                fmt6(s.base_similarity) if s.base_similarity is not None else "",
                fmt6(s.lm_score) if s.lm_score is not None else "",
                status,
            ]
            fh.write("\t".join(cells) + "\n")


def read_scores(path) -> list[SegmentScore]:
    """Read a score TSV back into :class:`SegmentScore` entries."""
    lines = _data_lines(path)
    try:
        _, header_line = next(lines)
    except StopIteration:
        raise FormatError(f"{path}: empty score file") from None
    if tuple(header_line.split("\t")) != _SCORE_COLUMNS:
        raise FormatError(f"{path}: unexpected score header {header_line!r}")
    out = []
    for lineno, line in lines:
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != len(_SCORE_COLUMNS):
            raise FormatError(f"{path}:{lineno}: expected {len(_SCORE_COLUMNS)} cells")
        system_id, segment_id, sim, base, lm, status = cells
        if status.startswith("unscorable"):
            reason = status.partition(":")[2].strip() or None
            out.append(
                SegmentScore(segment_id, system_id, None, None, None, 0.0, "unscorable", reason)
            )
            continue
        if status != "ok":
            raise FormatError(f"{path}:{lineno}: unknown status {status!r}")
        try:
            similarity = float(sim)
            base_similarity = float(base)
            lm_score = float(lm) if lm != "" else None
        except ValueError:
            raise FormatError(f"{path}:{lineno}: non-numeric score cell") from None
        weight = 0.0
        if lm_score is not None and lm_score != 0.0:
            weight = (similarity - base_similarity) / lm_score
        out.append(
            SegmentScore(segment_id, system_id, similarity, base_similarity, lm_score, weight, "ok")
        )
    return out


def _round6(x: Optional[float]) -> Optional[float]:
    return float(fmt6(x)) if x is not None else None


def _write_json(payload, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _correlation_rows(report: CorrelationReport):
    rows = [
        (report.level, report.statistic, r.language_pair, r.n, r.value)
        for r in report.rows
    ]
    rows.append(
        (report.level, report.statistic, "average", sum(r.n for r in report.rows), report.average)
    )
    return rows


def write_report(report, path, format: str = "tsv") -> None:
    """Write a correlation report, W2W report or sweep table.

    Accepts a single report or a list of :class:`CorrelationReport` (e.g.
    segment- and system-level variants of the same run).
    """
    if format not in ("tsv", "structured"):
        raise ValueError(f"unknown format {format!r}")
    if isinstance(report, CorrelationReport):
        report = [report]
    if isinstance(report, (list, tuple)) and all(
        isinstance(r, CorrelationReport) for r in report
    ):
        if format == "structured":
            payload = [
                {
                    "level": r.level,
                    "statistic": r.statistic,
                    "excluded": r.n_excluded,
                    "pairs": [
                        {"lang_pair": row.language_pair, "n": row.n, "value": _round6(row.value)}
                        for row in r.rows
                    ],
                    "average": _round6(r.average),
                }
                for r in report
            ]
            _write_json(payload, path)
            return
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(REPORT_FORMAT_TAG + "\n")
            for r in report:
                fh.write(f"# {r.level} level: {r.n_excluded} excluded\n")
            fh.write("level\tstatistic\tlang_pair\tn\tvalue\n")
            for r in report:
                for level, statistic, pair, n, value in _correlation_rows(r):
                    fh.write(f"{level}\t{statistic}\t{pair}\t{n}\t{fmt6(value)}\n")
        return
    if isinstance(report, W2WReport):
        if format == "structured":
            payload = [
                {
                    "lang_pair": pair,
                    "n": res.n_used,
                    "excluded": res.n_excluded,
                    "w2w_pct": float(f"{100.0 * res.value:.1f}"),
                }
                for pair, res in report.rows
            ]
            _write_json(payload, path)
            return
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(W2W_FORMAT_TAG + "\n")
            fh.write("lang_pair\tn\texcluded\tw2w_pct\n")
            for pair, res in report.rows:
                fh.write(f"{pair}\t{res.n_used}\t{res.n_excluded}\t{100.0 * res.value:.1f}\n")
        return
    if isinstance(report, SweepTable):
        if format == "structured":
            payload = {
                "statistic": report.statistic,
                "level": report.level,
                "seed": report.seed,
                "rows": [{"size": s, "value": _round6(v)} for s, v in report.rows],
            }
            _write_json(payload, path)
            return
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(SWEEP_FORMAT_TAG + "\n")
            fh.write(f"# statistic {report.statistic} level {report.level} seed {report.seed}\n")
            fh.write("size\tvalue\n")
            for size, value in report.rows:
                fh.write(f"{size}\t{fmt6(value)}\n")
        return
    raise TypeError(f"cannot write report of type {type(report).__name__}")
