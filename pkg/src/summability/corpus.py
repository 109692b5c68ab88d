"""Documents, score tables, and line-delimited record I/O.

All files are one JSON object per line. A corpus record carries ``id`` and
``text`` plus optional ``reference_summary`` and ``set_id``. A scores file
starts with a header record declaring its ``scale`` ("unit" or "unbounded")
followed by ``{doc_id, system_id, score}`` records. Prediction files are bare
``{doc_id, score}`` records.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import DataFormatError, MissingDocumentError

SCALE_UNIT = "unit"
SCALE_UNBOUNDED = "unbounded"
SCALES = (SCALE_UNIT, SCALE_UNBOUNDED)


@dataclass(frozen=True)
class Document:
    """One source document; ``reference_summary`` and ``set_id`` are optional."""

    id: str
    text: str
    reference_summary: str | None = None
    set_id: str | None = None

    def __post_init__(self):
        if not self.id:
            raise DataFormatError("document id must be non-empty")
        if not self.text or not self.text.strip():
            raise DataFormatError(f"document {self.id!r} has empty text")


class Corpus:
    """An ordered, id-unique collection of documents."""

    def __init__(self, documents: Iterable[Document]):
        self._docs: list[Document] = []
        self._by_id: dict[str, Document] = {}
        for doc in documents:
            if doc.id in self._by_id:
                raise DataFormatError(f"duplicate document id {doc.id!r}")
            self._docs.append(doc)
            self._by_id[doc.id] = doc

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self):
        return iter(self._docs)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id

    def __getitem__(self, doc_id: str) -> Document:
        try:
            return self._by_id[doc_id]
        except KeyError:
            raise MissingDocumentError(f"unknown document id {doc_id!r}") from None

    def ids(self) -> list[str]:
        return [d.id for d in self._docs]


class SystemScoreTable:
    """Per-document scores from multiple systems, on a declared scale."""

    def __init__(self, entries: Iterable[tuple[str, str, float]], scale: str = SCALE_UNIT):
        if scale not in SCALES:
            raise DataFormatError(f"unknown score scale {scale!r}; expected one of {SCALES}")
        self.scale = scale
        self._by_doc: dict[str, dict[str, float]] = {}
        self._by_system: dict[str, dict[str, float]] = {}
        for doc_id, system_id, score in entries:
            _validate_score(score, scale, doc_id, system_id)
            row = self._by_doc.setdefault(doc_id, {})
            if system_id in row:
                raise DataFormatError(
                    f"duplicate score for document {doc_id!r}, system {system_id!r}"
                )
            row[system_id] = float(score)
            self._by_system.setdefault(system_id, {})[doc_id] = float(score)

    def doc_ids(self) -> list[str]:
        return sorted(self._by_doc)

    def systems(self) -> list[str]:
        return sorted(self._by_system)

    def scores_for_doc(self, doc_id: str) -> dict[str, float]:
        try:
            return dict(self._by_doc[doc_id])
        except KeyError:
            raise MissingDocumentError(f"no scores for document {doc_id!r}") from None

    def scores_for_system(self, system_id: str) -> dict[str, float]:
        try:
            return dict(self._by_system[system_id])
        except KeyError:
            raise MissingDocumentError(f"no scores for system {system_id!r}") from None

    def __len__(self) -> int:
        return sum(len(row) for row in self._by_doc.values())


@dataclass(frozen=True)
class PredictionTable:
    """Predicted (or otherwise derived) per-document scores."""

    entries: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for doc_id, score in self.entries.items():
            if not isinstance(score, (int, float)) or not math.isfinite(score):
                raise DataFormatError(f"non-finite score for document {doc_id!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, doc_id: str) -> float:
        try:
            return self.entries[doc_id]
        except KeyError:
            raise MissingDocumentError(f"no prediction for document {doc_id!r}") from None

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.entries

    def ids(self) -> list[str]:
        return sorted(self.entries)


@dataclass(frozen=True)
class AcuCount:
    """Count of reference content units matched by one summary."""

    matched: int
    total: int

    def __post_init__(self):
        if self.total < 1:
            raise DataFormatError("unit total must be >= 1")
        if not 0 <= self.matched <= self.total:
            raise DataFormatError("matched units must lie in [0, total]")


def acu_score(count: AcuCount) -> float:
    """Fraction of reference content units the summary covered."""
    return count.matched / count.total


def gold_doc_score(table: SystemScoreTable, doc_id: str) -> float:
    """Mean score over every system that scored the document."""
    row = table.scores_for_doc(doc_id)
    return sum(row[s] for s in sorted(row)) / len(row)


def gold_scores(table: SystemScoreTable) -> PredictionTable:
    """Per-document mean over available systems, as a prediction table."""
    return PredictionTable({d: gold_doc_score(table, d) for d in table.doc_ids()})


def metric_doc_average(rows: Iterable[tuple[str, str, float]]) -> PredictionTable:
    """Average (doc_id, system_id, score) rows into one score per document."""
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    empty = True
    for doc_id, _system_id, score in rows:
        empty = False
        sums[doc_id] = sums.get(doc_id, 0.0) + float(score)
        counts[doc_id] = counts.get(doc_id, 0) + 1
    if empty:
        raise ValueError("metric_doc_average needs at least one row")
    return PredictionTable({d: sums[d] / counts[d] for d in sorted(sums)})


def set_score_average(
    scores: Mapping[str, float] | PredictionTable, corpus: Corpus
) -> dict[str, float]:
    """Average per-document scores within each corpus ``set_id`` group.

    Documents without a set_id are ignored; a grouped document missing from
    ``scores`` is an error.
    """
    if isinstance(scores, PredictionTable):
        scores = scores.entries
    groups: dict[str, list[float]] = {}
    for doc in corpus:
        if doc.set_id is None:
            continue
        if doc.id not in scores:
            raise MissingDocumentError(
                f"document {doc.id!r} in set {doc.set_id!r} has no score"
            )
        groups.setdefault(doc.set_id, []).append(float(scores[doc.id]))
    return {set_id: sum(vals) / len(vals) for set_id, vals in sorted(groups.items())}


# ---------------------------------------------------------------------------
# line-delimited record I/O
# ---------------------------------------------------------------------------


def _read_records(path: str | os.PathLike) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"malformed record: {exc}", line=lineno) from None
            if not isinstance(record, dict):
                raise DataFormatError("record is not an object", line=lineno)
            yield lineno, record


def _dump_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True)


def load_corpus(path: str | os.PathLike) -> Corpus:
    docs = []
    seen: dict[str, int] = {}
    for lineno, rec in _read_records(path):
        try:
            doc_id = rec["id"]
            text = rec["text"]
        except KeyError as exc:
            raise DataFormatError(f"missing field {exc}", line=lineno) from None
        if doc_id in seen:
            raise DataFormatError(f"duplicate id {doc_id!r}", line=lineno)
        seen[doc_id] = lineno
        try:
            docs.append(
                Document(
                    id=doc_id,
                    text=text,
                    reference_summary=rec.get("reference_summary"),
                    set_id=rec.get("set_id"),
                )
            )
        except DataFormatError as exc:
            raise DataFormatError(str(exc), line=lineno) from None
    return Corpus(docs)


def save_corpus(corpus: Corpus, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in corpus:
            rec = {"id": doc.id, "text": doc.text}
            if doc.reference_summary is not None:
                rec["reference_summary"] = doc.reference_summary
            if doc.set_id is not None:
                rec["set_id"] = doc.set_id
            fh.write(_dump_record(rec) + "\n")


def load_scores(path: str | os.PathLike) -> SystemScoreTable:
    entries: list[tuple[str, str, float]] = []
    scale: str | None = None
    for lineno, rec in _read_records(path):
        if scale is None:
            if "scale" not in rec:
                raise DataFormatError(
                    "scores file must start with a header record declaring 'scale'",
                    line=lineno,
                )
            scale = rec["scale"]
            if scale not in SCALES:
                raise DataFormatError(f"unknown scale {scale!r}", line=lineno)
            continue
        try:
            entry = (rec["doc_id"], rec["system_id"], rec["score"])
        except KeyError as exc:
            raise DataFormatError(f"missing field {exc}", line=lineno) from None
        if not isinstance(entry[2], (int, float)):
            raise DataFormatError("score must be a number", line=lineno)
        entries.append(entry)
    if scale is None:
        raise DataFormatError("empty scores file (no header record)")
    try:
        return SystemScoreTable(entries, scale=scale)
    except DataFormatError:
        raise


def save_scores(table: SystemScoreTable, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_record({"scale": table.scale}) + "\n")
        for doc_id in table.doc_ids():
            row = table.scores_for_doc(doc_id)
            for system_id in sorted(row):
                fh.write(
                    _dump_record(
                        {"doc_id": doc_id, "system_id": system_id, "score": row[system_id]}
                    )
                    + "\n"
                )


def load_predictions(path: str | os.PathLike) -> PredictionTable:
    entries: dict[str, float] = {}
    for lineno, rec in _read_records(path):
        try:
            doc_id, score = rec["doc_id"], rec["score"]
        except KeyError as exc:
            raise DataFormatError(f"missing field {exc}", line=lineno) from None
        if doc_id in entries:
            raise DataFormatError(f"duplicate doc_id {doc_id!r}", line=lineno)
        if not isinstance(score, (int, float)) or not math.isfinite(score):
            raise DataFormatError("score must be a finite number", line=lineno)
        entries[doc_id] = float(score)
    return PredictionTable(entries)


def save_predictions(table: PredictionTable, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in table.ids():
            fh.write(_dump_record({"doc_id": doc_id, "score": table[doc_id]}) + "\n")


def _validate_score(score, scale: str, doc_id: str, system_id: str) -> None:
    if not isinstance(score, (int, float)) or not math.isfinite(score):
        raise DataFormatError(
            f"non-finite score for document {doc_id!r}, system {system_id!r}"
        )
    if scale == SCALE_UNIT and not 0.0 <= score <= 1.0:
        raise DataFormatError(
            f"score {score} for document {doc_id!r}, system {system_id!r} "
            "outside [0, 1] on the unit scale"
        )
