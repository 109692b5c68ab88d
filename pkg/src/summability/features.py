"""Per-document features computable before any system summary exists.

The feature schema is versioned: "core-1" holds the five source-only fields,
"full-1" adds the two salient-location fields that need a reference summary.
Models persist the schema version they were fit on and refuse mismatches.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import rouge, stats, textseg
from .corpus import Corpus, Document
from .errors import DataFormatError, DegenerateInputError, SchemaMismatchError

SCHEMA_CORE = "core-1"
SCHEMA_FULL = "full-1"

_CORE_FIELDS = (
    "length_words",
    "numeral_count",
    "unique_entity_count",
    "flesch_reading_ease",
    "flesch_kincaid_grade",
)
_SALIENT_FIELDS = ("salient_loc_top5", "salient_loc_top10")

FEATURE_SCHEMAS: dict[str, tuple[str, ...]] = {
    SCHEMA_CORE: _CORE_FIELDS,
    SCHEMA_FULL: _CORE_FIELDS + _SALIENT_FIELDS,
}

SALIENCE_VARIANTS = ("mean12", "r1", "r2", "rl")


@dataclass(frozen=True)
class FeatureVector:
    doc_id: str
    length_words: int
    numeral_count: int
    unique_entity_count: int
    flesch_reading_ease: float
    flesch_kincaid_grade: float
    salient_loc_top5: float | None = None
    salient_loc_top10: float | None = None

    def get(self, field_name: str) -> float | None:
        return getattr(self, field_name)

    def to_record(self) -> dict:
        rec = {"doc_id": self.doc_id}
        for field_name in _CORE_FIELDS:
            rec[field_name] = getattr(self, field_name)
        for field_name in _SALIENT_FIELDS:
            value = getattr(self, field_name)
            if value is not None:
                rec[field_name] = value
        return rec


def flesch_reading_ease(word_count: int, sentence_count: int, syllable_count: int) -> float:
    """206.835 - 1.015 * words/sentences - 84.6 * syllables/words, unclamped."""
    _check_counts(word_count, sentence_count)
    return (
        206.835
        - 1.015 * (word_count / sentence_count)
        - 84.6 * (syllable_count / word_count)
    )


def flesch_kincaid_grade(word_count: int, sentence_count: int, syllable_count: int) -> float:
    """0.39 * words/sentences + 11.8 * syllables/words - 15.59."""
    _check_counts(word_count, sentence_count)
    return (
        0.39 * (word_count / sentence_count)
        + 11.8 * (syllable_count / word_count)
        - 15.59
    )


def _check_counts(word_count: int, sentence_count: int) -> None:
    if word_count < 1 or sentence_count < 1:
        raise ValueError("readability needs at least one word and one sentence")


def _sentence_salience(sentence: str, reference_tokens: Sequence[str], variant: str) -> float:
    tokens = textseg.token_list(sentence)
    if variant == "mean12":
        r1 = rouge.rouge_n(tokens, reference_tokens, n=1).f1
        r2 = rouge.rouge_n(tokens, reference_tokens, n=2).f1
        return (r1 + r2) / 2.0
    if variant == "r1":
        return rouge.rouge_n(tokens, reference_tokens, n=1).f1
    if variant == "r2":
        return rouge.rouge_n(tokens, reference_tokens, n=2).f1
    if variant == "rl":
        return rouge.rouge_l(tokens, reference_tokens).f1
    raise ValueError(f"unknown salience variant {variant!r}")


def salient_sentence_indices(doc: Document, k: int, variant: str = "mean12") -> list[int]:
    """0-based positions of the min(k, n) highest-salience sentences.

    Salience is overlap with the reference summary; ties go to the earlier
    sentence. The returned positions are sorted ascending.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if doc.reference_summary is None:
        raise DataFormatError(f"document {doc.id!r} has no reference summary")
    sentences = textseg.split_sentences(doc.text)
    if not sentences:
        raise DataFormatError(f"document {doc.id!r} has no sentences")
    reference_tokens = textseg.token_list(doc.reference_summary)
    scored = [
        (-_sentence_salience(sentence, reference_tokens, variant), position)
        for position, sentence in enumerate(sentences)
    ]
    scored.sort()
    return sorted(position for _, position in scored[: min(k, len(sentences))])


def salient_location(doc: Document, k: int, variant: str = "mean12") -> float:
    """Mean 1-based position of the top-k salient sentences, divided by n."""
    sentences = textseg.split_sentences(doc.text)
    top = salient_sentence_indices(doc, k, variant)
    return (sum(p + 1 for p in top) / len(top)) / len(sentences)


def doc_features(
    doc: Document,
    entities: Sequence[str] | None = None,
    salience_variant: str = "mean12",
) -> FeatureVector:
    """Compute the full vector; salient fields appear iff a reference exists.

    ``entities`` substitutes an externally produced entity list for the
    built-in tagger (counted as a set of distinct strings).
    """
    surface = textseg.surface_stats(doc.text)
    if surface.word_count < 1:
        raise DataFormatError(f"document {doc.id!r} has no words")
    entity_count = (
        len(set(entities)) if entities is not None else surface.unique_entity_count
    )
    salient5 = salient10 = None
    if doc.reference_summary is not None:
        salient5 = salient_location(doc, 5, salience_variant)
        salient10 = salient_location(doc, 10, salience_variant)
    return FeatureVector(
        doc_id=doc.id,
        length_words=surface.word_count,
        numeral_count=surface.numeral_count,
        unique_entity_count=entity_count,
        flesch_reading_ease=flesch_reading_ease(
            surface.word_count, surface.sentence_count, surface.syllable_count
        ),
        flesch_kincaid_grade=flesch_kincaid_grade(
            surface.word_count, surface.sentence_count, surface.syllable_count
        ),
        salient_loc_top5=salient5,
        salient_loc_top10=salient10,
    )


def corpus_features(
    corpus: Corpus,
    annotations: Mapping[str, Sequence[str]] | None = None,
    salience_variant: str = "mean12",
) -> dict[str, FeatureVector]:
    return {
        doc.id: doc_features(
            doc,
            entities=annotations.get(doc.id) if annotations else None,
            salience_variant=salience_variant,
        )
        for doc in corpus
    }


def infer_schema(vectors: Mapping[str, FeatureVector]) -> str:
    """"full-1" when every document carries salient fields, else "core-1"."""
    if vectors and all(
        v.salient_loc_top5 is not None and v.salient_loc_top10 is not None
        for v in vectors.values()
    ):
        return SCHEMA_FULL
    return SCHEMA_CORE


def feature_matrix(
    vectors: Mapping[str, FeatureVector], schema_version: str
) -> tuple[list[str], np.ndarray]:
    """Stack vectors into (sorted doc_ids, n x d matrix) for one schema."""
    if schema_version not in FEATURE_SCHEMAS:
        raise SchemaMismatchError(f"unknown feature schema {schema_version!r}")
    fields = FEATURE_SCHEMAS[schema_version]
    doc_ids = sorted(vectors)
    rows = []
    for doc_id in doc_ids:
        vector = vectors[doc_id]
        row = [vector.get(field_name) for field_name in fields]
        if any(value is None for value in row):
            raise SchemaMismatchError(
                f"document {doc_id!r} lacks fields required by schema {schema_version!r}"
            )
        rows.append(row)
    return doc_ids, np.asarray(rows, dtype=float)


def feature_correlations(
    vectors: Mapping[str, FeatureVector],
    targets: Mapping[str, float],
    field_names: Sequence[str] | None = None,
) -> dict[str, stats.CorrelationReport | None]:
    """Correlate each feature with the target; None marks degenerate columns."""
    shared = sorted(set(vectors) & set(targets))
    if len(shared) < 3:
        raise DegenerateInputError("need at least 3 documents with feature and target")
    if field_names is None:
        field_names = FEATURE_SCHEMAS[infer_schema({d: vectors[d] for d in shared})]
    y = [targets[d] for d in shared]
    out: dict[str, stats.CorrelationReport | None] = {}
    for field_name in field_names:
        column = [vectors[d].get(field_name) for d in shared]
        if any(value is None for value in column):
            raise DataFormatError(f"feature {field_name!r} missing for some documents")
        try:
            out[field_name] = stats.correlation_report(column, y)
        except DegenerateInputError:
            out[field_name] = None
    return out


# ---------------------------------------------------------------------------
# feature matrix export
# ---------------------------------------------------------------------------


def save_feature_file(
    vectors: Mapping[str, FeatureVector], path: str | os.PathLike
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in sorted(vectors):
            fh.write(
                json.dumps(vectors[doc_id].to_record(), ensure_ascii=False, sort_keys=True)
                + "\n"
            )


def load_feature_file(path: str | os.PathLike) -> dict[str, FeatureVector]:
    vectors: dict[str, FeatureVector] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"malformed record: {exc}", line=lineno) from None
            try:
                vector = FeatureVector(
                    doc_id=rec["doc_id"],
                    length_words=rec["length_words"],
                    numeral_count=rec["numeral_count"],
                    unique_entity_count=rec["unique_entity_count"],
                    flesch_reading_ease=rec["flesch_reading_ease"],
                    flesch_kincaid_grade=rec["flesch_kincaid_grade"],
                    salient_loc_top5=rec.get("salient_loc_top5"),
                    salient_loc_top10=rec.get("salient_loc_top10"),
                )
            except KeyError as exc:
                raise DataFormatError(f"missing field {exc}", line=lineno) from None
            if vector.doc_id in vectors:
                raise DataFormatError(f"duplicate doc_id {vector.doc_id!r}", line=lineno)
            for field_name in FEATURE_SCHEMAS[SCHEMA_FULL]:
                value = vector.get(field_name)
                if value is not None and not math.isfinite(value):
                    raise DataFormatError(f"non-finite {field_name}", line=lineno)
            vectors[vector.doc_id] = vector
    return vectors


def features_from_corpus_or_file(
    corpus: Corpus | None,
    feature_path: str | os.PathLike | None,
    annotations: Mapping[str, Sequence[str]] | None = None,
    salience_variant: str = "mean12",
) -> dict[str, FeatureVector]:
    if feature_path is not None:
        return load_feature_file(feature_path)
    if corpus is None:
        raise ValueError("need a corpus or a feature file")
    return corpus_features(corpus, annotations, salience_variant)
