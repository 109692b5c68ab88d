"""Downstream experiment pipelines built on the predictors.

Three families:

* hybrid selection: route the predicted-hardest fraction of documents to
  manual summarization (their score becomes 1.0) and test the gain with the
  paired bootstrap from :mod:`summability.stats`
* multi-document preparation: order a document group by predicted difficulty
  and concatenate under a token budget with an auditable separator line
* transformation probes: apply a controlled text perturbation to every
  document and report how a scorer's output moves
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import textseg
from .corpus import Corpus, Document, PredictionTable, SystemScoreTable
from .errors import (
    DataFormatError,
    InfeasibleTransformError,
    MissingDocumentError,
)
from .features import salient_sentence_indices
from .stats import BootstrapResult, SelectionPolicy, paired_bootstrap

_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

DOC_SEPARATOR = "xxdocbreakxx"

TRANSFORM_KINDS = (
    "remove_first_sentence",
    "remove_salient",
    "delete_words",
    "delete_sentences",
    "keep_first",
    "keep_last",
    "move_salient_to_end",
    "shuffle_sentences",
    "replace_names",
    "corrupt_grammar",
    "append_contradictions",
)

REPLACE_MODES = ("bank", "placeholder")

_AUX_RE = re.compile(
    r"\b(is|are|was|were|am|be|been|being|has|have|had|does|do|did|can|could|"
    r"will|would|shall|should|may|might|must)\b",
    re.IGNORECASE,
)


def _score_lookup(predictions: PredictionTable | Mapping[str, float], doc_id: str) -> float:
    try:
        return predictions[doc_id]
    except KeyError:
        raise MissingDocumentError(f"no prediction for document {doc_id!r}") from None


# ---------------------------------------------------------------------------
# hybrid manual/automatic selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HybridOutcome:
    selected: frozenset[str]
    fraction: float
    mean_score_before: float
    mean_score_after: float


def hybrid_select(
    predictions: PredictionTable | Mapping[str, float], fraction: float
) -> set[str]:
    """The floor(fraction * n) lowest-predicted documents; ties go by doc_id."""
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    entries = predictions.entries if isinstance(predictions, PredictionTable) else predictions
    if not entries:
        raise ValueError("empty prediction table")
    k = math.floor(fraction * len(entries))
    ranked = sorted(entries, key=lambda d: (entries[d], d))
    return set(ranked[:k])


def hybrid_evaluate(
    table: SystemScoreTable, system_id: str, selected: Iterable[str]
) -> HybridOutcome:
    """Mean system score after the selected documents are scored 1.0."""
    scores = table.scores_for_system(system_id)
    chosen = set(selected)
    unknown = chosen - set(scores)
    if unknown:
        raise MissingDocumentError(
            f"selected documents not scored by {system_id!r}: {sorted(unknown)}"
        )
    ids = sorted(scores)
    before = sum(scores[d] for d in ids) / len(ids)
    after = sum(1.0 if d in chosen else scores[d] for d in ids) / len(ids)
    return HybridOutcome(
        selected=frozenset(chosen),
        fraction=len(chosen) / len(ids),
        mean_score_before=before,
        mean_score_after=after,
    )


def prediction_policy(
    predictions: PredictionTable | Mapping[str, float],
) -> SelectionPolicy:
    """Selection policy that replaces the lowest-predicted instances first."""

    def select(sample_ids: Sequence[str], k: int, rng: np.random.Generator) -> list[int]:
        order = sorted(
            range(len(sample_ids)),
            key=lambda pos: (_score_lookup(predictions, sample_ids[pos]), sample_ids[pos], pos),
        )
        return order[:k]

    return select


def random_policy() -> SelectionPolicy:
    """Selection policy that replaces k uniformly drawn instances."""

    def select(sample_ids: Sequence[str], k: int, rng: np.random.Generator) -> list[int]:
        return [int(pos) for pos in rng.choice(len(sample_ids), size=k, replace=False)]

    return select


def compare_selectors(
    table: SystemScoreTable,
    system_id: str,
    selector_a: SelectionPolicy,
    selector_b: SelectionPolicy,
    fraction: float,
    b: int = 10_000,
    seed: int = 0,
    threads: int = 1,
) -> BootstrapResult:
    """Paired bootstrap over one system's scores for two selection policies."""
    return paired_bootstrap(
        table.scores_for_system(system_id),
        selector_a,
        selector_b,
        fraction,
        b=b,
        seed=seed,
        threads=threads,
    )


# ---------------------------------------------------------------------------
# multi-document ordering under a token budget
# ---------------------------------------------------------------------------


def mds_order(
    docs: Sequence[Document], predictions: PredictionTable | Mapping[str, float]
) -> list[Document]:
    """Stable sort, highest predicted score first (hardest documents last)."""
    return sorted(docs, key=lambda doc: -_score_lookup(predictions, doc.id))


def mds_concat_truncate(docs: Sequence[Document], token_limit: int) -> str:
    """Concatenate documents with separator lines, then cut to the budget.

    Separator lines tokenize as a single token and consume budget, so the
    output always re-tokenizes to exactly min(token_limit, total) tokens.
    Documents that fit completely are emitted verbatim; a document cut by the
    budget is emitted as space-joined tokens.
    """
    if token_limit < 1:
        raise ValueError(f"token_limit must be >= 1, got {token_limit}")
    if not docs:
        raise ValueError("no documents to concatenate")
    parts: list[str] = []
    remaining = token_limit
    for position, doc in enumerate(docs):
        if position > 0:
            if remaining == 0:
                break
            parts.append(DOC_SEPARATOR)
            remaining -= 1
        if remaining == 0:
            break
        tokens = textseg.token_list(doc.text)
        if len(tokens) <= remaining:
            parts.append(doc.text)
            remaining -= len(tokens)
        else:
            parts.append(" ".join(tokens[:remaining]))
            remaining = 0
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# transformation probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransformSpec:
    """One perturbation: ``kind`` plus whichever of k/n/p/mode it needs."""

    kind: str
    k: int | None = None
    n: int | None = None
    p: float | None = None
    mode: str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")
        if self.kind in ("remove_salient", "move_salient_to_end"):
            if self.k is None or self.k < 1:
                raise ValueError(f"{self.kind} needs k >= 1")
        if self.kind in ("keep_first", "keep_last"):
            if self.n is None or self.n < 1:
                raise ValueError(f"{self.kind} needs n >= 1")
        if self.kind in ("delete_words", "delete_sentences"):
            if self.p is None or not 0.0 < self.p < 1.0:
                raise ValueError(f"{self.kind} needs p in (0, 1)")
        if self.kind == "replace_names":
            if self.mode not in REPLACE_MODES:
                raise ValueError(f"replace_names needs mode in {REPLACE_MODES}")

    def describe(self) -> str:
        params = []
        for name in ("k", "n", "p", "mode"):
            value = getattr(self, name)
            if value is not None:
                params.append(f"{name}={value}")
        return f"{self.kind}({', '.join(params)})"


@dataclass(frozen=True)
class ProbeEntry:
    doc_id: str
    before: float
    after: float

    @property
    def delta(self) -> float:
        return self.after - self.before


@dataclass(frozen=True)
class ProbeReport:
    spec: TransformSpec
    entries: tuple[ProbeEntry, ...]
    mean_before: float
    mean_after: float
    skipped: tuple[str, ...]

    @property
    def mean_delta(self) -> float:
        return self.mean_after - self.mean_before

    @property
    def n(self) -> int:
        return len(self.entries)


@lru_cache(maxsize=None)
def name_bank() -> tuple[str, ...]:
    names = []
    with open(os.path.join(_DATA_DIR, "name_bank.txt"), encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                names.append(line)
    return tuple(names)


@lru_cache(maxsize=None)
def irregular_verb_map() -> dict[str, str]:
    mapping = {}
    with open(os.path.join(_DATA_DIR, "irregular_verbs.txt"), encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            inflected, base = line.split()
            mapping[inflected] = base
    return mapping


def _round_half_up(value: float) -> int:
    return math.floor(value + 0.5)


def _strip_ing_ed(stem: str) -> str:
    # undo doubling (running -> run) but keep legitimate double endings
    if (
        len(stem) >= 3
        and stem[-1] == stem[-2]
        and stem[-1] not in "aeiou"
        and not stem.endswith(("ll", "ss", "zz", "ff"))
    ):
        return stem[:-1]
    # restore a dropped silent e after consonant-vowel-consonant (making -> make)
    if (
        len(stem) >= 3
        and stem[-1] not in "aeiouy"
        and stem[-2] in "aeiou"
        and stem[-3] not in "aeiou"
    ):
        return stem + "e"
    return stem


def lemmatize_token(token: str) -> str:
    """Blunt rule-based verb lemmatizer: irregular list, then suffix rules."""
    if not token.isalpha():
        return token
    lower = token.lower()
    base = irregular_verb_map().get(lower)
    if base is None:
        base = _suffix_rewrite(lower)
    if base == lower:
        return token
    if token[0].isupper():
        return base.capitalize()
    return base


def _suffix_rewrite(lower: str) -> str:
    if len(lower) > 4 and lower.endswith("ies"):
        return lower[:-3] + "y"
    if len(lower) > 4 and lower.endswith("ied"):
        return lower[:-3] + "y"
    if len(lower) > 4 and lower.endswith("eed"):
        return lower[:-1]
    if len(lower) > 4 and lower.endswith("ing"):
        stem = lower[:-3]
        if len(stem) >= 2 and any(ch in "aeiouy" for ch in stem):
            return _strip_ing_ed(stem)
        return lower
    if len(lower) > 3 and lower.endswith("ed"):
        stem = lower[:-2]
        if len(stem) >= 2 and any(ch in "aeiouy" for ch in stem):
            return _strip_ing_ed(stem)
        return lower
    if len(lower) > 4 and lower.endswith(("sses", "ches", "shes", "xes", "zes")):
        return lower[:-2]
    if len(lower) > 3 and lower.endswith("s") and not lower.endswith(("ss", "us", "is")):
        return lower[:-1]
    return lower


def _make_doc(doc: Document, text: str) -> Document:
    text = text.strip()
    if not text:
        raise InfeasibleTransformError(
            f"transform left document {doc.id!r} empty"
        )
    return Document(
        id=doc.id,
        text=text,
        reference_summary=doc.reference_summary,
        set_id=doc.set_id,
    )


def _need_sentences(doc: Document, minimum: int, what: str) -> list[str]:
    sentences = textseg.split_sentences(doc.text)
    if len(sentences) < minimum:
        raise InfeasibleTransformError(
            f"document {doc.id!r} has {len(sentences)} sentence(s); {what} "
            f"needs at least {minimum}"
        )
    return sentences


def _salient_positions(doc: Document, k: int) -> list[int]:
    if doc.reference_summary is None:
        raise InfeasibleTransformError(
            f"document {doc.id!r} has no reference summary for a salience transform"
        )
    return salient_sentence_indices(doc, k)


def apply_transform(doc: Document, spec: TransformSpec) -> Document:
    """Apply one perturbation; deterministic in (doc, spec, spec.seed)."""
    rng = np.random.default_rng(spec.seed)
    kind = spec.kind

    if kind == "remove_first_sentence":
        sentences = _need_sentences(doc, 2, kind)
        return _make_doc(doc, "\n".join(sentences[1:]))

    if kind == "remove_salient":
        sentences = _need_sentences(doc, 1, kind)
        salient = set(_salient_positions(doc, spec.k))
        kept = [s for i, s in enumerate(sentences) if i not in salient]
        if not kept:
            raise InfeasibleTransformError(
                f"removing {spec.k} salient sentence(s) empties document {doc.id!r}"
            )
        return _make_doc(doc, "\n".join(kept))

    if kind == "move_salient_to_end":
        sentences = _need_sentences(doc, 1, kind)
        salient = set(_salient_positions(doc, spec.k))
        rest = [s for i, s in enumerate(sentences) if i not in salient]
        moved = [sentences[i] for i in sorted(salient)]
        return _make_doc(doc, "\n".join(rest + moved))

    if kind == "delete_sentences":
        sentences = _need_sentences(doc, 1, kind)
        count = _round_half_up(spec.p * len(sentences))
        if count >= len(sentences):
            raise InfeasibleTransformError(
                f"deleting {count} of {len(sentences)} sentences empties document {doc.id!r}"
            )
        drop = set(int(i) for i in rng.choice(len(sentences), size=count, replace=False))
        return _make_doc(
            doc, "\n".join(s for i, s in enumerate(sentences) if i not in drop)
        )

    if kind in ("keep_first", "keep_last"):
        sentences = _need_sentences(doc, 1, kind)
        count = min(spec.n, len(sentences))
        kept = sentences[:count] if kind == "keep_first" else sentences[-count:]
        return _make_doc(doc, "\n".join(kept))

    if kind == "shuffle_sentences":
        sentences = _need_sentences(doc, 1, kind)
        order = rng.permutation(len(sentences))
        return _make_doc(doc, "\n".join(sentences[i] for i in order))

    if kind == "delete_words":
        tokens = textseg.token_list(doc.text)
        word_positions = [i for i, t in enumerate(tokens) if textseg.is_word(t)]
        count = _round_half_up(spec.p * len(word_positions))
        if count >= len(word_positions):
            raise InfeasibleTransformError(
                f"deleting {count} of {len(word_positions)} words empties document {doc.id!r}"
            )
        drop = set(
            word_positions[int(i)]
            for i in rng.choice(len(word_positions), size=count, replace=False)
        )
        return _make_doc(
            doc, " ".join(t for i, t in enumerate(tokens) if i not in drop)
        )

    if kind == "replace_names":
        return _make_doc(doc, _replace_names(doc.text, spec.mode, rng))

    if kind == "corrupt_grammar":
        return _make_doc(doc, re.sub(r"\w+", lambda m: lemmatize_token(m.group()), doc.text))

    if kind == "append_contradictions":
        return _make_doc(doc, _append_contradictions(doc.text))

    raise ValueError(f"unknown transform kind {kind!r}")


def _replace_names(text: str, mode: str, rng: np.random.Generator) -> str:
    tokenized = textseg.tokenize(text)
    spans = textseg.entity_spans(tokenized)
    order_seen: dict[str, None] = {}
    for s, e in spans:
        order_seen.setdefault(" ".join(tokenized.tokens[s:e]), None)
    entities = list(order_seen)
    if not entities:
        return text
    if mode == "bank":
        bank = name_bank()
        perm = rng.permutation(len(bank))
        mapping = {
            entity: bank[int(perm[i % len(bank)])] for i, entity in enumerate(entities)
        }
    else:
        mapping = {entity: f"Entity{i + 1}" for i, entity in enumerate(entities)}
    # longest mentions first so "New York City" is never half-replaced
    for entity in sorted(entities, key=lambda e: (-len(e.split(" ")), -len(e), e)):
        pattern = (
            r"(?<!\w)" + r"\s+".join(re.escape(t) for t in entity.split(" ")) + r"(?!\w)"
        )
        text = re.sub(pattern, mapping[entity].replace("\\", "\\\\"), text)
    return text


def _append_contradictions(text: str) -> str:
    sentences = textseg.split_sentences(text)
    added: list[str] = []
    for sentence in sentences:
        if len(added) == 3:
            break
        if not sentence.endswith("."):
            continue
        negated = _negate(sentence)
        if negated is not None:
            added.append(negated)
    if not added:
        return text
    return text + "\n" + "\n".join(added)


def _negate(sentence: str) -> str | None:
    """Insert "not" after the first finite verb, if one can be found."""
    m = _AUX_RE.search(sentence)
    if m:
        return sentence[: m.end()] + " not" + sentence[m.end() :]
    for i, m in enumerate(re.finditer(r"\w+", sentence)):
        if i == 0:
            continue
        word = m.group().lower()
        if word.endswith("ed") and len(word) > 3:
            return sentence[: m.end()] + " not" + sentence[m.end() :]
        if (
            word.endswith("s")
            and len(word) > 3
            and not word.endswith(("ss", "us", "is"))
        ):
            return sentence[: m.end()] + " not" + sentence[m.end() :]
    return None


def transform_probe(
    score_fn: Callable[[Document], float],
    corpus: Corpus | Iterable[Document],
    spec: TransformSpec,
    skip_infeasible: bool = True,
) -> ProbeReport:
    """Score each document before and after the transform.

    Documents the transform cannot apply to are skipped (and reported) when
    ``skip_infeasible`` is set, mirroring probes that run on the applicable
    subset; any other error propagates. Entries come back sorted by |delta|,
    largest first.
    """
    entries: list[ProbeEntry] = []
    skipped: list[str] = []
    for doc in corpus:
        try:
            transformed = apply_transform(doc, spec)
        except InfeasibleTransformError:
            if not skip_infeasible:
                raise
            skipped.append(doc.id)
            continue
        entries.append(
            ProbeEntry(doc_id=doc.id, before=float(score_fn(doc)), after=float(score_fn(transformed)))
        )
    if not entries:
        raise DataFormatError(f"no documents support transform {spec.describe()}")
    entries.sort(key=lambda e: (-abs(e.delta), e.doc_id))
    mean_before = sum(e.before for e in entries) / len(entries)
    mean_after = sum(e.after for e in entries) / len(entries)
    return ProbeReport(
        spec=spec,
        entries=tuple(entries),
        mean_before=mean_before,
        mean_after=mean_after,
        skipped=tuple(skipped),
    )
