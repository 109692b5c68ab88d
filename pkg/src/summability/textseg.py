"""Deterministic text segmentation: tokens, sentences, syllables, entities.

Everything here is rule-based so that feature values are reproducible from
source text alone. The rules are part of the contract:

* tokens are maximal word-character runs; every other non-space character
  stands alone ("It cost $5." -> It / cost / $ / 5 / .)
* a sentence ends at '.', '!' or '?' followed by whitespace and an uppercase
  letter, digit or quote, unless the preceding word is a known abbreviation;
  a newline always ends a sentence
* syllables are maximal vowel groups (aeiouy), minus a trailing silent 'e'
  unless the word ends in consonant + "le", with a minimum of one
* numerals are digit-bearing tokens, where tokens joined by . , / - : count
  as a single value
* entities are maximal capitalized token runs away from sentence starts,
  plus sentence-initial capitalized tokens that are not function words
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from functools import lru_cache

from .errors import DataFormatError

_DATA_DIR = os.path.join(os.path.dirname(__file__), "data")

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_WORD_RE = re.compile(r"\w")
_ALPHA_RE = re.compile(r"[^\W\d_]")

_TERMINATORS = ".!?"
_QUOTES = "\"'“”‘’"
_VOWELS = frozenset("aeiouy")
# a numerical value: digits, possibly linked by joiner punctuation (3.14,
# 2,000, 9:30-10:45); the run must start and end on a digit
_NUMERAL_RE = re.compile(r"\d(?:[\d.,/:\-]*\d)?")


def _load_word_list(name: str) -> frozenset[str]:
    path = os.path.join(_DATA_DIR, name)
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line.lower())
    return frozenset(words)


@lru_cache(maxsize=None)
def abbreviations() -> frozenset[str]:
    return _load_word_list("abbreviations.txt")


@lru_cache(maxsize=None)
def entity_stopwords() -> frozenset[str]:
    return _load_word_list("entity_stopwords.txt")


@dataclass(frozen=True)
class TokenizedText:
    """Token list plus half-open (start, end) token spans, one per sentence."""

    tokens: tuple[str, ...]
    sentence_spans: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class SurfaceStats:
    word_count: int
    sentence_count: int
    syllable_count: int
    numeral_count: int
    unique_entity_count: int


def token_list(text: str) -> list[str]:
    """Tokens only, without sentence structure."""
    return _TOKEN_RE.findall(text)


def is_word(token: str) -> bool:
    """True for tokens that count as words (anything non-punctuation)."""
    return bool(_WORD_RE.search(token))


def tokenize(text: str) -> TokenizedText:
    if not text:
        raise ValueError("cannot tokenize empty text")
    tokens: list[str] = []
    spans: list[tuple[int, int]] = []
    for sentence in split_sentences(text):
        start = len(tokens)
        tokens.extend(_TOKEN_RE.findall(sentence))
        if len(tokens) > start:
            spans.append((start, len(tokens)))
    return TokenizedText(tuple(tokens), tuple(spans))


def split_sentences(text: str) -> list[str]:
    """Split text into stripped sentences; a newline always ends one."""
    sentences: list[str] = []
    for line in text.split("\n"):
        line = line.strip()
        if line:
            sentences.extend(_split_line(line))
    return sentences


def _split_line(line: str) -> list[str]:
    abbrevs = abbreviations()
    sentences = []
    start = 0
    i = 0
    n = len(line)
    while i < n:
        if line[i] not in _TERMINATORS:
            i += 1
            continue
        j = i
        while j + 1 < n and line[j + 1] in _TERMINATORS:
            j += 1
        k = j + 1
        while k < n and line[k].isspace():
            k += 1
        boundary = (
            k > j + 1  # at least one whitespace char after the run
            and k < n
            and _starts_sentence(line[k])
            and not _is_abbreviation_period(line, start, i, j, abbrevs)
        )
        if boundary:
            sentences.append(line[start : j + 1].strip())
            start = k
            i = k
        else:
            i = j + 1
    tail = line[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def _starts_sentence(ch: str) -> bool:
    return ch.isupper() or ch.isdigit() or ch in _QUOTES


def _is_abbreviation_period(line: str, start: int, i: int, j: int, abbrevs) -> bool:
    if line[i : j + 1] != ".":
        return False
    m = re.search(r"(\w+)$", line[start:i])
    return bool(m) and m.group(1).lower() in abbrevs


def count_syllables(word: str) -> int:
    """Apply the vowel-group rule; the word must contain a letter."""
    letters = "".join(_ALPHA_RE.findall(word.lower()))
    if not letters:
        raise ValueError(f"no alphabetic characters in {word!r}")
    groups = 0
    prev_vowel = False
    for ch in letters:
        vowel = ch in _VOWELS
        if vowel and not prev_vowel:
            groups += 1
        prev_vowel = vowel
    if letters.endswith("e") and not (
        len(letters) >= 3 and letters.endswith("le") and letters[-3] not in _VOWELS
    ):
        groups -= 1
    return max(groups, 1)


def count_numerals(text: str) -> int:
    """Count numerical values; joiners only link digits with no space between."""
    return len(_NUMERAL_RE.findall(text))


def _is_capitalized(token: str) -> bool:
    return bool(token) and token[0].isupper()


def entity_spans(tokenized: TokenizedText) -> list[tuple[int, int]]:
    """Token spans of heuristic entity mentions, in document order."""
    stop = entity_stopwords()
    spans: list[tuple[int, int]] = []
    for s, e in tokenized.sentence_spans:
        i = s
        while i < e:
            token = tokenized.tokens[i]
            if not _is_capitalized(token):
                i += 1
            elif i == s:
                if token.lower() not in stop:
                    spans.append((i, i + 1))
                i += 1
            else:
                j = i + 1
                while j < e and _is_capitalized(tokenized.tokens[j]):
                    j += 1
                spans.append((i, j))
                i = j
    return spans


def extract_unique_entities(text: str) -> set[str]:
    """Case-sensitive set of entity strings found by the built-in tagger."""
    tokenized = tokenize(text)
    return {
        " ".join(tokenized.tokens[s:e]) for s, e in entity_spans(tokenized)
    }


def load_entity_annotations(path: str | os.PathLike) -> dict[str, list[str]]:
    """Read an external ``{doc_id, entities}`` annotation file."""
    annotations: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"malformed record: {exc}", line=lineno) from None
            if "doc_id" not in rec or "entities" not in rec:
                raise DataFormatError("record needs doc_id and entities", line=lineno)
            if rec["doc_id"] in annotations:
                raise DataFormatError(f"duplicate doc_id {rec['doc_id']!r}", line=lineno)
            entities = rec["entities"]
            if not isinstance(entities, list) or not all(isinstance(e, str) for e in entities):
                raise DataFormatError("entities must be a list of strings", line=lineno)
            annotations[rec["doc_id"]] = entities
    return annotations


def surface_stats(text: str) -> SurfaceStats:
    tokenized = tokenize(text)
    words = [t for t in tokenized.tokens if is_word(t)]
    syllables = sum(
        count_syllables(t) for t in words if _ALPHA_RE.search(t) is not None
    )
    return SurfaceStats(
        word_count=len(words),
        sentence_count=len(tokenized.sentence_spans),
        syllable_count=syllables,
        numeral_count=count_numerals(text),
        unique_entity_count=len(extract_unique_entities(text)),
    )
