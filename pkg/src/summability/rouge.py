"""N-gram overlap and longest-common-subsequence summary metrics.

Matching happens over lowercased tokens with standalone punctuation removed.
There is no stemming by default; ``stem=True`` applies a small rule-based
suffix stripper. Multi-reference sets aggregate by the best F1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .textseg import is_word


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


_ZERO = RougeScore(0.0, 0.0, 0.0)


def _light_stem(token: str) -> str:
    # deliberately crude: enough to fold plural / past-tense variants
    if len(token) > 4 and token.endswith("ies"):
        return token[:-3] + "y"
    if len(token) > 4 and token.endswith(("sses", "ches", "shes", "xes", "zes")):
        return token[:-2]
    if len(token) > 3 and token.endswith("s") and not token.endswith(("ss", "us", "is")):
        return token[:-1]
    return token


def _normalize(tokens: Sequence[str], stem: bool) -> list[str]:
    out = [t.lower() for t in tokens if is_word(t)]
    if stem:
        out = [_light_stem(t) for t in out]
    return out


def _score(overlap: int, cand_total: int, ref_total: int) -> RougeScore:
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    if precision + recall == 0.0:
        return RougeScore(precision, recall, 0.0)
    return RougeScore(precision, recall, 2 * precision * recall / (precision + recall))


def rouge_n(
    candidate: Sequence[str], reference: Sequence[str], n: int = 2, stem: bool = False
) -> RougeScore:
    """Clipped n-gram multiset overlap between candidate and reference tokens."""
    if n < 1:
        raise ValueError(f"n-gram order must be >= 1, got {n}")
    cand = _normalize(candidate, stem)
    ref = _normalize(reference, stem)
    cand_grams = Counter(tuple(cand[i : i + n]) for i in range(len(cand) - n + 1))
    ref_grams = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
    overlap = sum((cand_grams & ref_grams).values())
    return _score(overlap, sum(cand_grams.values()), sum(ref_grams.values()))


def rouge_l(
    candidate: Sequence[str], reference: Sequence[str], stem: bool = False
) -> RougeScore:
    """Longest common subsequence length scored as precision/recall/F1."""
    cand = _normalize(candidate, stem)
    ref = _normalize(reference, stem)
    if not cand or not ref:
        return _ZERO
    lcs = _lcs_length(cand, ref)
    return _score(lcs, len(cand), len(ref))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def best_rouge(
    candidate: Sequence[str],
    references: Iterable[Sequence[str]],
    n: int | None = 2,
    stem: bool = False,
) -> RougeScore:
    """Max-F1 aggregation over several references; ``n=None`` means LCS."""
    best: RougeScore | None = None
    for reference in references:
        score = (
            rouge_l(candidate, reference, stem=stem)
            if n is None
            else rouge_n(candidate, reference, n=n, stem=stem)
        )
        if best is None or score.f1 > best.f1:
            best = score
    if best is None:
        raise ValueError("best_rouge needs at least one reference")
    return best
