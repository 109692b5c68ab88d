"""Rank statistics and significance tests used throughout the toolkit.

Conventions that differ from library defaults and are therefore implemented
here directly:

* zero variance on either side of a correlation is an error, never 0 or NaN
* Kendall's tau is the tie-corrected tau-b, computed by pair enumeration
* the paired bootstrap counts resamples whose score difference exceeds twice
  the original difference; per-pass seeds are ``seed ^ pass_index`` so the
  result is independent of thread count
* the signed-rank test drops zero differences, uses average ranks, and is
  exact up to n = 20 (normal approximation with continuity correction above)
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DegenerateInputError

# selector(sample_doc_ids, k, rng) -> positions of the k instances to replace
SelectionPolicy = Callable[[Sequence[str], int, np.random.Generator], Sequence[int]]


@dataclass(frozen=True)
class CorrelationReport:
    kendall: float
    pearson: float
    spearman: float
    n: int


@dataclass(frozen=True)
class BootstrapResult:
    p_value: float
    successes: int
    iterations: int
    original_diff: float
    seed: int


def _paired_arrays(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    ax = np.asarray(x, dtype=float)
    ay = np.asarray(y, dtype=float)
    if ax.ndim != 1 or ay.ndim != 1 or len(ax) != len(ay):
        raise ValueError("inputs must be equal-length 1-d sequences")
    if len(ax) < 2:
        raise ValueError("need at least 2 paired observations")
    if not (np.isfinite(ax).all() and np.isfinite(ay).all()):
        raise ValueError("inputs must be finite")
    return ax, ay


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    ax, ay = _paired_arrays(x, y)
    xc = ax - ax.mean()
    yc = ay - ay.mean()
    vx = float(xc @ xc)
    vy = float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise DegenerateInputError("zero variance input: correlation undefined")
    return float((xc @ yc) / math.sqrt(vx * vy))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=float)
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    ax, ay = _paired_arrays(x, y)
    return pearson(average_ranks(ax), average_ranks(ay))


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    """Tau-b: (C - D) / sqrt((n0 - tx) * (n0 - ty)) over all pairs."""
    ax, ay = _paired_arrays(x, y)
    n = len(ax)
    dx = np.sign(np.subtract.outer(ax, ax))
    dy = np.sign(np.subtract.outer(ay, ay))
    iu = np.triu_indices(n, k=1)
    px = dx[iu]
    py = dy[iu]
    concordant = int(np.sum(px * py > 0))
    discordant = int(np.sum(px * py < 0))
    n0 = n * (n - 1) // 2
    tied_x = int(np.sum(px == 0))
    tied_y = int(np.sum(py == 0))
    denom = math.sqrt(float(n0 - tied_x) * float(n0 - tied_y))
    if denom == 0.0:
        raise DegenerateInputError("all-tied input: tau undefined")
    return (concordant - discordant) / denom


_CORRELATIONS: dict[str, Callable[[Sequence[float], Sequence[float]], float]] = {
    "kendall": kendall_tau,
    "pearson": pearson,
    "spearman": spearman,
}


def correlation_report(x: Sequence[float], y: Sequence[float]) -> CorrelationReport:
    ax, ay = _paired_arrays(x, y)
    return CorrelationReport(
        kendall=kendall_tau(ax, ay),
        pearson=pearson(ax, ay),
        spearman=spearman(ax, ay),
        n=len(ax),
    )


def system_agreement(table, method: str = "kendall") -> float:
    """Mean pairwise correlation between systems' per-document score vectors.

    Every unordered system pair contributes one coefficient computed over the
    documents both systems scored; the mean is unweighted.
    """
    if method not in _CORRELATIONS:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(_CORRELATIONS)}")
    corr = _CORRELATIONS[method]
    systems = table.systems()
    if len(systems) < 2:
        raise DegenerateInputError("agreement needs at least 2 systems")
    total = 0.0
    pairs = 0
    for i, sys_a in enumerate(systems):
        scores_a = table.scores_for_system(sys_a)
        for sys_b in systems[i + 1 :]:
            scores_b = table.scores_for_system(sys_b)
            shared = sorted(set(scores_a) & set(scores_b))
            if len(shared) < 2:
                raise DegenerateInputError(
                    f"systems {sys_a!r} and {sys_b!r} share fewer than 2 documents"
                )
            total += corr([scores_a[d] for d in shared], [scores_b[d] for d in shared])
            pairs += 1
    return total / pairs


def agreement_matrix(table, method: str = "kendall") -> tuple[list[str], np.ndarray]:
    """Full symmetric pairwise-correlation matrix (diagonal fixed at 1)."""
    corr = _CORRELATIONS[method]
    systems = table.systems()
    m = np.eye(len(systems))
    for i, sys_a in enumerate(systems):
        scores_a = table.scores_for_system(sys_a)
        for j in range(i + 1, len(systems)):
            scores_b = table.scores_for_system(systems[j])
            shared = sorted(set(scores_a) & set(scores_b))
            value = corr([scores_a[d] for d in shared], [scores_b[d] for d in shared])
            m[i, j] = m[j, i] = value
    return systems, m


def _replaced_mean(
    sample_ids: Sequence[str], selected: Sequence[int], scores: Mapping[str, float]
) -> float:
    n = len(sample_ids)
    chosen = set(selected)
    total = 0.0
    for pos, doc_id in enumerate(sample_ids):
        total += 1.0 if pos in chosen else scores[doc_id]
    return total / n


def paired_bootstrap(
    scores: Mapping[str, float],
    selector_a: SelectionPolicy,
    selector_b: SelectionPolicy,
    fraction: float,
    b: int = 10_000,
    seed: int = 0,
    threads: int = 1,
) -> BootstrapResult:
    """Paired bootstrap test that selection policy A beats policy B.

    Each of the ``b`` passes resamples the document set with replacement,
    recomputes both selections on the resample, replaces the selected
    instances' scores with 1.0, and compares the two means. A pass counts as
    a success when its difference exceeds twice the original difference;
    the p-value is successes / b. A non-positive original difference returns
    p = 1.0 without sampling.

    Pass ``i`` (0 = the original full-set pass) draws from
    ``numpy.random.default_rng(seed ^ i)``, so results are bit-identical for
    any ``threads`` value.
    """
    if not scores:
        raise DegenerateInputError("empty document set")
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if b < 1:
        raise ValueError(f"iteration count must be >= 1, got {b}")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ids = sorted(scores)
    n = len(ids)
    k = math.floor(fraction * n)

    def run_pass(index: int) -> float:
        rng = np.random.default_rng(seed ^ index)
        if index == 0:
            sample = ids
        else:
            sample = [ids[j] for j in rng.integers(0, n, size=n)]
        mean_a = _replaced_mean(sample, selector_a(sample, k, rng), scores)
        mean_b = _replaced_mean(sample, selector_b(sample, k, rng), scores)
        return mean_a - mean_b

    original_diff = run_pass(0)
    if original_diff <= 0.0:
        return BootstrapResult(1.0, 0, b, original_diff, seed)
    threshold = 2.0 * original_diff
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            diffs = list(pool.map(run_pass, range(1, b + 1)))
    else:
        diffs = [run_pass(i) for i in range(1, b + 1)]
    successes = sum(1 for d in diffs if d > threshold)
    return BootstrapResult(successes / b, successes, b, original_diff, seed)


def wilcoxon_signed_rank(
    x: Sequence[float], y: Sequence[float], method: str = "auto"
) -> float:
    """Two-sided signed-rank p-value for paired samples.

    Zero differences are dropped; tied magnitudes get average ranks. With
    ``method="auto"`` the distribution is enumerated exactly for up to 20
    non-zero differences, otherwise a normal approximation with continuity
    correction is used. All differences zero gives p = 1.0.
    """
    if method not in ("auto", "exact", "approx"):
        raise ValueError(f"unknown method {method!r}")
    ax = np.asarray(x, dtype=float)
    ay = np.asarray(y, dtype=float)
    if ax.shape != ay.shape or ax.ndim != 1:
        raise ValueError("inputs must be equal-length 1-d sequences")
    if not (np.isfinite(ax).all() and np.isfinite(ay).all()):
        raise ValueError("inputs must be finite")
    diffs = ax - ay
    diffs = diffs[diffs != 0.0]
    n = len(diffs)
    if n == 0:
        return 1.0
    ranks = average_ranks(np.abs(diffs))
    w_plus = float(ranks[diffs > 0].sum())
    if method == "exact" or (method == "auto" and n <= 20):
        return _wilcoxon_exact(ranks, w_plus)
    return _wilcoxon_approx(ranks, w_plus)


def _wilcoxon_exact(ranks: np.ndarray, w_plus: float) -> float:
    # double the ranks so tie-averaged .5 ranks become integers, then count
    # achievable rank sums over all 2^n sign assignments
    doubled = np.rint(2.0 * ranks).astype(int)
    total = int(doubled.sum())
    counts = np.zeros(total + 1)
    counts[0] = 1.0
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    w2 = int(round(2.0 * w_plus))
    lo = min(w2, total - w2)
    hi = max(w2, total - w2)
    p = (counts[: lo + 1].sum() + counts[hi:].sum()) / 2.0 ** len(ranks)
    return float(min(p, 1.0))


def _wilcoxon_approx(ranks: np.ndarray, w_plus: float) -> float:
    mean = float(ranks.sum()) / 2.0
    var = float((ranks**2).sum()) / 4.0
    delta = w_plus - mean
    if delta == 0.0:
        return 1.0
    z = (abs(delta) - 0.5) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Chance-corrected agreement with marginal-product expected agreement."""
    if len(labels_a) != len(labels_b):
        raise ValueError("label sequences must have equal length")
    n = len(labels_a)
    if n == 0:
        raise ValueError("need at least one labeled item")
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    labels = set(labels_a) | set(labels_b)
    expected = 0.0
    for label in labels:
        pa = sum(1 for a in labels_a if a == label) / n
        pb = sum(1 for b in labels_b if b == label) / n
        expected += pa * pb
    if expected == 1.0:
        raise DegenerateInputError("expected agreement is 1: kappa undefined")
    return (observed - expected) / (1.0 - expected)
