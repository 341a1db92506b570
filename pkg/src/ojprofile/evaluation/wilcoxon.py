"""Wilcoxon signed-rank and rank-sum tests with exact small-sample p-values.

Exact p-values come from the full permutation distribution of the statistic. Ranks
are mid-ranks, so the statistic is carried as twice the rank sum, which is always
an integer; the null distribution is then counted exactly by dynamic programming.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy.stats import rankdata

from ..exceptions import ValidationError

EXACT_SIGNED_MAX = 12
EXACT_RANKSUM_MAX = 10
ALTERNATIVES = ("two-sided", "greater", "less")


def _doubled_ranks(values):
    return np.rint(2 * rankdata(values)).astype(np.int64)


def _subset_sum_counts(weights):
    """counts[s] = number of sign assignments whose positive-rank total is s."""
    counts = np.zeros(int(np.sum(weights)) + 1, dtype=object)
    counts[0] = 1
    for w in weights:
        shifted = np.zeros_like(counts)
        shifted[w:] = counts[: len(counts) - w]
        counts = counts + shifted
    return counts


def _tail_p(counts, observed, total, alternative, center2):
    """Exact tail probability from an integer null distribution.

    ``center2`` is twice the null mean; with statistic ``s``, ``|2s - center2|``
    measures two-sided extremeness on the integer lattice.
    """
    support = np.arange(len(counts))
    if alternative == "greater":
        hits = counts[support >= observed].sum()
    elif alternative == "less":
        hits = counts[support <= observed].sum()
    else:
        dev = abs(2 * observed - center2)
        hits = counts[np.abs(2 * support - center2) >= dev].sum()
    return min(1.0, float(hits) / float(total))


def _normal_p(z, alternative):
    if alternative == "greater":
        return 0.5 * math.erfc(z / math.sqrt(2))
    if alternative == "less":
        return 0.5 * math.erfc(-z / math.sqrt(2))
    return min(1.0, math.erfc(abs(z) / math.sqrt(2)))


def _check_alternative(alternative):
    if alternative not in ALTERNATIVES:
        raise ValidationError(f"alternative must be one of {ALTERNATIVES}")


def signed_rank_statistic(paired_a, paired_b):
    """Return ``(W+, n)`` after dropping zero differences; W+ uses mid-ranks of |d|."""
    a = np.asarray(paired_a, dtype=np.float64)
    b = np.asarray(paired_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("paired samples must be 1-D and of equal length")
    d = a - b
    d = d[d != 0]
    if d.size == 0:
        return 0.0, 0
    ranks = rankdata(np.abs(d))
    return float(ranks[d > 0].sum()), int(d.size)


def wilcoxon_signed_rank(paired_a, paired_b, alternative="two-sided", exact=None):
    """p-value of the signed-rank test of ``a - b``.

    ``greater`` tests whether ``a`` tends to exceed ``b``. Zero differences are
    dropped; the exact distribution is used for up to 12 remaining pairs (or when
    ``exact=True``), otherwise a normal approximation with tie and continuity
    corrections.
    """
    _check_alternative(alternative)
    a = np.asarray(paired_a, dtype=np.float64)
    b = np.asarray(paired_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("paired samples must be 1-D and of equal length")
    d = a - b
    d = d[d != 0]
    n = d.size
    if n == 0:
        raise ValidationError("all paired differences are zero")
    if n < 5:
        warnings.warn(f"signed-rank test on only {n} non-zero differences", RuntimeWarning)
    r2 = _doubled_ranks(np.abs(d))
    w2 = int(r2[d > 0].sum())
    if exact is None:
        exact = n <= EXACT_SIGNED_MAX
    if exact:
        counts = _subset_sum_counts(r2)
        return _tail_p(counts, w2, 2**n, alternative, int(r2.sum()))
    ranks = r2 / 2.0
    mean = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24.0 - np.sum(tie_counts**3 - tie_counts) / 48.0
    return _normal_approx(w2 / 2.0, mean, var, alternative)


def _normal_approx(stat, mean, var, alternative):
    if var <= 0:
        return 1.0
    diff = stat - mean
    if alternative == "greater":
        z = (diff - 0.5) / math.sqrt(var)
    elif alternative == "less":
        z = (diff + 0.5) / math.sqrt(var)
    else:
        z = max(abs(diff) - 0.5, 0.0) / math.sqrt(var)
    return _normal_p(z, alternative)


def _ranksum_counts(r2, na):
    """counts[k][s]: subsets of size k with doubled-rank total s."""
    total = int(r2.sum())
    counts = np.zeros((na + 1, total + 1), dtype=object)
    counts[0, 0] = 1
    for w in r2:
        w = int(w)
        for k in range(na, 0, -1):
            counts[k, w:] = counts[k, w:] + counts[k - 1, : total + 1 - w]
    return counts[na]


def wilcoxon_rank_sum(sample_a, sample_b, alternative="two-sided", exact=None):
    """p-value of the rank-sum test comparing two independent samples.

    The statistic is the mid-rank sum of ``sample_a`` in the pooled sample; ``greater``
    tests whether ``a`` tends to be larger. Exact enumeration applies when neither
    sample exceeds 10 values (or ``exact=True``), a tie-corrected normal
    approximation with continuity correction otherwise.
    """
    _check_alternative(alternative)
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValidationError("rank-sum test needs two non-empty samples")
    pooled = np.concatenate([a, b])
    n, na, nb = pooled.size, a.size, b.size
    r2 = _doubled_ranks(pooled)
    stat2 = int(r2[:na].sum())
    if exact is None:
        exact = max(na, nb) <= EXACT_RANKSUM_MAX
    if exact:
        counts = _ranksum_counts(r2, na)
        return _tail_p(counts, stat2, math.comb(n, na), alternative, 2 * na * (n + 1))
    mean = na * (n + 1) / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    var = na * nb / 12.0 * ((n + 1) - np.sum(tie_counts**3 - tie_counts) / (n * (n - 1)))
    return _normal_approx(stat2 / 2.0, mean, var, alternative)
