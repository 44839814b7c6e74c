"""Non-parametric statistics for paired benchmark score comparisons.

Everything here is deterministic: exact enumeration is used for small
samples (signed-rank test, Hodges-Lehmann confidence ranks) and seeded
resampling everywhere else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from .errors import (
    AllZero,
    Degenerate,
    InsufficientRaters,
    LengthMismatch,
    OutOfRange,
    TooFew,
    TooFewModels,
    ZeroVector,
)

# Sample size at which exact signed-rank enumeration is replaced by the
# normal approximation (both for p-values and HL confidence ranks).
EXACT_LIMIT = 25


@dataclass
class PairedDeltas:
    """Per-dataset paired score differences (transformed minus original)."""

    labels: list[str]
    deltas: list[float]

    def __post_init__(self):
        if len(self.labels) != len(self.deltas):
            raise LengthMismatch("labels and deltas must have equal length")
        if not all(math.isfinite(d) for d in self.deltas):
            raise ValueError("deltas must be finite")


@dataclass
class HLResult:
    """Hodges-Lehmann location shift with its confidence interval."""

    shift: float
    ci_low: float
    ci_high: float
    confidence: float = 0.95


@dataclass
class AgreementResult:
    """Chance-corrected weighted inter-rater agreement."""

    ac2: float
    n_items: int
    n_raters: int
    n_categories: int


def _signed_rank_counts(doubled_ranks: Sequence[int]) -> np.ndarray:
    """Distribution of the positive-rank sum over all sign assignments.

    Ranks are passed doubled so that midranks (x.5) become integers.
    Returns counts[s] = number of sign assignments with doubled sum s;
    counts.sum() == 2**n.
    """
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.int64)
    counts[0] = 1
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts = counts + shifted
    return counts


def wilcoxon_signed_rank(deltas: Sequence[float]) -> tuple[float, float]:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zeros are discarded and tied absolute values receive average ranks.
    For n <= EXACT_LIMIT the p-value is exact (full enumeration of the
    2^n sign assignments via the rank-sum distribution); above that a
    normal approximation with continuity and tie correction is used.

    Returns (W, p) where W is the positive-rank sum.
    """
    d = np.asarray([x for x in deltas if x != 0], dtype=float)
    n = len(d)
    if n == 0:
        raise AllZero("all deltas are zero")
    ranks = rankdata(np.abs(d))
    w_pos = float(ranks[d > 0].sum())

    if n <= EXACT_LIMIT:
        doubled = [int(round(2 * r)) for r in ranks]
        counts = _signed_rank_counts(doubled)
        total = int(counts.sum())
        w2 = int(round(2 * w_pos))
        c_le = int(counts[: w2 + 1].sum())
        c_ge = int(counts[w2:].sum())
        p = min(1.0, 2 * min(c_le, c_ge) / total)
        return w_pos, p

    mean = n * (n + 1) / 4.0
    tie_sizes = np.unique(ranks, return_counts=True)[1]
    var = n * (n + 1) * (2 * n + 1) / 24.0 - float((tie_sizes**3 - tie_sizes).sum()) / 48.0
    sd = math.sqrt(var)
    diff = w_pos - mean
    z = (diff - 0.5 * np.sign(diff)) / sd
    p = min(1.0, 2 * float(norm.sf(abs(z))))
    return w_pos, p


def _walsh_averages(x: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(len(x))
    return np.sort(((x[:, None] + x[None, :]) / 2.0)[iu])


def _median_sorted(values: np.ndarray) -> float:
    m = len(values)
    if m % 2 == 1:
        return float(values[m // 2])
    return float((values[m // 2 - 1] + values[m // 2]) / 2.0)


def _hl_ci_rank(n: int, alpha: float) -> int:
    """1-based order-statistic rank of the lower CI endpoint among the
    n(n+1)/2 sorted Walsh averages.

    Largest k such that P(T+ <= k-1) <= alpha/2 under the null
    signed-rank distribution for an untied sample of size n; 1 when no
    such k exists (the CI then spans the full Walsh range).
    """
    m = n * (n + 1) // 2
    if n <= EXACT_LIMIT:
        counts = _signed_rank_counts([2 * r for r in range(1, n + 1)])
        total = int(counts.sum())
        # counts is indexed by doubled sums; untied ranks give even sums only
        cdf = np.cumsum(counts) / total
        k = 1
        for j in range(m + 1):
            if cdf[2 * j] <= alpha / 2.0:
                k = j + 1
            else:
                break
        return min(k, (m + 1) // 2)
    z = float(norm.ppf(1.0 - alpha / 2.0))
    sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0)
    j = math.floor(m / 2.0 - z * sigma)
    return max(1, min(int(j) + 1, (m + 1) // 2))


def hodges_lehmann(deltas: Sequence[float], confidence: float = 0.95) -> HLResult:
    """Hodges-Lehmann one-sample shift with a distribution-free CI.

    The shift is the median of all n(n+1)/2 Walsh averages
    (x_i + x_j)/2, i <= j. The CI endpoints are order statistics of the
    sorted Walsh averages at ranks derived from the null signed-rank
    distribution.
    """
    x = np.asarray(list(deltas), dtype=float)
    n = len(x)
    if n < 1:
        raise TooFew("need at least one delta")
    if not (0.0 < confidence < 1.0):
        raise OutOfRange("confidence must be in (0, 1)")
    walsh = _walsh_averages(x)
    shift = _median_sorted(walsh)
    k = _hl_ci_rank(n, 1.0 - confidence)
    m = len(walsh)
    return HLResult(
        shift=shift,
        ci_low=float(walsh[k - 1]),
        ci_high=float(walsh[m - k]),
        confidence=confidence,
    )


def holm_correct(p_values: Sequence[float]) -> list[float]:
    """Holm step-down adjustment of a family of p-values.

    Sorted ascending, the i-th smallest is multiplied by (m - i),
    a running maximum enforces monotonicity, and values are capped at 1
    before being returned in the original order.
    """
    p = np.asarray(list(p_values), dtype=float)
    if len(p) == 0:
        return []
    if np.any(p < 0) or np.any(p > 1):
        raise OutOfRange("p-values must lie in [0, 1]")
    m = len(p)
    order = np.argsort(p, kind="stable")
    adjusted = np.empty(m, dtype=float)
    running = 0.0
    for i, idx in enumerate(order):
        running = max(running, p[idx] * (m - i))
        adjusted[idx] = min(1.0, running)
    return adjusted.tolist()


def percentile_bootstrap_ci(
    values: Sequence[float],
    n_boot: int = 10_000,
    confidence: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap CI for the mean, deterministic per seed."""
    x = np.asarray(list(values), dtype=float)
    n = len(x)
    if n < 2:
        raise TooFew("need at least two values")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_boot, n))
    means = x[idx].mean(axis=1)
    alpha = 1.0 - confidence
    low, high = np.percentile(means, [100 * alpha / 2.0, 100 * (1.0 - alpha / 2.0)])
    return float(low), float(high)


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson correlation on average ranks."""
    xa = np.asarray(list(x), dtype=float)
    ya = np.asarray(list(y), dtype=float)
    if len(xa) != len(ya):
        raise LengthMismatch("x and y must have equal length")
    if len(xa) < 3:
        raise TooFew("need at least three pairs")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise Degenerate("constant input has no defined rank correlation")
    rx = rankdata(xa)
    ry = rankdata(ya)
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    return float((rx * ry).sum() / math.sqrt((rx**2).sum() * (ry**2).sum()))


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall's tau-b (tie-corrected) by explicit pair comparison."""
    xa = np.asarray(list(x), dtype=float)
    ya = np.asarray(list(y), dtype=float)
    if len(xa) != len(ya):
        raise LengthMismatch("x and y must have equal length")
    if len(xa) < 2:
        raise TooFew("need at least two pairs")
    sx = np.sign(xa[:, None] - xa[None, :])
    sy = np.sign(ya[:, None] - ya[None, :])
    iu = np.triu_indices(len(xa), k=1)
    prod = sx[iu] * sy[iu]
    concordant = int((prod > 0).sum())
    discordant = int((prod < 0).sum())
    ties_x = int((sx[iu] == 0).sum())
    ties_y = int((sy[iu] == 0).sum())
    n0 = len(iu[0])
    denom = math.sqrt((n0 - ties_x) * (n0 - ties_y))
    if denom == 0:
        raise Degenerate("constant input has no defined rank correlation")
    return (concordant - discordant) / denom


def ordinal_weights(n_categories: int) -> np.ndarray:
    """Ordinal agreement weights on an ordered categorical scale.

    w[k, l] = 1 - C(|k - l| + 1, 2) / C(K, 2); the diagonal is 1 and the
    extreme pair has weight 0.
    """
    if n_categories < 2:
        raise ValueError("need at least two categories")
    k = np.arange(n_categories)
    dist = np.abs(k[:, None] - k[None, :])
    return 1.0 - dist * (dist + 1) / 2.0 / math.comb(n_categories, 2)


def gwet_ac2(ratings: Sequence[Sequence], categories: Sequence) -> AgreementResult:
    """Gwet's AC2: chance-corrected agreement with ordinal weights.

    Parameters
    ----------
    ratings : item-by-rater matrix; entries are category values or None
        (NaN also accepted) for missing ratings.
    categories : the ordered category values of the rating scale.

    Items rated by fewer than two raters contribute to the chance
    estimate but not to observed agreement.
    """
    cats = list(categories)
    K = len(cats)
    if K < 2:
        raise ValueError("need at least two categories")
    index = {c: i for i, c in enumerate(cats)}
    rows = []
    n_raters = 0
    for row in ratings:
        row = list(row)
        n_raters = max(n_raters, len(row))
        counts = np.zeros(K, dtype=float)
        for value in row:
            if value is None or (isinstance(value, float) and math.isnan(value)):
                continue
            if value not in index:
                raise ValueError(f"rating {value!r} is not a declared category")
            counts[index[value]] += 1
        rows.append(counts)
    if not rows:
        raise InsufficientRaters("no items")
    r = np.asarray(rows)
    r_i = r.sum(axis=1)
    scorable = r_i >= 2
    if not scorable.any():
        raise InsufficientRaters("need at least one item rated by two raters")

    w = ordinal_weights(K)
    rated = r_i >= 1
    pi_k = (r[rated] / r_i[rated, None]).mean(axis=0)
    pe = float(w.sum() / (K * (K - 1)) * (pi_k * (1.0 - pi_k)).sum())

    r_star = r @ w.T
    per_item = (r[scorable] * (r_star[scorable] - 1.0)).sum(axis=1) / (
        r_i[scorable] * (r_i[scorable] - 1.0)
    )
    pa = float(per_item.mean())
    if pe == 1.0:
        raise Degenerate("chance agreement is 1")
    return AgreementResult(
        ac2=(pa - pe) / (1.0 - pe),
        n_items=len(rows),
        n_raters=n_raters,
        n_categories=K,
    )


def cosine_similarity(u: Sequence[float], v: Sequence[float]) -> float:
    ua = np.asarray(u, dtype=float)
    va = np.asarray(v, dtype=float)
    if ua.shape != va.shape:
        raise LengthMismatch("vectors must share one dimensionality")
    nu = float(np.linalg.norm(ua))
    nv = float(np.linalg.norm(va))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine undefined for zero vector")
    return float(ua @ va) / (nu * nv)


def embedding_drift(v_orig: Sequence[float], v_trans: Sequence[float]) -> float:
    """Drift between an original and a transformed embedding: 1 - cosine."""
    return 1.0 - cosine_similarity(v_orig, v_trans)


def split_half_reliability(
    scores: Mapping[str, Mapping[str, float]],
    dataset_tasks: Mapping[str, str],
    n_splits: int = 1000,
    seed: int = 0,
) -> float:
    """Median Spearman correlation of model scores across task-stratified
    random dataset halves.

    Parameters
    ----------
    scores : model -> dataset -> score (runs already averaged).
    dataset_tasks : dataset -> task label used for stratification.

    Each split divides every task's datasets as evenly as possible
    between two halves (an odd leftover goes to a seeded coin flip);
    a model's half-score is the mean over that half's datasets, and the
    split's value is the Spearman correlation between the two resulting
    model vectors. Per-split seeds are derived from (seed, split index)
    so the result is independent of execution order.
    """
    models = sorted(scores)
    if len(models) < 3:
        raise TooFewModels("need at least three models")
    datasets = sorted(dataset_tasks)
    if len(datasets) < 2:
        raise TooFew("need at least two datasets")
    by_task: dict[str, list[str]] = {}
    for ds in datasets:
        by_task.setdefault(dataset_tasks[ds], []).append(ds)

    matrix = np.asarray([[scores[m][d] for d in datasets] for m in models])
    ds_index = {d: i for i, d in enumerate(datasets)}

    rhos = np.empty(n_splits)
    for split in range(n_splits):
        rng = np.random.default_rng([seed, split])
        half_a: list[int] = []
        half_b: list[int] = []
        for task in sorted(by_task):
            members = list(by_task[task])
            rng.shuffle(members)
            half = len(members) // 2
            a, b = members[:half], members[half : 2 * half]
            leftover = members[2 * half :]
            if leftover:
                (a if rng.integers(2) == 0 else b).append(leftover[0])
            half_a.extend(ds_index[d] for d in a)
            half_b.extend(ds_index[d] for d in b)
        if not half_a or not half_b:
            # degenerate split (single dataset ended up alone); skip by
            # scoring full agreement with itself
            rhos[split] = np.nan
            continue
        mean_a = matrix[:, half_a].mean(axis=1)
        mean_b = matrix[:, half_b].mean(axis=1)
        try:
            rhos[split] = spearman_rho(mean_a, mean_b)
        except Degenerate:
            rhos[split] = np.nan
    return float(np.nanmedian(rhos))
