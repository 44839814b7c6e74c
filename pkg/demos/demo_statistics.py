"""Tour of the non-parametric statistics toolbox on small inputs.

    python demos/demo_statistics.py
"""

import numpy as np

from hteb import stats


def main():
    rng = np.random.default_rng(1337)
    deltas = [float(d) for d in np.round(rng.normal(loc=-4.0, scale=3.0, size=12), 2)]
    print("paired per-dataset deltas:", deltas)

    w, p = stats.wilcoxon_signed_rank(deltas)
    print(f"\nWilcoxon signed-rank: W+ = {w}, two-sided p = {p:.6f} (exact, n <= 25)")

    hl = stats.hodges_lehmann(deltas)
    print(f"Hodges-Lehmann shift = {hl.shift:.3f}, 95% CI [{hl.ci_low:.3f}, {hl.ci_high:.3f}]"
          f"  (from {len(deltas) * (len(deltas) + 1) // 2} Walsh averages)")

    family = [p, 0.03, 0.2, 0.0004]
    print(f"\nHolm correction of {family} -> "
          f"{[round(q, 5) for q in stats.holm_correct(family)]}")

    values = rng.normal(loc=4.45, scale=0.14, size=400)
    low, high = stats.percentile_bootstrap_ci(values, n_boot=10_000, seed=0)
    print(f"\npercentile bootstrap 95% CI for the mean of {len(values)} judge scores: "
          f"[{low:.3f}, {high:.3f}]")

    x = rng.normal(size=10)
    y = x + rng.normal(scale=0.4, size=10)
    print(f"\nSpearman rho = {stats.spearman_rho(x, y):.3f}, "
          f"Kendall tau-b = {stats.kendall_tau(x, y):.3f}")

    ratings = [[4, 4, 5], [2, 2, 2], [5, 4, 5], [3, 3, 4], [1, 2, 1]]
    agreement = stats.gwet_ac2(ratings, [1, 2, 3, 4, 5])
    print(f"\nGwet AC2 (ordinal weights) over {agreement.n_items} items x "
          f"{agreement.n_raters} raters: {agreement.ac2:.4f}")

    v = rng.normal(size=32)
    shifted = v + rng.normal(scale=0.3, size=32)
    print(f"\nembedding drift (1 - cosine): same vector = {stats.embedding_drift(v, v):.4f}, "
          f"perturbed = {stats.embedding_drift(v, shifted):.4f}")


if __name__ == "__main__":
    main()
