"""Ingest a completed human-ratings table and summarise it.

Given per-item ratings from several annotators (1-5 Likert, quality and
fluency per transformation), report pooled mean +/- sample sd per
transformation and chance-corrected inter-rater agreement (Gwet's AC2
with ordinal weights). The table here is inline; a real ratings CSV with
columns (transformation, item, rater, quality, fluency) maps onto the
same structure row by row.

    python demos/demo_human_ratings.py
"""

import numpy as np

from hteb import stats

RNG = np.random.default_rng(11)
TRANSFORMATIONS = ("paraphrasing", "expansion", "translation")


def simulate_ratings(center, n_items=40, n_raters=3):
    """Items x raters matrix of 1-5 ratings clustered around a center."""
    base = np.clip(RNG.normal(loc=center, scale=0.8, size=n_items), 1, 5)
    ratings = np.clip(
        np.round(base[:, None] + RNG.normal(scale=0.45, size=(n_items, n_raters))),
        1, 5,
    ).astype(int)
    return ratings


def main():
    scale = [1, 2, 3, 4, 5]
    print(f"{'transformation':<16} {'quality':>16} {'AC2':>7}")
    print("-" * 44)
    for transformation, center in zip(TRANSFORMATIONS, (4.1, 4.4, 4.3)):
        matrix = simulate_ratings(center)
        pooled = matrix.ravel()
        agreement = stats.gwet_ac2(matrix.tolist(), scale)
        print(f"{transformation:<16} {pooled.mean():>9.2f} +/- {pooled.std(ddof=1):.2f}"
              f" {agreement.ac2:>7.2f}")
    print("\nratings are pooled within each transformation before the mean;")
    print("agreement treats each item row as one subject rated by all raters")


if __name__ == "__main__":
    main()
