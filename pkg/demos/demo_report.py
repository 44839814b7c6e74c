"""Aggregate synthetic score cells into the full report bundle.

Builds a plausible grid of per-run scores for three models on six
datasets, then writes scores.csv, deltas.csv, stats.json, ranking.json,
splithalf.json and forest.svg into out/demo-report/.

    python demos/demo_report.py
"""

from pathlib import Path

import numpy as np

from hteb.report import emit_report, headline_lines
from hteb.taskeval import ORIGINAL_CONDITION, ScoreCell
from hteb.transforms import SPECS, Axis, Transformation

MODELS = {"embed-alpha": 0.72, "embed-beta": 0.66, "embed-gamma": 0.58}
DATASETS = {
    "news-sts": "sts", "bio-sts": "sts", "forum-retrieval": "retrieval",
    "web-retrieval": "retrieval", "intent-cls": "classification", "review-cls": "classification",
    "paper-clustering": "clustering", "tweet-pairs": "pair_classification",
    "qa-rerank": "reranking", "doc-summ": "summarisation",
}
# characteristic degradation per axis, in score points; the lexical axis
# barely moves so its rows stay non-significant after Holm correction
AXIS_DROP = {Axis.LEXICAL_STYLISTIC: 0.002, Axis.LENGTH: 0.05, Axis.LANGUAGE: 0.12}


def main():
    rng = np.random.default_rng(7)
    cells = []
    for model, base in MODELS.items():
        for dataset, task in DATASETS.items():
            level = float(np.clip(base + rng.normal(scale=0.05), 0.2, 0.95))
            for seed in (1337, 1338, 1339):
                cells.append(ScoreCell(model, dataset, task, ORIGINAL_CONDITION, seed,
                                       "metric", level + float(rng.normal(scale=0.002))))
                for t in Transformation:
                    drop = AXIS_DROP[SPECS[t].axis] * float(rng.uniform(0.6, 1.4))
                    drop += float(rng.normal(scale=0.004))
                    cells.append(ScoreCell(model, dataset, task, t.value, seed, "metric",
                                           max(0.05, level - drop)))

    out = Path("out/demo-report")
    results = emit_report(cells, out, n_splits=300, split_seed=0, min_datasets_for_inference=5)

    print("headline (original -> axis-balanced total):")
    for line in headline_lines(results["summaries"]):
        print(" ", line)
    print("\nper-transformation inference:")
    for row in results["inference"].rows:
        flag = "" if row.p_holm < 0.05 else "  (not significant)"
        print(f"  {row.transformation:<22} shift {row.hl_shift:+.2f} "
              f"CI [{row.ci_low:+.2f}, {row.ci_high:+.2f}] p_holm {row.p_holm:.4f}{flag}")
    print(f"\nbundle written to {out}/ (open forest.svg in a browser)")


if __name__ == "__main__":
    main()
