"""Report bundle: CSV/JSON files and a self-contained SVG forest plot.

Outputs are byte-deterministic for identical inputs: groupings are
sorted, floats serialise via repr, and the SVG embeds its row values as
data attributes so they can be checked against stats.json exactly.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence, Union

from .aggregate import (
    InferenceReport,
    average_runs,
    axis_and_total_scores,
    axis_split_half,
    per_transformation_inference,
    ranking_stability,
    transformation_delta_table,
)
from .errors import MissingCondition, TooFew, TooFewModels
from .taskeval import ScoreCell, write_scores_csv
from .transforms import AXIS_TRANSFORMATIONS, Axis

_AXIS_LABELS = {
    Axis.LEXICAL_STYLISTIC.value: "Lexical/Stylistic",
    Axis.LENGTH.value: "Length",
    Axis.LANGUAGE.value: "Language",
}

_AXIS_OF = {t.value: axis.value for axis, members in AXIS_TRANSFORMATIONS.items() for t in members}


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def stats_payload(report: InferenceReport) -> dict:
    return {
        "transformations": [
            {
                "transformation": row.transformation,
                "axis": row.axis,
                "hl_shift": row.hl_shift,
                "ci": [row.ci_low, row.ci_high],
                "p_raw": row.p_raw,
                "p_holm": row.p_holm,
                "median_abs_delta": row.median_abs_delta,
                "n": row.n,
            }
            for row in report.rows
        ],
        "axis_median_abs_delta": report.axis_median_abs_delta,
    }


def forest_svg(report: InferenceReport, width: int = 680) -> str:
    """One row per transformation: HL shift point with CI whiskers.

    Rows with Holm-corrected p >= .05 are greyed out. The SVG has no
    external assets, and each row carries its exact values as data
    attributes.
    """
    rows = report.rows
    row_height = 28
    top, bottom, left, right = 46, 34, 190, 30
    height = top + row_height * len(rows) + bottom
    values = [v for row in rows for v in (row.ci_low, row.ci_high, row.hl_shift)] + [0.0]
    lo, hi = min(values), max(values)
    span = (hi - lo) or 1.0
    lo -= 0.06 * span
    hi += 0.06 * span

    def x(value: float) -> float:
        return left + (value - lo) / (hi - lo) * (width - left - right)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        '<text x="12" y="22" font-size="14" font-weight="bold">'
        "Location shift per transformation (95% CI)</text>",
        f'<line x1="{x(0):.2f}" y1="{top - 10:.2f}" x2="{x(0):.2f}" '
        f'y2="{height - bottom + 6:.2f}" stroke="#888888" stroke-dasharray="4,3"/>',
    ]
    for i, row in enumerate(rows):
        cy = top + row_height * i + row_height / 2
        color = "#999999" if row.p_holm >= 0.05 else "#1f77b4"
        label = row.transformation.replace("_", " ")
        parts.append(
            f'<g data-transformation="{row.transformation}" data-shift="{row.hl_shift!r}" '
            f'data-ci-low="{row.ci_low!r}" data-ci-high="{row.ci_high!r}" '
            f'data-p-holm="{row.p_holm!r}">'
        )
        parts.append(f'<text x="12" y="{cy + 4:.2f}" fill="{color}">{label}</text>')
        parts.append(
            f'<line x1="{x(row.ci_low):.2f}" y1="{cy:.2f}" x2="{x(row.ci_high):.2f}" '
            f'y2="{cy:.2f}" stroke="{color}" stroke-width="2"/>'
        )
        for end in (row.ci_low, row.ci_high):
            parts.append(
                f'<line x1="{x(end):.2f}" y1="{cy - 5:.2f}" x2="{x(end):.2f}" '
                f'y2="{cy + 5:.2f}" stroke="{color}" stroke-width="2"/>'
            )
        parts.append(f'<circle cx="{x(row.hl_shift):.2f}" cy="{cy:.2f}" r="4" fill="{color}"/>')
        parts.append("</g>")
    axis_y = height - bottom + 6
    parts.append(
        f'<line x1="{left}" y1="{axis_y}" x2="{width - right}" y2="{axis_y}" stroke="#333333"/>'
    )
    for value in (lo + 0.06 * span, 0.0, hi - 0.06 * span):
        parts.append(
            f'<text x="{x(value):.2f}" y="{axis_y + 16}" text-anchor="middle" '
            f'fill="#333333">{value:.1f}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def headline_lines(summaries) -> list[str]:
    lines = []
    for s in summaries:
        axes = " ".join(
            f"{_AXIS_LABELS[a.value]}={s.axis_scores[a.value]:.2f}" for a in Axis
        )
        lines.append(
            f"{s.model_id} {s.original:.2f} -> {s.total:.2f} ({s.delta:+.2f})  [{axes}]"
        )
    return lines


def emit_report(
    cells: Sequence[ScoreCell],
    out_dir: Union[str, Path],
    n_splits: int = 1000,
    split_seed: int = 0,
    min_datasets_for_inference: int = 5,
) -> dict:
    """Write the full report bundle into out_dir.

    Files: scores.csv, deltas.csv, stats.json, ranking.json,
    splithalf.json, forest.svg. Returns the computed pieces for callers
    that also print a headline.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    write_scores_csv(out / "scores.csv", sorted(
        cells, key=lambda c: (c.model_id, c.dataset_id, c.condition, c.run_seed)
    ))
    run_cells = average_runs(cells)

    summaries = [
        axis_and_total_scores(run_cells, model)
        for model in sorted({c.model_id for c in run_cells})
    ]

    deltas = transformation_delta_table(run_cells)
    delta_lines = ["model,transformation,axis,delta_pp"]
    for (model, transformation) in sorted(deltas):
        delta_lines.append(
            f"{model},{transformation},{_AXIS_OF[transformation]},{deltas[(model, transformation)]!r}"
        )
    (out / "deltas.csv").write_text("\n".join(delta_lines) + "\n", encoding="utf-8")

    inference = per_transformation_inference(run_cells, min_datasets=min_datasets_for_inference)
    _write_json(out / "stats.json", stats_payload(inference))
    (out / "forest.svg").write_text(forest_svg(inference), encoding="utf-8")

    ranking_payload = {}
    for level in ("transformation", "axis", "overall"):
        ranking_payload[level] = [
            {"key": r.key, "mean_tau": r.mean_tau, "sd_tau": r.sd_tau, "n_datasets": len(r.per_dataset)}
            for r in ranking_stability(run_cells, level=level)
        ]
    _write_json(out / "ranking.json", ranking_payload)

    splithalf_rows = []
    for axis in Axis:
        try:
            median_rho: Optional[float] = axis_split_half(
                run_cells, axis, n_splits=n_splits, seed=split_seed
            )
            note = None
        except (TooFewModels, TooFew, MissingCondition) as exc:
            median_rho = None
            note = str(exc)
        splithalf_rows.append(
            {
                "axis": axis.value,
                "median_rho": median_rho,
                "n_splits": n_splits,
                "seed": split_seed,
                "note": note,
            }
        )
    _write_json(out / "splithalf.json", splithalf_rows)

    return {
        "summaries": summaries,
        "deltas": deltas,
        "inference": inference,
        "splithalf": splithalf_rows,
    }
