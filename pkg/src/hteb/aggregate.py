"""Aggregation of raw score cells into axis scores, deltas and inference.

Aggregation order is fixed: runs -> datasets -> transformations -> axes.
Input row order never changes a result; every grouping is over sorted
keys.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import stats
from .errors import AllZero, Degenerate, MissingCondition, TooFewDatasets, TooFewModels
from .taskeval import ORIGINAL_CONDITION, ScoreCell
from .transforms import AXIS_TRANSFORMATIONS, Axis, Transformation

logger = logging.getLogger(__name__)

CANONICAL_ORDER = [t.value for t in Transformation]


@dataclass
class RunAveragedCell:
    """Mean over run seeds of one (model, dataset, condition) cell."""

    model_id: str
    dataset_id: str
    task: str
    condition: str
    metric: str
    value: float
    sd: float
    n_runs: int


@dataclass
class ModelSummary:
    """Original, per-axis and total scores for one model (percent)."""

    model_id: str
    original: float
    axis_scores: dict[str, float]
    total: float

    @property
    def delta(self) -> float:
        return self.total - self.original


@dataclass
class TransformationInference:
    transformation: str
    axis: str
    n: int
    hl_shift: float
    ci_low: float
    ci_high: float
    p_raw: float
    p_holm: float
    median_abs_delta: float


@dataclass
class InferenceReport:
    rows: list[TransformationInference]
    axis_median_abs_delta: dict[str, float]


@dataclass
class RankingSummary:
    key: str
    mean_tau: float
    sd_tau: float
    per_dataset: dict[str, float] = field(default_factory=dict)


def average_runs(cells: Sequence[ScoreCell]) -> list[RunAveragedCell]:
    """Arithmetic mean over run seeds per (model, dataset, condition).

    Flagged cells (missing values) are dropped with a warning; the sd is
    the sample standard deviation over runs, 0 for a single run.
    """
    groups: dict[tuple[str, str, str], list[ScoreCell]] = {}
    for cell in cells:
        groups.setdefault((cell.model_id, cell.dataset_id, cell.condition), []).append(cell)
    out = []
    for (model, dataset, condition) in sorted(groups):
        members = groups[(model, dataset, condition)]
        values = [c.value for c in members if c.value is not None and math.isfinite(c.value)]
        if not values:
            logger.warning("no usable runs for (%s, %s, %s); cell dropped", model, dataset, condition)
            continue
        if len(values) < len(members):
            logger.warning(
                "(%s, %s, %s): %d of %d runs flagged",
                model, dataset, condition, len(members) - len(values), len(members),
            )
        arr = np.asarray(values, dtype=float)
        sd = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        out.append(
            RunAveragedCell(
                model_id=model,
                dataset_id=dataset,
                task=members[0].task,
                condition=condition,
                metric=members[0].metric,
                value=float(arr.mean()),
                sd=sd,
                n_runs=len(arr),
            )
        )
    return out


def _index(cells: Sequence[RunAveragedCell]) -> dict[tuple[str, str, str], RunAveragedCell]:
    return {(c.model_id, c.dataset_id, c.condition): c for c in cells}


def _models(cells: Sequence[RunAveragedCell]) -> list[str]:
    return sorted({c.model_id for c in cells})


def _datasets(cells: Sequence[RunAveragedCell]) -> list[str]:
    return sorted({c.dataset_id for c in cells})


def _conditions_present(cells: Sequence[RunAveragedCell]) -> list[str]:
    present = {c.condition for c in cells} - {ORIGINAL_CONDITION}
    return [t for t in CANONICAL_ORDER if t in present]


def _require(index, model: str, dataset: str, condition: str) -> float:
    cell = index.get((model, dataset, condition))
    if cell is None:
        raise MissingCondition(f"missing cell ({model}, {dataset}, {condition})")
    return cell.value


def axis_and_total_scores(
    cells: Sequence[RunAveragedCell], model_id: str, scale: float = 100.0
) -> ModelSummary:
    """Original mean, per-axis means and the axis-balanced total.

    Original is the mean over datasets of original-condition cells; each
    transformation is averaged over datasets, each axis over its
    transformations, and the total over the three axes.
    """
    own = [c for c in cells if c.model_id == model_id]
    index = _index(own)
    datasets = _datasets(own)
    if not datasets:
        raise MissingCondition(f"no cells for model {model_id!r}")
    original = scale * float(
        np.mean([_require(index, model_id, d, ORIGINAL_CONDITION) for d in datasets])
    )
    transformation_means = {
        t.value: scale * float(np.mean([_require(index, model_id, d, t.value) for d in datasets]))
        for t in Transformation
    }
    axis_scores = {
        axis.value: float(np.mean([transformation_means[t.value] for t in members]))
        for axis, members in AXIS_TRANSFORMATIONS.items()
    }
    total = float(np.mean([axis_scores[a.value] for a in Axis]))
    return ModelSummary(model_id=model_id, original=original, axis_scores=axis_scores, total=total)


def summary_from_axis_values(
    model_id: str, original: float, axis_scores: dict[str, float]
) -> ModelSummary:
    """Build a summary directly from per-axis values (already percent)."""
    total = float(np.mean([axis_scores[a.value] for a in Axis]))
    return ModelSummary(model_id=model_id, original=original, axis_scores=dict(axis_scores), total=total)


def transformation_delta_table(
    cells: Sequence[RunAveragedCell], scale: float = 100.0
) -> dict[tuple[str, str], float]:
    """Mean score delta (transformed - original) per model and
    transformation, averaged over datasets; negative means degradation.

    Datasets where a model lacks either cell are excluded from that
    model's mean with a warning rather than imputed.
    """
    index = _index(cells)
    table: dict[tuple[str, str], float] = {}
    for model in _models(cells):
        datasets = sorted({c.dataset_id for c in cells if c.model_id == model})
        for t in _conditions_present(cells):
            deltas = []
            for d in datasets:
                transformed = index.get((model, d, t))
                original = index.get((model, d, ORIGINAL_CONDITION))
                if transformed is None or original is None:
                    logger.warning(
                        "model %s lacks (%s, %s) cells; dataset excluded from its delta",
                        model, d, t,
                    )
                    continue
                deltas.append(transformed.value - original.value)
            if deltas:
                table[(model, t)] = scale * float(np.mean(deltas))
    return table


def dataset_level_deltas(
    cells: Sequence[RunAveragedCell], transformation: str, scale: float = 100.0
) -> stats.PairedDeltas:
    """Per-dataset paired deltas: mean over models of (transformed -
    original), runs already averaged.

    A model missing either cell for a dataset is excluded from that
    dataset's cross-model mean with a warning; values are never imputed.
    """
    index = _index(cells)
    models = _models(cells)
    datasets = _datasets(cells)
    labels = []
    deltas = []
    for dataset in datasets:
        per_model = []
        for m in models:
            transformed = index.get((m, dataset, transformation))
            original = index.get((m, dataset, ORIGINAL_CONDITION))
            if transformed is None or original is None:
                logger.warning(
                    "model %s lacks (%s, %s) cells; excluded from this dataset's delta",
                    m, dataset, transformation,
                )
                continue
            per_model.append(transformed.value - original.value)
        if not per_model:
            raise MissingCondition(f"no model has both cells for ({dataset}, {transformation})")
        labels.append(dataset)
        deltas.append(scale * float(np.mean(per_model)))
    return stats.PairedDeltas(labels=labels, deltas=deltas)


def per_transformation_inference(
    cells: Sequence[RunAveragedCell],
    confidence: float = 0.95,
    min_datasets: int = 5,
) -> InferenceReport:
    """Signed-rank tests and HL shifts on dataset-level paired deltas.

    One test per transformation; the family of p-values is
    Holm-corrected jointly. Axis-level medians of absolute deltas pool
    the axis's transformations.
    """
    datasets = _datasets(cells)
    if len(datasets) < min_datasets:
        raise TooFewDatasets(f"need at least {min_datasets} datasets, have {len(datasets)}")
    conditions = _conditions_present(cells)
    per_t: dict[str, stats.PairedDeltas] = {
        t: dataset_level_deltas(cells, t) for t in conditions
    }
    p_raw = {}
    hl = {}
    for t, paired in per_t.items():
        try:
            _, p = stats.wilcoxon_signed_rank(paired.deltas)
        except AllZero:
            # no nonzero difference anywhere: no evidence of a shift
            p = 1.0
        p_raw[t] = p
        hl[t] = stats.hodges_lehmann(paired.deltas, confidence=confidence)
    holm = dict(zip(conditions, stats.holm_correct([p_raw[t] for t in conditions])))

    axis_of = {t.value: axis.value for axis, members in AXIS_TRANSFORMATIONS.items() for t in members}
    rows = [
        TransformationInference(
            transformation=t,
            axis=axis_of[t],
            n=len(per_t[t].deltas),
            hl_shift=hl[t].shift,
            ci_low=hl[t].ci_low,
            ci_high=hl[t].ci_high,
            p_raw=p_raw[t],
            p_holm=holm[t],
            median_abs_delta=float(np.median(np.abs(per_t[t].deltas))),
        )
        for t in conditions
    ]
    axis_median = {}
    for axis, members in AXIS_TRANSFORMATIONS.items():
        pooled = [
            abs(d) for t in members if t.value in per_t for d in per_t[t.value].deltas
        ]
        if pooled:
            axis_median[axis.value] = float(np.median(pooled))
    return InferenceReport(rows=rows, axis_median_abs_delta=axis_median)


def _axis_mean_condition(
    index, model: str, dataset: str, members: Sequence[Transformation]
) -> float:
    return float(np.mean([_require(index, model, dataset, t.value) for t in members]))


def ranking_stability(
    cells: Sequence[RunAveragedCell],
    level: str = "transformation",
) -> list[RankingSummary]:
    """Kendall tau between original and transformed model rankings.

    level: "transformation" (one summary per transformation), "axis"
    (transformed score = mean over the axis's transformations) or
    "overall" (axis-balanced total per model-dataset). Each summary is
    the mean and sample sd of per-dataset taus.
    """
    models = _models(cells)
    if len(models) < 2:
        raise TooFewModels("need at least two models")
    index = _index(cells)
    datasets = _datasets(cells)

    def summarise(key: str, transformed_of) -> RankingSummary:
        per_dataset = {}
        for dataset in datasets:
            original = []
            transformed = []
            for m in models:
                try:
                    o = _require(index, m, dataset, ORIGINAL_CONDITION)
                    t = transformed_of(m, dataset)
                except MissingCondition:
                    logger.warning(
                        "model %s lacks cells on %s for %s; excluded from this dataset's tau",
                        m, dataset, key,
                    )
                    continue
                original.append(o)
                transformed.append(t)
            if len(original) < 2:
                logger.warning("dataset %s has fewer than two complete models for %s; skipped", dataset, key)
                continue
            try:
                per_dataset[dataset] = stats.kendall_tau(original, transformed)
            except Degenerate:
                logger.warning("dataset %s has constant model scores for %s; skipped", dataset, key)
        if not per_dataset:
            raise TooFewModels(f"no dataset has two complete models for {key}")
        taus = np.asarray(list(per_dataset.values()))
        sd = float(taus.std(ddof=1)) if len(taus) > 1 else 0.0
        return RankingSummary(key=key, mean_tau=float(taus.mean()), sd_tau=sd, per_dataset=per_dataset)

    if level == "transformation":
        return [
            summarise(t, lambda m, d, _t=t: _require(index, m, d, _t))
            for t in _conditions_present(cells)
        ]
    if level == "axis":
        return [
            summarise(
                axis.value,
                lambda m, d, _members=members: _axis_mean_condition(index, m, d, _members),
            )
            for axis, members in AXIS_TRANSFORMATIONS.items()
        ]
    if level == "overall":
        def overall(m, d):
            return float(
                np.mean([_axis_mean_condition(index, m, d, members) for members in AXIS_TRANSFORMATIONS.values()])
            )

        return [summarise("overall", overall)]
    raise ValueError(f"unknown level {level!r}")


def axis_scores_by_model_dataset(
    cells: Sequence[RunAveragedCell], axis: Axis
) -> tuple[dict[str, dict[str, float]], dict[str, str]]:
    """Per (model, dataset) mean over the axis's transformations, plus the
    dataset -> task map, shaped for split-half reliability."""
    index = _index(cells)
    models = _models(cells)
    datasets = _datasets(cells)
    members = AXIS_TRANSFORMATIONS[axis]
    scores = {
        m: {d: _axis_mean_condition(index, m, d, members) for d in datasets} for m in models
    }
    tasks = {c.dataset_id: c.task for c in cells}
    return scores, tasks


def axis_split_half(
    cells: Sequence[RunAveragedCell],
    axis: Axis,
    n_splits: int = 1000,
    seed: int = 0,
) -> float:
    """Split-half reliability of per-axis model scores (median Spearman
    over task-stratified random dataset halves)."""
    scores, tasks = axis_scores_by_model_dataset(cells, axis)
    return stats.split_half_reliability(scores, tasks, n_splits=n_splits, seed=seed)
