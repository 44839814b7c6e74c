"""Command-line entry point wiring config, datasets, gateway and stages.

Subcommands: select-model, transform, evaluate, stats, report, all.
Exit codes: 0 success, 1 fatal config/transport error, 2 completed with
partial failures.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

import click
import numpy as np

from . import qc
from .aggregate import average_runs, per_transformation_inference
from .cache import TransformationCache
from .config import BenchmarkConfig, load_config
from .datasets import (
    EvalDataset,
    apply_condition,
    iter_transform_targets,
    load_dataset,
    write_jsonl,
)
from .errors import BenchmarkError, ConfigError
from .gateway import Gateway, HttpTransport
from .langid import HeuristicLanguageIdentifier
from .mock import MockTransport
from .report import emit_report, headline_lines, stats_payload
from .taskeval import (
    ORIGINAL_CONDITION,
    CachingEmbedder,
    evaluate,
    read_scores_csv,
    write_scores_csv,
)
from .transforms import (
    SPECS,
    RunConfig,
    Transformation,
    apply_transformation,
    transform_dataset,
)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


def build_gateway(config: BenchmarkConfig, mock: Optional[str]) -> Gateway:
    if mock is not None:
        embed_dims = {m.id: m.dim for m in config.embedding_models}
        if mock:
            transport = MockTransport.from_dir(mock, embed_dims=embed_dims)
        else:
            transport = MockTransport(embed_dims=embed_dims)
    else:
        transport = HttpTransport(
            chat_url=config.chat_url, embed_url=config.embed_url, api_key=config.api_key
        )
    return Gateway(
        transport,
        cache=TransformationCache(config.cache_dir),
        parallelism=config.parallelism,
    )


def transform_record_path(config: BenchmarkConfig, dataset_id: str, transformation: str, seed: int) -> Path:
    return config.output_dir / "transforms" / dataset_id / f"{transformation}__{seed}.jsonl"


def run_transform(config: BenchmarkConfig, gateway: Gateway) -> int:
    """Transform every (dataset, transformation, seed); returns the number
    of flagged (failed) records."""
    identifier = HeuristicLanguageIdentifier()
    failures = 0
    for manifest in config.dataset_manifests:
        dataset = load_dataset(manifest)
        originals = {
            (t.item_id, t.field_role): t.text for t in iter_transform_targets(dataset)
        }
        for transformation in config.transformations:
            spec = SPECS[transformation]
            for seed in config.run_seeds:
                out_path = transform_record_path(config, dataset.id, transformation.value, seed)
                cfg = RunConfig(
                    run_seed=seed,
                    generator_id=config.generator_id,
                    max_output_tokens=config.max_output_tokens,
                )
                transformed = transform_dataset(
                    dataset, spec, cfg, gateway, max_workers=config.parallelism
                )
                rows = []
                for record in transformed.records:
                    flags = qc.classify_errors(
                        originals[(record.item_id, record.field_role)],
                        record.final_text,
                        transformation,
                        expected_lang=record.sampled_languages[-1] if record.sampled_languages else None,
                        identifier=identifier,
                    )
                    if record.error:
                        failures += 1
                    row = dataclasses.asdict(record)
                    row["error_flags"] = flags.names()
                    rows.append(row)
                write_jsonl(out_path, rows)
                click.echo(f"transformed {dataset.id} / {transformation.value} / seed {seed} -> {out_path}")
    return failures


def _load_mapping(path: Path) -> dict[tuple[str, str], str]:
    mapping: dict[tuple[str, str], str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            mapping[(row["item_id"], row["field_role"])] = row["final_text"]
    return mapping


def run_evaluate(config: BenchmarkConfig, gateway: Gateway, original_only: bool = False) -> tuple[Path, int]:
    """Score every (model, dataset, condition, run); returns the scores
    path and the number of flagged cells."""
    conditions: list[str] = [ORIGINAL_CONDITION]
    if not original_only:
        conditions += [t.value for t in config.transformations]
    cells = []
    flagged = 0
    for model in config.embedding_models:
        embedder = CachingEmbedder(gateway, model.id, instruction=model.instruction)
        for manifest in config.dataset_manifests:
            dataset = load_dataset(manifest)
            for condition in conditions:
                for seed in config.run_seeds:
                    if condition == ORIGINAL_CONDITION:
                        conditioned: EvalDataset = dataset
                    else:
                        records_path = transform_record_path(config, dataset.id, condition, seed)
                        if not records_path.exists():
                            raise ConfigError(
                                f"missing transformed records {records_path}; run `hteb transform` first"
                            )
                        conditioned = apply_condition(dataset, _load_mapping(records_path))
                    cell = evaluate(model.id, conditioned, condition, seed, embedder)
                    if cell.value is None:
                        flagged += 1
                        click.echo(
                            f"warning: flagged cell ({model.id}, {dataset.id}, {condition}, {seed}): {cell.error}",
                            err=True,
                        )
                    cells.append(cell)
    scores_path = config.output_dir / "scores.csv"
    write_scores_csv(scores_path, cells)
    click.echo(f"wrote {len(cells)} cells -> {scores_path}")
    return scores_path, flagged


def run_report(config: BenchmarkConfig) -> dict:
    scores_path = config.output_dir / "scores.csv"
    if not scores_path.exists():
        raise ConfigError(f"no scores at {scores_path}; run `hteb evaluate` first")
    cells = read_scores_csv(scores_path)
    if not cells:
        raise ConfigError(f"scores file {scores_path} is empty")
    results = emit_report(
        cells,
        config.output_dir / "report",
        n_splits=config.n_splits,
        split_seed=config.split_seed,
        min_datasets_for_inference=config.min_datasets_for_inference,
    )
    for line in headline_lines(results["summaries"]):
        click.echo(line)
    click.echo(f"report bundle -> {config.output_dir / 'report'}")
    return results


def run_select_model(config: BenchmarkConfig, gateway: Gateway) -> dict:
    """Four stages: probe transforms per candidate, error analysis,
    crossover judging of the shortlist, pairwise comparison."""
    select = config.select_model
    if len(select.candidates) < 2:
        raise ConfigError("select_model.candidates must list at least two generators")
    if select.probe_manifest is None:
        raise ConfigError("select_model.probe_manifest is required")
    probe = load_dataset(select.probe_manifest)
    identifier = HeuristicLanguageIdentifier()

    targets = iter_transform_targets(probe)[: select.max_items]
    seed = config.run_seeds[0]

    outputs: dict[tuple[str, str, str], dict[str, str]] = {}
    flags_by_candidate: dict[str, list[qc.ErrorFlags]] = {c: [] for c in select.candidates}
    for candidate in select.candidates:
        cfg = RunConfig(run_seed=seed, generator_id=candidate, max_output_tokens=config.max_output_tokens)
        for transformation in config.transformations:
            spec = SPECS[transformation]
            for target in targets:
                record = apply_transformation(
                    target.text, target.source_lang, spec, cfg, gateway,
                    dataset_id=probe.id, item_id=target.item_id,
                    field_role=target.field_role, item_index=target.text_index,
                )
                flags_by_candidate[candidate].append(
                    qc.classify_errors(
                        target.text, record.final_text, transformation,
                        expected_lang=record.sampled_languages[-1],
                        identifier=identifier,
                    )
                )
                key = (target.item_id, target.field_role, transformation.value)
                outputs.setdefault(key, {})[candidate] = record.final_text

    reports = {c: qc.error_report(flags) for c, flags in flags_by_candidate.items()}
    out_dir = config.output_dir / "select_model"
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "error_rates.csv").open("w", encoding="utf-8") as fh:
        fh.write("generator,error_type,rate_percent\n")
        for candidate in sorted(reports):
            for name in qc.ERROR_TYPES:
                fh.write(f"{candidate},{name},{reports[candidate].rates[name]!r}\n")
            fh.write(f"{candidate},total,{reports[candidate].total!r}\n")

    shortlist = qc.shortlist_generators(
        {c: r.total for c, r in reports.items()}, k=select.shortlist_size
    )
    click.echo(f"shortlist (lowest total error): {', '.join(shortlist)}")

    samples = [
        qc.JudgeSample(
            sample_id=f"{item_id}::{field_role}",
            transformation=Transformation(transformation),
            original=next(t.text for t in targets if t.item_id == item_id and t.field_role == field_role),
            outputs={g: outs[g] for g in shortlist},
        )
        for (item_id, field_role, transformation), outs in sorted(outputs.items())
        if all(g in outs for g in shortlist)
    ]
    matrix = qc.judge_crossover(shortlist, shortlist, samples, gateway)

    with (out_dir / "judge_matrix.csv").open("w", encoding="utf-8") as fh:
        fh.write("judge,generator,mean_score,n\n")
        for judge in matrix.judges:
            for generator in matrix.generators:
                fh.write(
                    f"{judge},{generator},{matrix.cell_means[(judge, generator)]!r},"
                    f"{matrix.cell_counts[(judge, generator)]}\n"
                )

    winner = matrix.winner()
    pairwise = {}
    raw_ps = []
    pairs = [(winner, other) for other in matrix.generators if other != winner]
    # keep only samples scored for every shortlisted generator
    vectors = {g: np.asarray(matrix.sample_means[g]) for g in matrix.generators}
    complete = np.all([np.isfinite(vectors[g]) for g in matrix.generators], axis=0)
    for a, b in pairs:
        raw_ps.append(
            qc.paired_bootstrap_compare(
                vectors[a][complete], vectors[b][complete], n_boot=select.n_boot, seed=seed
            )
        )
    from . import stats as _stats

    holm = _stats.holm_correct(raw_ps)
    for (a, b), p_raw, p_holm in zip(pairs, raw_ps, holm):
        pairwise[f"{a} vs {b}"] = {"p_raw": p_raw, "p_holm": p_holm}

    selection = {
        "winner": winner,
        "column_means": matrix.column_means,
        "shortlist": shortlist,
        "pairwise_vs_winner": pairwise,
        "judged_samples": len(samples),
        "skipped_scores": matrix.skipped,
    }
    (out_dir / "selection.json").write_text(
        json.dumps(selection, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    click.echo(f"selected generator: {winner}")
    return selection


def _common_options(fn):
    fn = click.option(
        "--config", "config_path", default="hteb.toml", show_default=True,
        help="Benchmark config (TOML).",
    )(fn)
    fn = click.option(
        "--seed", "seeds", multiple=True, type=int,
        help="Override run seeds (repeatable).",
    )(fn)
    fn = click.option(
        "--mock", "mock", is_flag=False, flag_value="", default=None,
        help="Use the offline mock transport; optionally a fixtures directory.",
    )(fn)
    return fn


def _load(config_path: str, seeds: tuple[int, ...]) -> BenchmarkConfig:
    config = load_config(config_path)
    if seeds:
        config.run_seeds = list(seeds)
        config.validate()
    return config


@click.group()
def main():
    """Robustness benchmark pipeline for text-embedding models."""


def _fatal(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_FATAL)


@main.command("select-model")
@_common_options
def cmd_select_model(config_path, seeds, mock):
    """Pick a transformation generator: error analysis then judging."""
    try:
        config = _load(config_path, seeds)
        gateway = build_gateway(config, mock)
        run_select_model(config, gateway)
    except (BenchmarkError, OSError, ValueError) as exc:
        _fatal(exc)


@main.command("transform")
@_common_options
def cmd_transform(config_path, seeds, mock):
    """Generate transformed datasets for every transformation and seed."""
    try:
        config = _load(config_path, seeds)
        gateway = build_gateway(config, mock)
        failures = run_transform(config, gateway)
    except (BenchmarkError, OSError, ValueError) as exc:
        _fatal(exc)
    sys.exit(EXIT_PARTIAL if failures else EXIT_OK)


@main.command("evaluate")
@_common_options
@click.option("--original-only", is_flag=True, help="Score only untransformed data.")
def cmd_evaluate(config_path, seeds, mock, original_only):
    """Score every (model, dataset, condition, run) cell."""
    try:
        config = _load(config_path, seeds)
        gateway = build_gateway(config, mock)
        _, flagged = run_evaluate(config, gateway, original_only=original_only)
    except (BenchmarkError, OSError, ValueError) as exc:
        _fatal(exc)
    sys.exit(EXIT_PARTIAL if flagged else EXIT_OK)


@main.command("stats")
@_common_options
def cmd_stats(config_path, seeds, mock):
    """Run the per-transformation inference over existing scores."""
    try:
        config = _load(config_path, seeds)
        scores_path = config.output_dir / "scores.csv"
        if not scores_path.exists():
            raise ConfigError(f"no scores at {scores_path}; run `hteb evaluate` first")
        cells = read_scores_csv(scores_path)
        report = per_transformation_inference(
            average_runs(cells), min_datasets=config.min_datasets_for_inference
        )
        click.echo(json.dumps(stats_payload(report), indent=2, sort_keys=True))
    except (BenchmarkError, OSError, ValueError) as exc:
        _fatal(exc)


@main.command("report")
@_common_options
def cmd_report(config_path, seeds, mock):
    """Aggregate scores into the report bundle and print the headline."""
    try:
        config = _load(config_path, seeds)
        run_report(config)
    except (BenchmarkError, OSError, ValueError) as exc:
        _fatal(exc)


@main.command("all")
@_common_options
def cmd_all(config_path, seeds, mock):
    """Transform, evaluate and report in one go."""
    try:
        config = _load(config_path, seeds)
        gateway = build_gateway(config, mock)
        failures = run_transform(config, gateway)
        _, flagged = run_evaluate(config, gateway)
        run_report(config)
    except (BenchmarkError, OSError, ValueError) as exc:
        _fatal(exc)
    sys.exit(EXIT_PARTIAL if failures or flagged else EXIT_OK)


if __name__ == "__main__":
    main()
