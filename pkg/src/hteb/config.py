"""Benchmark configuration: a TOML file, with CLI flags overriding.

Paths inside the file are resolved relative to the file's directory.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .transforms import DEFAULT_RUN_SEEDS, Transformation


@dataclass
class EmbeddingModelConfig:
    id: str
    instruction: Optional[str] = None
    dim: int = 32  # used by the mock transport only


@dataclass
class SelectModelConfig:
    candidates: list[str] = field(default_factory=list)
    probe_manifest: Optional[Path] = None
    shortlist_size: int = 5
    max_items: int = 50
    n_boot: int = 10_000


@dataclass
class BenchmarkConfig:
    generator_id: str
    embedding_models: list[EmbeddingModelConfig]
    dataset_manifests: list[Path]
    run_seeds: list[int] = field(default_factory=lambda: list(DEFAULT_RUN_SEEDS))
    transformations: list[Transformation] = field(default_factory=lambda: list(Transformation))
    chat_url: Optional[str] = None
    embed_url: Optional[str] = None
    api_key: Optional[str] = None
    cache_dir: Path = Path("cache")
    output_dir: Path = Path("out")
    parallelism: int = 4
    max_output_tokens: int = 2048
    n_splits: int = 1000
    split_seed: int = 0
    min_datasets_for_inference: int = 5
    select_model: SelectModelConfig = field(default_factory=SelectModelConfig)

    def validate(self) -> None:
        if not self.run_seeds:
            raise ConfigError("run_seeds must be non-empty")
        if len(set(self.run_seeds)) != len(self.run_seeds):
            raise ConfigError("run_seeds must be distinct")
        if not self.embedding_models:
            raise ConfigError("at least one embedding model is required")
        if not self.dataset_manifests:
            raise ConfigError("at least one dataset manifest is required")
        for manifest in self.dataset_manifests:
            if not Path(manifest).exists():
                raise ConfigError(f"dataset manifest not found: {manifest}")


def load_config(path) -> BenchmarkConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with path.open("rb") as fh:
        raw = tomllib.load(fh)
    base = path.parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    try:
        generator_id = raw["generator"]["id"]
        models = [
            EmbeddingModelConfig(
                id=m["id"],
                instruction=m.get("instruction"),
                dim=int(m.get("dim", 32)),
            )
            for m in raw["embedding_models"]
        ]
        manifests = [resolve(p) for p in raw["datasets"]["manifests"]]
    except KeyError as exc:
        raise ConfigError(f"missing required config key: {exc}") from exc

    run = raw.get("run", {})
    try:
        transformations = [Transformation(t) for t in run.get("transformations", [t.value for t in Transformation])]
    except ValueError as exc:
        raise ConfigError(f"unknown transformation in config: {exc}") from exc

    endpoints = raw.get("endpoints", {})
    paths = raw.get("paths", {})
    report = raw.get("report", {})
    select = raw.get("select_model", {})

    config = BenchmarkConfig(
        generator_id=generator_id,
        embedding_models=models,
        dataset_manifests=manifests,
        run_seeds=[int(s) for s in run.get("seeds", DEFAULT_RUN_SEEDS)],
        transformations=transformations,
        chat_url=endpoints.get("chat_url"),
        embed_url=endpoints.get("embed_url"),
        api_key=endpoints.get("api_key"),
        cache_dir=resolve(paths.get("cache_dir", "cache")),
        output_dir=resolve(paths.get("output_dir", "out")),
        parallelism=int(run.get("parallelism", 4)),
        max_output_tokens=int(run.get("max_output_tokens", 2048)),
        n_splits=int(report.get("n_splits", 1000)),
        split_seed=int(report.get("split_seed", 0)),
        min_datasets_for_inference=int(report.get("min_datasets_for_inference", 5)),
        select_model=SelectModelConfig(
            candidates=list(select.get("candidates", [])),
            probe_manifest=resolve(select["probe_manifest"]) if "probe_manifest" in select else None,
            shortlist_size=int(select.get("shortlist_size", 5)),
            max_items=int(select.get("max_items", 50)),
            n_boot=int(select.get("n_boot", 10_000)),
        ),
    )
    config.validate()
    return config
