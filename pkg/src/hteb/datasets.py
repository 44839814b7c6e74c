"""Benchmark dataset model and file formats.

A dataset lives in a directory with a manifest.json:

    {"id": ..., "task": ..., "languages": [...], "paths": {...}}

and JSONL payload files whose row schemas depend on the task:

    classification  train/test rows {id, text, label, lang?}
    clustering      items rows {id, text, label, lang?}
    pair_classification  items rows {id, sentence1, sentence2, label, lang?}
    reranking       items rows {id, query, positive: [...], negative: [...], lang?}
    retrieval       queries rows {id, text, lang?}; corpus rows {id, text};
                    qrels rows {query_id, doc_id, relevance}
    sts / str       items rows {id, sentence1, sentence2, score, lang?}
    summarisation   items rows {id, text?, human_summaries, machine_summaries,
                    relevance, lang?}

Rows without a lang fall back to the dataset's primary language.
"""

from __future__ import annotations

import copy
import dataclasses
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from .transforms import TransformRecord


class Task(str, Enum):
    CLASSIFICATION = "classification"
    CLUSTERING = "clustering"
    PAIR_CLASSIFICATION = "pair_classification"
    RERANKING = "reranking"
    RETRIEVAL = "retrieval"
    STS = "sts"
    STR = "str"
    SUMMARISATION = "summarisation"


# Retrieval-style tasks: only the queries are transformed.
QUERY_ONLY_TASKS = frozenset({Task.RETRIEVAL, Task.RERANKING})


@dataclass
class LabeledText:
    id: str
    text: str
    label: str
    lang: Optional[str] = None


@dataclass
class ScoredPair:
    id: str
    sentence1: str
    sentence2: str
    value: float
    lang: Optional[str] = None


@dataclass
class RerankExample:
    id: str
    query: str
    positive: list[str]
    negative: list[str]
    lang: Optional[str] = None


@dataclass
class RetrievalQuery:
    id: str
    text: str
    lang: Optional[str] = None


@dataclass
class Doc:
    id: str
    text: str


@dataclass
class SummDoc:
    id: str
    human_summaries: list[str]
    machine_summaries: list[str]
    relevance: list[float]
    text: str = ""
    lang: Optional[str] = None


@dataclass
class ClassificationData:
    train: list[LabeledText]
    test: list[LabeledText]


@dataclass
class ClusteringData:
    items: list[LabeledText]


@dataclass
class PairClassificationData:
    pairs: list[ScoredPair]


@dataclass
class RerankingData:
    examples: list[RerankExample]


@dataclass
class RetrievalData:
    queries: list[RetrievalQuery]
    corpus: list[Doc]
    qrels: dict[str, dict[str, int]]


@dataclass
class StsData:
    pairs: list[ScoredPair]


@dataclass
class SummarisationData:
    docs: list[SummDoc]


@dataclass
class EvalDataset:
    id: str
    task: Task
    languages: list[str]
    data: object

    @property
    def primary_language(self) -> str:
        return self.languages[0] if self.languages else "English"


@dataclass
class TransformTarget:
    """One transformable text field with its stable sampling index."""

    item_id: str
    field_role: str
    text: str
    source_lang: str
    text_index: int


def _read_jsonl(path: Path) -> list[dict]:
    rows = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_jsonl(path: Union[str, Path], rows: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def load_dataset(manifest_path: Union[str, Path]) -> EvalDataset:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    task = Task(manifest["task"])
    paths = {name: base / rel for name, rel in manifest["paths"].items()}

    if task is Task.CLASSIFICATION:
        data = ClassificationData(
            train=[LabeledText(str(r["id"]), r["text"], str(r["label"]), r.get("lang")) for r in _read_jsonl(paths["train"])],
            test=[LabeledText(str(r["id"]), r["text"], str(r["label"]), r.get("lang")) for r in _read_jsonl(paths["test"])],
        )
    elif task is Task.CLUSTERING:
        data = ClusteringData(
            items=[LabeledText(str(r["id"]), r["text"], str(r["label"]), r.get("lang")) for r in _read_jsonl(paths["items"])]
        )
    elif task is Task.PAIR_CLASSIFICATION:
        data = PairClassificationData(
            pairs=[ScoredPair(str(r["id"]), r["sentence1"], r["sentence2"], float(r["label"]), r.get("lang")) for r in _read_jsonl(paths["items"])]
        )
    elif task is Task.RERANKING:
        data = RerankingData(
            examples=[
                RerankExample(str(r["id"]), r["query"], list(r["positive"]), list(r["negative"]), r.get("lang"))
                for r in _read_jsonl(paths["items"])
            ]
        )
    elif task is Task.RETRIEVAL:
        qrels: dict[str, dict[str, int]] = {}
        for r in _read_jsonl(paths["qrels"]):
            qrels.setdefault(str(r["query_id"]), {})[str(r["doc_id"])] = int(r["relevance"])
        data = RetrievalData(
            queries=[RetrievalQuery(str(r["id"]), r["text"], r.get("lang")) for r in _read_jsonl(paths["queries"])],
            corpus=[Doc(str(r["id"]), r["text"]) for r in _read_jsonl(paths["corpus"])],
            qrels=qrels,
        )
    elif task in (Task.STS, Task.STR):
        data = StsData(
            pairs=[ScoredPair(str(r["id"]), r["sentence1"], r["sentence2"], float(r["score"]), r.get("lang")) for r in _read_jsonl(paths["items"])]
        )
    elif task is Task.SUMMARISATION:
        data = SummarisationData(
            docs=[
                SummDoc(
                    id=str(r["id"]),
                    human_summaries=list(r["human_summaries"]),
                    machine_summaries=list(r["machine_summaries"]),
                    relevance=[float(x) for x in r["relevance"]],
                    text=r.get("text", ""),
                    lang=r.get("lang"),
                )
                for r in _read_jsonl(paths["items"])
            ]
        )
    else:  # pragma: no cover
        raise ValueError(f"unknown task {task}")

    ds = EvalDataset(
        id=manifest["id"],
        task=task,
        languages=list(manifest.get("languages", ["English"])),
        data=data,
    )
    _validate(ds)
    return ds


def _validate(ds: EvalDataset) -> None:
    data = ds.data
    if not iter_transform_targets(ds):
        raise ValueError(f"{ds.id}: dataset has no text items")
    if ds.task is Task.CLASSIFICATION:
        if not data.train or not data.test:
            raise ValueError(f"{ds.id}: classification needs train and test items")
    elif ds.task is Task.RETRIEVAL:
        if not data.queries or not data.corpus:
            raise ValueError(f"{ds.id}: retrieval needs queries and corpus")
        doc_ids = {d.id for d in data.corpus}
        for qid, rels in data.qrels.items():
            missing = set(rels) - doc_ids
            if missing:
                raise ValueError(f"{ds.id}: qrels reference unknown docs {sorted(missing)}")
    elif ds.task in (Task.STS, Task.STR):
        import math

        for pair in data.pairs:
            if not math.isfinite(pair.value):
                raise ValueError(f"{ds.id}: non-finite gold score on {pair.id}")


def iter_transform_targets(ds: EvalDataset) -> list[TransformTarget]:
    """Enumerate the text fields a transformation applies to, in a stable
    order with stable per-text indices."""
    lang = ds.primary_language
    targets: list[TransformTarget] = []
    idx = 0

    def add(item_id: str, role: str, text: str, item_lang: Optional[str]):
        nonlocal idx
        targets.append(TransformTarget(item_id, role, text, item_lang or lang, idx))
        idx += 1

    data = ds.data
    if ds.task is Task.CLASSIFICATION:
        for item in data.train:
            add(item.id, "train_text", item.text, item.lang)
        for item in data.test:
            add(item.id, "test_text", item.text, item.lang)
    elif ds.task is Task.CLUSTERING:
        for item in data.items:
            add(item.id, "text", item.text, item.lang)
    elif ds.task in (Task.PAIR_CLASSIFICATION, Task.STS, Task.STR):
        for pair in data.pairs:
            add(pair.id, "sentence1", pair.sentence1, pair.lang)
            add(pair.id, "sentence2", pair.sentence2, pair.lang)
    elif ds.task is Task.RERANKING:
        for ex in data.examples:
            add(ex.id, "query", ex.query, ex.lang)
    elif ds.task is Task.RETRIEVAL:
        for q in data.queries:
            add(q.id, "query", q.text, q.lang)
    elif ds.task is Task.SUMMARISATION:
        for doc in data.docs:
            for j, s in enumerate(doc.machine_summaries):
                add(doc.id, f"machine_summary_{j}", s, doc.lang)
            for j, s in enumerate(doc.human_summaries):
                add(doc.id, f"human_summary_{j}", s, doc.lang)
    return targets


def apply_condition(ds: EvalDataset, mapping: dict[tuple[str, str], str]) -> EvalDataset:
    """Return a copy of the dataset with transformed texts substituted.

    Labels, ids, gold scores and qrels are untouched; fields missing from
    the mapping (and the whole retrieval corpus / reranking candidates)
    keep their original text. Empty transformed texts fall back to the
    original so downstream embedding calls stay well-formed.
    """
    out = copy.deepcopy(ds)

    def sub(item_id: str, role: str, original: str) -> str:
        new = mapping.get((item_id, role))
        return new if new else original

    data = out.data
    if ds.task is Task.CLASSIFICATION:
        for item in data.train:
            item.text = sub(item.id, "train_text", item.text)
        for item in data.test:
            item.text = sub(item.id, "test_text", item.text)
    elif ds.task is Task.CLUSTERING:
        for item in data.items:
            item.text = sub(item.id, "text", item.text)
    elif ds.task in (Task.PAIR_CLASSIFICATION, Task.STS, Task.STR):
        for pair in data.pairs:
            pair.sentence1 = sub(pair.id, "sentence1", pair.sentence1)
            pair.sentence2 = sub(pair.id, "sentence2", pair.sentence2)
    elif ds.task is Task.RERANKING:
        for ex in data.examples:
            ex.query = sub(ex.id, "query", ex.query)
    elif ds.task is Task.RETRIEVAL:
        for q in data.queries:
            q.text = sub(q.id, "query", q.text)
    elif ds.task is Task.SUMMARISATION:
        for doc in data.docs:
            doc.machine_summaries = [
                sub(doc.id, f"machine_summary_{j}", s) for j, s in enumerate(doc.machine_summaries)
            ]
            doc.human_summaries = [
                sub(doc.id, f"human_summary_{j}", s) for j, s in enumerate(doc.human_summaries)
            ]
    return out


def write_transform_records(path: Union[str, Path], records: list[TransformRecord]) -> None:
    write_jsonl(path, [dataclasses.asdict(r) for r in records])


def read_transform_records(path: Union[str, Path]) -> list[TransformRecord]:
    names = {f.name for f in dataclasses.fields(TransformRecord)}
    return [
        TransformRecord(**{k: v for k, v in row.items() if k in names})
        for row in _read_jsonl(Path(path))
    ]
