"""Per-task metrics for embedding models.

All metrics are cosine-based and therefore invariant under uniform
positive scaling of the embedding vectors. Evaluators take an `embed`
callable mapping a list of texts to a 2-D array, which keeps them pure
and lets tests inject hand-built vectors.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import stats
from .datasets import EvalDataset, Task
from .errors import (
    Degenerate,
    EmptyCorpus,
    LabelMismatch,
    NoPositives,
    SingleClass,
    TooFew,
    ZeroVector,
)

ORIGINAL_CONDITION = "original"

Embedder = Callable[[list[str]], np.ndarray]

TASK_METRICS: dict[Task, str] = {
    Task.CLASSIFICATION: "accuracy",
    Task.CLUSTERING: "v_measure",
    Task.PAIR_CLASSIFICATION: "average_precision",
    Task.RERANKING: "map",
    Task.RETRIEVAL: "ndcg_at_10",
    Task.STS: "spearman_rho",
    Task.STR: "spearman_rho",
    Task.SUMMARISATION: "spearman_rho",
}


@dataclass
class ScoreCell:
    """One (model, dataset, condition, run) -> metric value."""

    model_id: str
    dataset_id: str
    task: str
    condition: str
    run_seed: int
    metric: str
    value: Optional[float]
    error: Optional[str] = None


def _normalize_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ZeroVector("zero-norm embedding")
    return matrix / norms


def _pair_similarities(texts1: Sequence[str], texts2: Sequence[str], embed: Embedder) -> np.ndarray:
    emb = np.asarray(embed(list(texts1) + list(texts2)), dtype=float)
    n = len(texts1)
    a = _normalize_rows(emb[:n])
    b = _normalize_rows(emb[n:])
    return (a * b).sum(axis=1)


def eval_sts(pairs: Sequence[tuple[str, str]], gold: Sequence[float], embed: Embedder) -> float:
    """Spearman correlation of pair cosine similarities against gold."""
    if len(pairs) < 3:
        raise TooFew("need at least three pairs")
    sims = _pair_similarities([p[0] for p in pairs], [p[1] for p in pairs], embed)
    gold = np.asarray(list(gold), dtype=float)
    if np.all(sims == sims[0]) or np.all(gold == gold[0]):
        raise Degenerate("constant similarities or constant gold scores")
    return stats.spearman_rho(sims, gold)


def average_precision(scores: Sequence[float], labels: Sequence[int]) -> float:
    """AP of a ranking score against binary labels.

    Mean over positives of precision at each positive's rank; ties are
    broken by stable input order.
    """
    labels = np.asarray(list(labels), dtype=int)
    if labels.sum() == 0 or labels.sum() == len(labels):
        raise SingleClass("need both a positive and a negative example")
    order = np.argsort(-np.asarray(list(scores), dtype=float), kind="stable")
    hits = 0
    precisions = []
    for rank, idx in enumerate(order, start=1):
        if labels[idx] == 1:
            hits += 1
            precisions.append(hits / rank)
    return float(np.mean(precisions))


def eval_pair_classification(
    pairs: Sequence[tuple[str, str]], labels: Sequence[int], embed: Embedder
) -> float:
    """Average precision of cosine similarity as a duplicate detector."""
    sims = _pair_similarities([p[0] for p in pairs], [p[1] for p in pairs], embed)
    return average_precision(sims, labels)


def ndcg_at_k(ranked_relevances: Sequence[float], all_relevances: Sequence[float], k: int = 10) -> float:
    """nDCG@k with linear gains: DCG = sum rel_i / log2(i + 1)."""
    gains = np.asarray(list(ranked_relevances[:k]), dtype=float)
    discounts = 1.0 / np.log2(np.arange(2, len(gains) + 2))
    dcg = float((gains * discounts).sum())
    ideal = np.sort(np.asarray(list(all_relevances), dtype=float))[::-1][:k]
    idcg = float((ideal * (1.0 / np.log2(np.arange(2, len(ideal) + 2)))).sum())
    if idcg == 0:
        return 0.0
    return dcg / idcg


def eval_retrieval(
    queries: Sequence[tuple[str, str]],
    corpus: Sequence[tuple[str, str]],
    qrels: dict[str, dict[str, int]],
    embed: Embedder,
    k: int = 10,
) -> float:
    """Mean nDCG@k over queries; corpus ranked by cosine similarity.

    queries and corpus are (id, text) sequences. Every query must have at
    least one relevant document in the qrels.
    """
    if not corpus:
        raise EmptyCorpus("empty corpus")
    doc_ids = [d[0] for d in corpus]
    doc_emb = _normalize_rows(np.asarray(embed([d[1] for d in corpus]), dtype=float))
    query_emb = _normalize_rows(np.asarray(embed([q[1] for q in queries]), dtype=float))
    sims = query_emb @ doc_emb.T
    scores = []
    for qi, (qid, _) in enumerate(queries):
        rels = qrels.get(qid, {})
        if not rels or all(v <= 0 for v in rels.values()):
            raise ValueError(f"query {qid!r} has no relevant document")
        order = np.argsort(-sims[qi], kind="stable")
        ranked = [rels.get(doc_ids[j], 0) for j in order]
        scores.append(ndcg_at_k(ranked, list(rels.values()), k))
    return float(np.mean(scores))


def eval_reranking(
    examples: Sequence[tuple[str, list[str], list[str]]], embed: Embedder
) -> float:
    """MAP over queries: AP of the cosine-ranked candidate list each.

    examples are (query, positives, negatives) triples.
    """
    ap_values = []
    for query, positives, negatives in examples:
        if not positives or not negatives:
            raise NoPositives("each query needs at least one positive and one negative")
        texts = [query] + list(positives) + list(negatives)
        emb = _normalize_rows(np.asarray(embed(texts), dtype=float))
        sims = emb[1:] @ emb[0]
        labels = [1] * len(positives) + [0] * len(negatives)
        ap_values.append(average_precision(sims, labels))
    if not ap_values:
        raise NoPositives("no queries")
    return float(np.mean(ap_values))


def eval_classification(
    train_texts: Sequence[str],
    train_labels: Sequence[str],
    test_texts: Sequence[str],
    test_labels: Sequence[str],
    embed: Embedder,
    seed: int = 0,
) -> float:
    """Accuracy of a multinomial logistic regression over embeddings.

    L2 regularisation strength 1.0, at most 200 optimiser iterations;
    lbfgs starts from zero weights, so the fit is deterministic.
    """
    from sklearn.linear_model import LogisticRegression

    train_set = set(train_labels)
    if not set(test_labels) <= train_set:
        raise LabelMismatch("test labels missing from the training split")
    x_train = np.asarray(embed(list(train_texts)), dtype=float)
    x_test = np.asarray(embed(list(test_texts)), dtype=float)
    clf = LogisticRegression(C=1.0, max_iter=200, random_state=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        clf.fit(x_train, list(train_labels))
    predictions = clf.predict(x_test)
    return float(np.mean(predictions == np.asarray(list(test_labels))))


def v_measure(true_labels: Sequence, predicted: Sequence) -> float:
    """Harmonic mean of entropy-based homogeneity and completeness."""
    true_labels = np.asarray([str(x) for x in true_labels])
    predicted = np.asarray([str(x) for x in predicted])
    n = len(true_labels)
    classes, class_idx = np.unique(true_labels, return_inverse=True)
    clusters, cluster_idx = np.unique(predicted, return_inverse=True)
    contingency = np.zeros((len(classes), len(clusters)))
    np.add.at(contingency, (class_idx, cluster_idx), 1.0)

    def entropy(counts: np.ndarray) -> float:
        p = counts[counts > 0] / n
        return float(-(p * np.log(p)).sum())

    h_c = entropy(contingency.sum(axis=1))
    h_k = entropy(contingency.sum(axis=0))
    nz = contingency > 0
    joint = contingency[nz] / n
    h_c_given_k = float(-(joint * np.log(joint / (contingency.sum(axis=0) / n)[np.where(nz)[1]])).sum())
    h_k_given_c = float(-(joint * np.log(joint / (contingency.sum(axis=1) / n)[np.where(nz)[0]])).sum())
    homogeneity = 1.0 if h_c == 0 else 1.0 - h_c_given_k / h_c
    completeness = 1.0 if h_k == 0 else 1.0 - h_k_given_c / h_k
    if homogeneity + completeness == 0:
        return 0.0
    return 2.0 * homogeneity * completeness / (homogeneity + completeness)


def eval_clustering(
    texts: Sequence[str], labels: Sequence[str], embed: Embedder, seed: int = 0
) -> float:
    """V-measure of seeded k-means with k set to the true class count."""
    from sklearn.cluster import KMeans

    k = len(set(labels))
    if k < 2:
        raise Degenerate("need at least two true classes")
    emb = np.asarray(embed(list(texts)), dtype=float)
    km = KMeans(n_clusters=k, n_init=10, max_iter=300, random_state=seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        predicted = km.fit_predict(emb)
    return v_measure(labels, predicted)


def eval_summarisation(
    docs: Sequence[tuple[list[str], list[str], list[float]]], embed: Embedder
) -> float:
    """Mean per-document Spearman correlation of machine-summary scores.

    Each doc is (human_summaries, machine_summaries, human_relevance);
    a machine summary's score is its maximum cosine similarity to the
    doc's human summaries. Documents whose scores or relevance are
    constant have no defined correlation and are skipped.
    """
    rhos = []
    for human, machine, relevance in docs:
        if not human or len(machine) < 2:
            raise TooFew("need >=1 human and >=2 machine summaries per doc")
        emb = np.asarray(embed(list(human) + list(machine)), dtype=float)
        h = _normalize_rows(emb[: len(human)])
        m = _normalize_rows(emb[len(human):])
        scores = (m @ h.T).max(axis=1)
        relevance = np.asarray(list(relevance), dtype=float)
        if np.all(scores == scores[0]) or np.all(relevance == relevance[0]):
            continue
        rhos.append(stats.spearman_rho(scores, relevance))
    if not rhos:
        raise Degenerate("no document with a defined correlation")
    return float(np.mean(rhos))


def evaluate(
    model_id: str,
    dataset: EvalDataset,
    condition: str,
    run_seed: int,
    embed: Embedder,
) -> ScoreCell:
    """Score one model on one (possibly transformed) dataset.

    `dataset` already carries the condition's texts (see
    datasets.apply_condition). Evaluator failures are captured as a
    flagged cell rather than raised, so sweeps never abort.
    """
    metric = TASK_METRICS[dataset.task]
    try:
        value = _dispatch(dataset, embed, run_seed)
    except Exception as exc:  # noqa: BLE001 - flagged, not fatal
        return ScoreCell(
            model_id, dataset.id, dataset.task.value, condition, run_seed, metric,
            value=None, error=f"{type(exc).__name__}: {exc}",
        )
    return ScoreCell(
        model_id, dataset.id, dataset.task.value, condition, run_seed, metric, float(value)
    )


def _dispatch(dataset: EvalDataset, embed: Embedder, run_seed: int) -> float:
    data = dataset.data
    if dataset.task is Task.CLASSIFICATION:
        return eval_classification(
            [i.text for i in data.train],
            [i.label for i in data.train],
            [i.text for i in data.test],
            [i.label for i in data.test],
            embed,
            seed=run_seed,
        )
    if dataset.task is Task.CLUSTERING:
        return eval_clustering([i.text for i in data.items], [i.label for i in data.items], embed, seed=run_seed)
    if dataset.task is Task.PAIR_CLASSIFICATION:
        return eval_pair_classification(
            [(p.sentence1, p.sentence2) for p in data.pairs],
            [int(p.value) for p in data.pairs],
            embed,
        )
    if dataset.task is Task.RERANKING:
        return eval_reranking([(e.query, e.positive, e.negative) for e in data.examples], embed)
    if dataset.task is Task.RETRIEVAL:
        return eval_retrieval(
            [(q.id, q.text) for q in data.queries],
            [(d.id, d.text) for d in data.corpus],
            data.qrels,
            embed,
        )
    if dataset.task in (Task.STS, Task.STR):
        return eval_sts(
            [(p.sentence1, p.sentence2) for p in data.pairs],
            [p.value for p in data.pairs],
            embed,
        )
    if dataset.task is Task.SUMMARISATION:
        return eval_summarisation(
            [(d.human_summaries, d.machine_summaries, d.relevance) for d in data.docs], embed
        )
    raise ValueError(f"no metric defined for task {dataset.task}")  # pragma: no cover


class CachingEmbedder:
    """Embedder bound to one model that memoises per-text vectors.

    Reusing one instance across conditions means texts shared between
    conditions (the whole retrieval corpus, reranking candidates,
    untransformed fields) are fetched exactly once.
    """

    def __init__(self, gateway, model_id: str, instruction: Optional[str] = None, batch_size: int = 64):
        from .gateway import EmbeddingRequest

        self._gateway = gateway
        self._request_cls = EmbeddingRequest
        self.model_id = model_id
        self.instruction = instruction
        self.batch_size = batch_size
        self._memo: dict[str, np.ndarray] = {}

    def __call__(self, texts: list[str]) -> np.ndarray:
        missing = [t for t in dict.fromkeys(texts) if t not in self._memo]
        for start in range(0, len(missing), self.batch_size):
            batch = missing[start : start + self.batch_size]
            vectors = self._gateway.embed(
                self._request_cls(model_id=self.model_id, texts=batch, instruction=self.instruction)
            )
            for text, vec in zip(batch, vectors):
                self._memo[text] = np.asarray(vec, dtype=float)
        return np.stack([self._memo[t] for t in texts])


def write_scores_csv(path: Union[str, Path], cells: Sequence[ScoreCell]) -> None:
    """Persist cells as CSV with values scaled to percentages.

    Full precision is kept here; rounding happens only in rendered
    reports.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "dataset", "task", "condition", "run_seed", "metric", "value"])
        for cell in cells:
            value = "" if cell.value is None else repr(cell.value * 100.0)
            writer.writerow(
                [cell.model_id, cell.dataset_id, cell.task, cell.condition, cell.run_seed, cell.metric, value]
            )


def read_scores_csv(path: Union[str, Path]) -> list[ScoreCell]:
    cells = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            raw = row["value"]
            value = float(raw) / 100.0 if raw not in ("", None) else None
            cells.append(
                ScoreCell(
                    model_id=row["model"],
                    dataset_id=row["dataset"],
                    task=row["task"],
                    condition=row["condition"],
                    run_seed=int(row["run_seed"]),
                    metric=row["metric"],
                    value=value,
                    error=None if value is not None else "missing",
                )
            )
    return cells


def _isfinite(x: Optional[float]) -> bool:
    return x is not None and math.isfinite(x)
