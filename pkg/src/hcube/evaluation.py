"""Retrieval quality metrics: average precision at a cutoff, aggregated
per category and across categories.

Queries are evaluated against the database items sharing their category
(mirroring filtered search) unless ``restrict=False``. A query with no
relevant database item has undefined AP; such queries are skipped and
counted, never scored as zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidValue, LengthMismatch
from .index import PackedCodeIndex, cosine_norms, cosine_search, search
from .types import EmbeddingSet


def average_precision(relevance, k: int, n_relevant_total: int) -> float:
    """AP@k of one ranked result list, given its 0/1 relevance sequence.

    Sum of precision-at-rank over the ranks holding relevant items, divided
    by min(n_relevant_total, k): a perfect ranking scores 1.0 even when the
    cutoff cannot hold every relevant item. The sequence may be shorter than
    k when the database is; it must never be longer.
    """
    hits = np.asarray(relevance, dtype=bool)
    if hits.ndim != 1 or hits.size > k:
        raise InvalidValue(f"relevance length {hits.shape} exceeds cutoff k={k}")
    if n_relevant_total < 1:
        raise InvalidValue("AP is undefined with no relevant items; skip the query")
    if not hits.any():
        return 0.0
    ranks = np.flatnonzero(hits) + 1
    precisions = np.cumsum(hits)[hits.nonzero()] / ranks
    return float(precisions.sum() / min(n_relevant_total, k))


@dataclass(frozen=True)
class CategoryScore:
    category: int
    name: str | None
    mean_ap: float
    n_queries: int


@dataclass(frozen=True)
class EvalReport:
    """Per-category mean average precision plus the unweighted average.

    ``skipped`` counts queries with no relevant database item under the
    active restriction; they contribute to no mean.
    """

    k: int
    restricted: bool
    categories: tuple[CategoryScore, ...]
    mean_ap: float
    n_queries: int
    skipped: int

    def to_records(self) -> dict:
        return {
            "k": self.k,
            "restricted": self.restricted,
            "avg": self.mean_ap,
            "n_queries": self.n_queries,
            "skipped": self.skipped,
            "categories": [
                {
                    "category": c.category,
                    "name": c.name,
                    "map": c.mean_ap,
                    "queries": c.n_queries,
                }
                for c in self.categories
            ],
        }

    def to_table(self, row_label: str | None = None) -> str:
        """Fixed-width table: one column per category plus AVG, values as
        percentages."""
        return comparison_table([(row_label or f"mAP@{self.k}", self)])

    def to_jsonl(self) -> str:
        """One JSON record per category plus a final AVG record."""
        lines = [
            json.dumps(
                {
                    "category": c.category,
                    "name": c.name,
                    "map": c.mean_ap,
                    "queries": c.n_queries,
                    "k": self.k,
                }
            )
            for c in self.categories
        ]
        lines.append(
            json.dumps(
                {
                    "category": "AVG",
                    "map": self.mean_ap,
                    "queries": self.n_queries,
                    "skipped": self.skipped,
                    "k": self.k,
                }
            )
        )
        return "\n".join(lines) + "\n"


def comparison_table(rows: list[tuple[str, "EvalReport"]]) -> str:
    """Side-by-side report table, one labeled row per report; columns are the
    categories of the first report plus AVG, values as percentages."""
    if not rows:
        raise InvalidValue("comparison_table needs at least one report")
    headers = [""] + [
        c.name or f"cat-{c.category}" for c in rows[0][1].categories
    ] + ["AVG"]
    table = [headers]
    for label, report in rows:
        values = [100.0 * c.mean_ap for c in report.categories] + [
            100.0 * report.mean_ap
        ]
        table.append([label] + [f"{v:.2f}" for v in values])
    widths = [max(len(row[i]) for row in table) for i in range(len(headers))]
    return "\n".join(
        "  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip()
        for row in table
    )


def _finalize(
    aps_by_cat: dict[int, list[float]],
    names: dict[int, str | None],
    k: int,
    restricted: bool,
    skipped: int,
) -> EvalReport:
    scores = tuple(
        CategoryScore(
            category=cat,
            name=names.get(cat),
            mean_ap=float(np.mean(aps)),
            n_queries=len(aps),
        )
        for cat, aps in sorted(aps_by_cat.items())
        if aps
    )
    if not scores:
        raise InvalidValue("no query had any relevant database item")
    return EvalReport(
        k=k,
        restricted=restricted,
        categories=scores,
        mean_ap=float(np.mean([s.mean_ap for s in scores])),
        n_queries=sum(s.n_queries for s in scores),
        skipped=skipped,
    )


def _category_names(categories: np.ndarray, names) -> dict[int, str | None]:
    if names is None:
        return {}
    return {int(c): names[int(c)] for c in np.unique(categories) if int(c) < len(names)}


def _check_queries(query_labels, query_categories, n_queries):
    if len(query_labels) != n_queries or len(query_categories) != n_queries:
        raise LengthMismatch(
            f"queries={n_queries}, labels={len(query_labels)}, "
            f"categories={len(query_categories)}"
        )


def evaluate_binary(
    index: PackedCodeIndex,
    query_words: np.ndarray,
    query_labels: np.ndarray,
    query_categories: np.ndarray,
    k: int = 100,
    restrict: bool = True,
    category_names=None,
) -> EvalReport:
    """Mean AP@k of Hamming retrieval over a packed index."""
    query_words = np.asarray(query_words, dtype=np.uint64)
    _check_queries(query_labels, query_categories, query_words.shape[0])
    aps: dict[int, list[float]] = {}
    skipped = 0
    for cat in np.unique(query_categories):
        db = index.subset(index.categories == cat) if restrict else index
        q_rows = np.flatnonzero(query_categories == cat)
        for i in q_rows:
            label = int(query_labels[i])
            n_rel = int(np.count_nonzero(db.labels == label))
            if n_rel == 0:
                skipped += 1
                continue
            res = search(db, query_words[i], k)
            ap = average_precision(db.labels[res.indices] == label, k, n_rel)
            aps.setdefault(int(cat), []).append(ap)
    names = _category_names(np.asarray(query_categories), category_names)
    return _finalize(aps, names, k, restrict, skipped)


def evaluate_cosine(
    db_vectors: np.ndarray,
    db_labels: np.ndarray,
    db_categories: np.ndarray,
    query_vectors: np.ndarray,
    query_labels: np.ndarray,
    query_categories: np.ndarray,
    k: int = 100,
    restrict: bool = True,
    category_names=None,
) -> EvalReport:
    """Mean AP@k of exhaustive cosine retrieval over raw embeddings; the
    float baseline the binary index is compared against."""
    db_vectors = np.asarray(db_vectors)
    db_labels = np.asarray(db_labels)
    db_categories = np.asarray(db_categories)
    query_vectors = np.asarray(query_vectors)
    _check_queries(query_labels, query_categories, query_vectors.shape[0])
    aps: dict[int, list[float]] = {}
    skipped = 0
    for cat in np.unique(query_categories):
        mask = db_categories == cat if restrict else np.ones(db_vectors.shape[0], bool)
        vecs, labels = db_vectors[mask], db_labels[mask]
        norms = cosine_norms(vecs)
        q_rows = np.flatnonzero(query_categories == cat)
        for i in q_rows:
            label = int(query_labels[i])
            n_rel = int(np.count_nonzero(labels == label))
            if n_rel == 0:
                skipped += 1
                continue
            res = cosine_search(vecs, query_vectors[i], k, norms=norms)
            ap = average_precision(labels[res.indices] == label, k, n_rel)
            aps.setdefault(int(cat), []).append(ap)
    names = _category_names(np.asarray(query_categories), category_names)
    return _finalize(aps, names, k, restrict, skipped)


def map_at_k(db, queries, k: int = 1000, restrict: bool = True, category_names=None) -> EvalReport:
    """Mean AP@k of retrieval from ``queries`` against ``db``.

    Dispatches on input type: two PackedCodeIndex values run Hamming
    retrieval over packed codes; two EmbeddingSet values run the cosine
    baseline over raw features. ``restrict=False`` searches the whole
    database instead of the query's category slice.
    """
    if isinstance(db, PackedCodeIndex) and isinstance(queries, PackedCodeIndex):
        if db.bits != queries.bits:
            raise InvalidValue(
                f"database codes are {db.bits}-bit, queries {queries.bits}-bit"
            )
        return evaluate_binary(
            db, queries.words, queries.labels, queries.categories,
            k=k, restrict=restrict, category_names=category_names,
        )
    if isinstance(db, EmbeddingSet) and isinstance(queries, EmbeddingSet):
        names = category_names if category_names is not None else queries.category_names
        return evaluate_cosine(
            db.rows, db.labels, db.categories,
            queries.rows, queries.labels, queries.categories,
            k=k, restrict=restrict, category_names=names,
        )
    raise InvalidValue(
        "db and queries must both be PackedCodeIndex or both be EmbeddingSet, "
        f"got {type(db).__name__} and {type(queries).__name__}"
    )
