"""Document similarity graph and its topic-enriched extension.

Node order in every enriched matrix is topics first, then documents.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import TfIdfVector, tfidf_matrix
from .lda import TopicModel, infer_thetas, theta_train


class GraphError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DocumentGraph:
    matrix: sp.csr_matrix
    threshold: float

    @property
    def n_docs(self) -> int:
        return self.matrix.shape[0]

    def degree(self) -> np.ndarray:
        """Weighted degree (row sums) of every document."""
        return np.asarray(self.matrix.sum(axis=1)).ravel()

    def neighbor_counts(self) -> np.ndarray:
        return np.diff(self.matrix.indptr)


@dataclass(frozen=True, eq=False)
class EnrichedGraph:
    matrix: sp.csr_matrix
    n_topics: int
    n_docs: int
    tau: float
    mu: np.ndarray
    scale: np.ndarray  # per-document multiplier applied to the affinity column

    def topic_fraction(self) -> np.ndarray:
        """Share of each document's incident weight that comes from topic nodes."""
        doc_rows = self.matrix[self.n_topics :]
        from_topics = np.asarray(doc_rows[:, : self.n_topics].sum(axis=1)).ravel()
        total = np.asarray(doc_rows.sum(axis=1)).ravel()
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, from_topics / total, 0.0)


def similarity_matrix(vectors: Sequence[TfIdfVector], n_features: int | None = None) -> sp.csr_matrix:
    """Pairwise cosine similarity with a zero diagonal.

    Rows of zero norm have zero similarity to everything.
    """
    if n_features is None:
        n_features = 1 + max((int(v.indices.max()) for v in vectors if len(v.indices)), default=-1)
    x = tfidf_matrix(vectors, n_features)
    norms = np.array([v.norm for v in vectors])
    inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    x = sp.diags(inv) @ x
    s = (x @ x.T).tocsr()
    s = ((s + s.T) * 0.5).tocsr()
    s.setdiag(0.0)
    s.eliminate_zeros()
    np.clip(s.data, 0.0, 1.0, out=s.data)
    s.sort_indices()
    return s


def _kth_largest_per_row(s: sp.csr_matrix, k: int) -> np.ndarray:
    out = np.zeros(s.shape[0])
    for i in range(s.shape[0]):
        row = s.data[s.indptr[i] : s.indptr[i + 1]]
        if len(row) >= k:
            out[i] = np.partition(row, len(row) - k)[len(row) - k]
    return out


def _at_least(n: int) -> int:
    # ceil(0.9 * n) without floating-point error
    return (9 * n + 9) // 10


def auto_threshold(s, k: int) -> float:
    """Largest threshold under which at least 90% of documents keep k neighbours.

    Each document's k-th largest off-diagonal similarity is the most its own
    edges can tolerate; the answer is the ceil(0.9 n)-th largest of those.
    """
    s = sp.csr_matrix(s, copy=True)
    n = s.shape[0]
    if k < 1:
        raise GraphError("K must be >= 1")
    if n <= k:
        raise GraphError(f"need more than K={k} documents, got {n}")
    s.setdiag(0.0)
    s.eliminate_zeros()
    kth = np.sort(_kth_largest_per_row(s, k))[::-1]
    return float(kth[_at_least(n) - 1])


def build_document_graph(s, threshold: float) -> DocumentGraph:
    """Drop similarities below ``threshold``; zero entries never become edges."""
    if threshold < 0:
        raise GraphError("threshold must be non-negative")
    s = sp.csr_matrix(s, copy=True)
    s.setdiag(0.0)
    s.data[s.data < threshold] = 0.0
    s.eliminate_zeros()
    s.sort_indices()
    return DocumentGraph(s, float(threshold))


def affinity_matrix(
    model: TopicModel, docs: Sequence, fold_in_iters: int = 100, seed: int = 0
) -> np.ndarray:
    """Topic-by-document affinities; each column sums to one.

    Training documents of the model use their sampled proportions, every
    other document is folded in.
    """
    position = {doc_id: i for i, doc_id in enumerate(model.train_ids)}
    trained = theta_train(model)
    out = np.empty((model.n_topics, len(docs)))
    unseen = [j for j, d in enumerate(docs) if d.id not in position]
    for j, d in enumerate(docs):
        if d.id in position:
            out[:, j] = trained[position[d.id]]
    if unseen:
        out[:, unseen] = infer_thetas(model, [docs[j] for j in unseen], fold_in_iters, seed).T
    return out / out.sum(axis=0, keepdims=True)


def topic_scale(tau: float, mu: np.ndarray) -> np.ndarray:
    """Multiplier c = tau * mu / (1 - tau) that gives topic edges a tau share."""
    return tau * np.asarray(mu, dtype=float) / (1.0 - tau)


def enrich(doc_graph: DocumentGraph, affinity: np.ndarray, tau: float) -> EnrichedGraph:
    """Attach topic nodes to the document graph with topic influence ``tau``.

    Documents without document neighbours keep their raw affinities so they
    stay reachable from the labelled topics.
    """
    if not 0.0 < tau < 1.0:
        raise GraphError(f"tau must lie strictly between 0 and 1, got {tau}")
    n_topics, n_docs = affinity.shape
    if n_docs != doc_graph.n_docs:
        raise GraphError("affinity columns do not match the document graph")
    mu = doc_graph.degree()
    c = topic_scale(tau, mu)
    c = np.where(mu > 0, c, 1.0)
    topic_doc = sp.csr_matrix(affinity * c[None, :])
    a = sp.bmat(
        [[sp.csr_matrix((n_topics, n_topics)), topic_doc], [topic_doc.T, doc_graph.matrix]],
        format="csr",
    )
    a.eliminate_zeros()
    a.sort_indices()
    return EnrichedGraph(a, n_topics, n_docs, float(tau), mu, c)


def write_edge_list(matrix: sp.spmatrix, names: Sequence[str], path: str | os.PathLike) -> None:
    """Upper-triangle edges as ``a<TAB>b<TAB>weight`` lines."""
    upper = sp.triu(matrix, k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, w in zip(upper.row[order], upper.col[order], upper.data[order]):
            fh.write(f"{names[i]}\t{names[j]}\t{float(w)!r}\n")


def node_names(n_topics: int, doc_ids: Sequence[str]) -> list[str]:
    return [f"t{i}" for i in range(n_topics)] + [f"d{d}" for d in doc_ids]
