"""Latent Dirichlet allocation by collapsed Gibbs sampling.

Topics are learned from training documents only. Unseen documents get their
topic proportions by fold-in sampling against the frozen topic-word counts.

Randomness comes from numpy's PCG64 generator: each sweep draws one uniform
per token position up front and the compiled kernel consumes them in order,
so a (corpus, seed) pair always yields the same chain.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .corpus import Document, Vocabulary

MODEL_VERSION = 1


class ModelError(ValueError):
    pass


@njit(cache=True)
def _draw(weights, u):
    # inverse-CDF draw of an index from unnormalized weights
    total = 0.0
    for k in range(weights.shape[0]):
        total += weights[k]
    target = u * total
    acc = 0.0
    for k in range(weights.shape[0]):
        acc += weights[k]
        if target < acc:
            return k
    return weights.shape[0] - 1


@njit(cache=True)
def _gibbs_sweep(words, doc_of, z, nwt, nt, ndt, alpha, beta, vbeta, u):
    n_topics = nt.shape[0]
    p = np.empty(n_topics)
    for i in range(words.shape[0]):
        w = words[i]
        d = doc_of[i]
        t = z[i]
        nwt[t, w] -= 1
        nt[t] -= 1
        ndt[d, t] -= 1
        for k in range(n_topics):
            p[k] = (ndt[d, k] + alpha) * (nwt[k, w] + beta) / (nt[k] + vbeta)
        t = _draw(p, u[i])
        z[i] = t
        nwt[t, w] += 1
        nt[t] += 1
        ndt[d, t] += 1


@njit(cache=True)
def _fold_in(words, z, phi, local, alpha, uniforms):
    n_topics = phi.shape[0]
    n = words.shape[0]
    p = np.empty(n_topics)
    for s in range(uniforms.shape[0]):
        for i in range(n):
            w = words[i]
            local[z[i]] -= 1
            for k in range(n_topics):
                p[k] = (local[k] + alpha) * phi[k, w]
            t = _draw(p, uniforms[s, i])
            z[i] = t
            local[t] += 1


def gibbs_sweep_reference(words, doc_of, z, nwt, nt, ndt, alpha, beta, u):
    """Plain-Python twin of the compiled sweep; used to cross-check it."""
    vbeta = nwt.shape[1] * beta
    n_topics = nt.shape[0]
    for i in range(len(words)):
        w, d, t = int(words[i]), int(doc_of[i]), int(z[i])
        nwt[t, w] -= 1
        nt[t] -= 1
        ndt[d, t] -= 1
        p = [(ndt[d, k] + alpha) * (nwt[k, w] + beta) / (nt[k] + vbeta) for k in range(n_topics)]
        target = u[i] * sum(p)
        acc, t = 0.0, n_topics - 1
        for k in range(n_topics):
            acc += p[k]
            if target < acc:
                t = k
                break
        z[i] = t
        nwt[t, w] += 1
        nt[t] += 1
        ndt[d, t] += 1


@dataclass(eq=False)
class TopicModel:
    n_topics: int
    alpha: float
    beta: float
    seed: int
    vocab_size: int
    vocab_digest: str
    train_ids: tuple[str, ...]
    doc_offsets: np.ndarray  # token ranges per training document
    words: np.ndarray  # flat token stream of the training documents
    assignments: np.ndarray  # topic per token position
    topic_word_counts: np.ndarray
    topic_totals: np.ndarray
    doc_topic_counts: np.ndarray
    vocabulary: Vocabulary | None = None
    sweeps: int = 0

    @property
    def doc_lengths(self) -> np.ndarray:
        return np.diff(self.doc_offsets)

    def doc_of_token(self) -> np.ndarray:
        return np.repeat(np.arange(len(self.train_ids), dtype=np.int64), self.doc_lengths)

    def recount(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Count tables rebuilt from scratch out of the current assignments."""
        nwt = np.zeros((self.n_topics, self.vocab_size), dtype=np.int64)
        np.add.at(nwt, (self.assignments, self.words), 1)
        ndt = np.zeros((len(self.train_ids), self.n_topics), dtype=np.int64)
        np.add.at(ndt, (self.doc_of_token(), self.assignments), 1)
        return nwt, nwt.sum(axis=1), ndt

    def check_invariants(self) -> None:
        assert np.array_equal(self.topic_totals, self.topic_word_counts.sum(axis=1))
        assert np.array_equal(self.doc_topic_counts.sum(axis=1), self.doc_lengths)
        if len(self.assignments):
            assert 0 <= self.assignments.min() and self.assignments.max() < self.n_topics


def default_alpha(n_topics: int) -> float:
    return 50.0 / n_topics


class GibbsSampler:
    """Collapsed Gibbs chain over the training documents.

    ``fit`` drives this for a fixed number of sweeps; the sampler is exposed so
    callers can inspect the state between sweeps.
    """

    def __init__(
        self,
        train_docs: Sequence[Document],
        vocab: Vocabulary,
        n_topics: int,
        alpha: float | None = None,
        beta: float = 0.01,
        seed: int = 0,
    ):
        if n_topics < 1:
            raise ModelError("n_topics must be >= 1")
        if not train_docs:
            raise ModelError("no training documents")
        alpha = default_alpha(n_topics) if alpha is None else float(alpha)
        if alpha <= 0 or beta <= 0:
            raise ModelError("alpha and beta must be positive")
        lengths = np.array([len(d.tokens) for d in train_docs], dtype=np.int64)
        if lengths.sum() == 0:
            raise ModelError("training corpus has no in-vocabulary tokens")
        offsets = np.zeros(len(train_docs) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum(lengths)
        words = np.concatenate([np.asarray(d.tokens, dtype=np.int64) for d in train_docs])
        if words.max() >= len(vocab):
            raise ModelError("token index outside the vocabulary")

        self.rng = np.random.Generator(np.random.PCG64(seed))
        z = self.rng.integers(0, n_topics, size=len(words)).astype(np.int64)
        self.model = TopicModel(
            n_topics=n_topics,
            alpha=alpha,
            beta=float(beta),
            seed=int(seed),
            vocab_size=len(vocab),
            vocab_digest=vocab.digest(),
            train_ids=tuple(d.id for d in train_docs),
            doc_offsets=offsets,
            words=words,
            assignments=z,
            topic_word_counts=np.zeros((n_topics, len(vocab)), dtype=np.int64),
            topic_totals=np.zeros(n_topics, dtype=np.int64),
            doc_topic_counts=np.zeros((len(train_docs), n_topics), dtype=np.int64),
            vocabulary=vocab,
        )
        m = self.model
        m.topic_word_counts, m.topic_totals, m.doc_topic_counts = m.recount()
        self._doc_of = m.doc_of_token()

    def sweep(self) -> None:
        m = self.model
        u = self.rng.random(len(m.words))
        _gibbs_sweep(
            m.words,
            self._doc_of,
            m.assignments,
            m.topic_word_counts,
            m.topic_totals,
            m.doc_topic_counts,
            m.alpha,
            m.beta,
            m.vocab_size * m.beta,
            u,
        )
        m.sweeps += 1


def fit(
    train_docs: Sequence[Document],
    vocab: Vocabulary,
    n_topics: int,
    alpha: float | None = None,
    beta: float = 0.01,
    iterations: int = 1000,
    seed: int = 0,
    callback: Callable[[TopicModel], None] | None = None,
) -> TopicModel:
    """Run ``iterations`` Gibbs sweeps and return the final-state model."""
    if iterations < 1:
        raise ModelError("iterations must be >= 1")
    sampler = GibbsSampler(train_docs, vocab, n_topics, alpha, beta, seed)
    for _ in range(iterations):
        sampler.sweep()
        if __debug__:
            sampler.model.check_invariants()
        if callback is not None:
            callback(sampler.model)
    return sampler.model


def phi(model: TopicModel) -> np.ndarray:
    """Topic-word distributions, one row per topic."""
    return (model.topic_word_counts + model.beta) / (
        model.topic_totals[:, None] + model.vocab_size * model.beta
    )


def theta_train(model: TopicModel) -> np.ndarray:
    """Topic proportions of the training documents, one row per document."""
    return (model.doc_topic_counts + model.alpha) / (
        model.doc_lengths[:, None] + model.n_topics * model.alpha
    )


def infer_theta(model: TopicModel, doc: Document, iterations: int = 100, seed: int = 0) -> np.ndarray:
    """Fold-in estimate of an unseen document's topic proportions.

    Only the document's own assignments are resampled; the model is not touched.
    """
    return _infer(model, phi(model), np.asarray(doc.tokens, dtype=np.int64), iterations, seed)


def infer_thetas(
    model: TopicModel, docs: Sequence[Document], iterations: int = 100, seed: int = 0
) -> np.ndarray:
    """``infer_theta`` for many documents; document i uses the stream (seed, i)."""
    ph = phi(model)
    out = np.empty((len(docs), model.n_topics))
    for i, doc in enumerate(docs):
        out[i] = _infer(model, ph, np.asarray(doc.tokens, dtype=np.int64), iterations, (seed, i))
    return out


def _infer(model: TopicModel, ph: np.ndarray, words: np.ndarray, iterations: int, seed) -> np.ndarray:
    n_topics = model.n_topics
    if len(words) == 0:
        return np.full(n_topics, 1.0 / n_topics)
    if words.max() >= model.vocab_size:
        raise ModelError("token index outside the model vocabulary")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    z = rng.integers(0, n_topics, size=len(words)).astype(np.int64)
    local = np.bincount(z, minlength=n_topics).astype(np.int64)
    uniforms = rng.random((iterations, len(words)))
    _fold_in(words, z, ph, local, model.alpha, uniforms)
    return (local + model.alpha) / (len(words) + n_topics * model.alpha)


@dataclass(frozen=True)
class TopicSummary:
    topic_id: int
    top_words: tuple[str, ...]


def top_words(model: TopicModel, topic: int, k: int = 15, vocab: Vocabulary | None = None) -> TopicSummary:
    """The ``k`` most probable words of a topic; ties go to the lexicographically smaller word."""
    vocab = vocab or model.vocabulary
    if vocab is None:
        raise ModelError("model has no vocabulary attached")
    if not 0 <= topic < model.n_topics:
        raise ModelError(f"topic {topic} out of range")
    row = phi(model)[topic]
    k = max(0, min(k, len(vocab)))
    # vocabulary words are sorted, so a stable sort on -phi breaks ties lexicographically
    order = np.argsort(-row, kind="stable")[:k]
    return TopicSummary(topic, tuple(vocab.words[i] for i in order))


# --- persistence ---------------------------------------------------------------


def save_model(model: TopicModel, path: str | os.PathLike) -> None:
    header = {
        "format": "lpatd-topic-model",
        "version": MODEL_VERSION,
        "n_topics": model.n_topics,
        "alpha": model.alpha,
        "beta": model.beta,
        "seed": model.seed,
        "sweeps": model.sweeps,
        "vocab_size": model.vocab_size,
        "vocab_digest": model.vocab_digest,
        "train_ids": list(model.train_ids),
    }
    buf = io.BytesIO()
    np.savez_compressed(
        buf,
        header=np.frombuffer(json.dumps(header, sort_keys=True).encode("utf-8"), dtype=np.uint8),
        doc_offsets=model.doc_offsets,
        words=model.words,
        assignments=model.assignments,
        topic_word_counts=model.topic_word_counts,
        topic_totals=model.topic_totals,
        doc_topic_counts=model.doc_topic_counts,
    )
    Path(path).write_bytes(buf.getvalue())


def load_model(path: str | os.PathLike, vocab: Vocabulary | None = None) -> TopicModel:
    try:
        with np.load(path) as data:
            arrays = {k: data[k] for k in data.files}
    except (OSError, ValueError) as e:
        raise ModelError(f"cannot read model {path}: {e}") from e
    header = json.loads(arrays.pop("header").tobytes().decode("utf-8"))
    if header.get("format") != "lpatd-topic-model" or header.get("version") != MODEL_VERSION:
        raise ModelError(f"{path}: not a supported topic model file")
    if vocab is not None and vocab.digest() != header["vocab_digest"]:
        raise ModelError(f"{path}: model was fitted against a different vocabulary")
    return TopicModel(
        n_topics=header["n_topics"],
        alpha=header["alpha"],
        beta=header["beta"],
        seed=header["seed"],
        vocab_size=header["vocab_size"],
        vocab_digest=header["vocab_digest"],
        train_ids=tuple(header["train_ids"]),
        vocabulary=vocab,
        sweeps=header["sweeps"],
        **arrays,
    )
