"""End-to-end runs: LPA-TD, its coherent-topic variant, and the OnlyLPA baseline."""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from . import graph as G
from . import lda
from .corpus import Corpus, Document, tfidf_vectors
from .propagate import NORMALIZATIONS, LabelMatrix, label_propagation

log = logging.getLogger(__name__)

REPORT_VERSION = 1
DROP = "DROP"


class PipelineError(ValueError):
    pass


# --- configuration -------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    k: int = 1
    tau: float = 0.05
    n_topics: int | None = None  # None: twice the number of classes
    alpha: float | None = None  # None: 50 / n_topics
    beta: float = 0.01
    gibbs_iters: int = 1000
    fold_in_iters: int = 100
    lpa_tol: float = 1e-6
    lpa_max_iters: int = 10000
    n_runs: int = 10
    base_seed: int = 0
    transition: str = "row"

    def __post_init__(self):
        for name in ("k", "gibbs_iters", "fold_in_iters", "lpa_max_iters", "n_runs"):
            if getattr(self, name) < 1:
                raise PipelineError(f"{name} must be >= 1")
        if self.n_topics is not None and self.n_topics < 1:
            raise PipelineError("n_topics must be >= 1")
        if not 0.0 < self.tau < 1.0:
            raise PipelineError(f"tau must lie strictly between 0 and 1, got {self.tau}")
        if self.beta <= 0 or (self.alpha is not None and self.alpha <= 0):
            raise PipelineError("alpha and beta must be positive")
        if self.lpa_tol <= 0:
            raise PipelineError("lpa_tol must be positive")
        if self.transition not in NORMALIZATIONS:
            raise PipelineError(f"transition must be one of {NORMALIZATIONS}")

    def resolved(self, n_classes: int) -> RunConfig:
        """Fill the defaults that depend on the number of classes."""
        n_topics = self.n_topics or 2 * n_classes
        alpha = self.alpha if self.alpha is not None else lda.default_alpha(n_topics)
        return replace(self, n_topics=n_topics, alpha=alpha)

    def seeds(self) -> list[int]:
        return [self.base_seed + r for r in range(self.n_runs)]

    @classmethod
    def field_types(cls) -> dict[str, type]:
        types = {"k": int, "n_topics": int, "gibbs_iters": int, "fold_in_iters": int}
        types.update(lpa_max_iters=int, n_runs=int, base_seed=int, transition=str)
        return {f.name: types.get(f.name, float) for f in fields(cls)}


# --- topic labels ----------------------------------------------------------------


@dataclass(frozen=True)
class TopicLabeling:
    """One class name per topic, or None where the topic is dropped."""

    labels: tuple[str | None, ...]

    @property
    def dropped(self) -> list[int]:
        return [t for t, l in enumerate(self.labels) if l is None]

    @property
    def kept(self) -> list[int]:
        return [t for t, l in enumerate(self.labels) if l is not None]

    def validate(self, classes: Sequence[str], n_topics: int | None = None) -> None:
        if n_topics is not None and len(self.labels) != n_topics:
            raise PipelineError(f"labeling covers {len(self.labels)} topics, model has {n_topics}")
        unknown = sorted({l for l in self.labels if l is not None and l not in classes})
        if unknown:
            raise PipelineError(f"unknown class name(s) {unknown}; expected one of {list(classes)}")
        missing = [c for c in classes if c not in self.labels]
        if missing:
            raise PipelineError(f"every class needs at least one labelled topic; none left for {missing}")

    def to_tsv(self) -> str:
        return "".join(f"{t}\t{DROP if l is None else l}\n" for t, l in enumerate(self.labels))

    @classmethod
    def from_tsv(cls, text: str) -> TopicLabeling:
        entries: dict[int, str | None] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 or not parts[0].strip().isdigit():
                raise PipelineError(f"labels line {lineno}: expected 'topic_id<TAB>class_name'")
            t, name = int(parts[0]), parts[1].strip()
            if t in entries:
                raise PipelineError(f"labels line {lineno}: topic {t} listed twice")
            entries[t] = None if name == DROP else name
        if sorted(entries) != list(range(len(entries))):
            raise PipelineError("topic ids must be exactly 0..n-1")
        return cls(tuple(entries[t] for t in range(len(entries))))

    @classmethod
    def read(cls, path: str | os.PathLike) -> TopicLabeling:
        try:
            return cls.from_tsv(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise PipelineError(f"cannot read labels {path}: {e}") from e


class Labeler(Protocol):
    def __call__(self, model: lda.TopicModel, corpus: Corpus, run: int) -> TopicLabeling: ...


def simulate_annotator(
    model: lda.TopicModel, train_docs: Sequence[Document], classes: Sequence[str]
) -> TopicLabeling:
    """Label each topic with the class holding most of its mass in training documents.

    Stands in for a human annotator; reads gold labels of training documents only.
    """
    theta = lda.theta_train(model)
    position = {doc_id: i for i, doc_id in enumerate(model.train_ids)}
    cls_index = {c: i for i, c in enumerate(classes)}
    mass = np.zeros((len(classes), model.n_topics))
    for d in train_docs:
        if d.gold_label is None or d.id not in position:
            continue
        mass[cls_index[d.gold_label]] += theta[position[d.id]]
    # argmax picks the lowest class index on exact ties
    return TopicLabeling(tuple(classes[int(np.argmax(mass[:, t]))] for t in range(model.n_topics)))


class SimulatedAnnotator:
    def __call__(self, model, corpus, run):
        return simulate_annotator(model, corpus.train(), corpus.classes())


class FileLabeler:
    """Labels read from TSV; ``{seed}`` in the path is replaced by the model seed."""

    def __init__(self, path: str):
        self.path = str(path)

    def __call__(self, model, corpus, run):
        return TopicLabeling.read(self.path.replace("{seed}", str(model.seed)))


class FixedLabeler:
    def __init__(self, labeling: TopicLabeling):
        self.labeling = labeling

    def __call__(self, model, corpus, run):
        return self.labeling


# --- metrics ---------------------------------------------------------------------


@dataclass
class Scores:
    macro_f1: float
    per_class: dict[str, dict[str, float]]


def macro_f1(predictions: Mapping[str, str], gold: Mapping[str, str], classes: Sequence[str]) -> Scores:
    if not predictions:
        raise PipelineError("no predictions to score")
    if set(predictions) != set(gold):
        raise PipelineError("predictions and gold labels cover different documents")
    per_class = {}
    for c in classes:
        tp = sum(1 for d, p in predictions.items() if p == c and gold[d] == c)
        fp = sum(1 for d, p in predictions.items() if p == c and gold[d] != c)
        fn = sum(1 for d, p in predictions.items() if p != c and gold[d] == c)
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        per_class[c] = {"precision": p, "recall": r, "f1": f, "support": tp + fn}
    return Scores(sum(v["f1"] for v in per_class.values()) / len(classes), per_class)


# --- reports -----------------------------------------------------------------------


@dataclass
class RunResult:
    seed: int | None
    macro_f1: float
    per_class: dict[str, dict[str, float]]
    lpa_iterations: int
    converged: bool
    topic_labels: list[str] | None = None
    topics: list[list[str]] | None = None
    seed_documents: list[str] | None = None
    isolated_documents: int = 0
    predictions: dict[str, str] = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        d = {
            "seed": self.seed,
            "macro_f1": self.macro_f1,
            "per_class": self.per_class,
            "lpa_iterations": self.lpa_iterations,
            "converged": self.converged,
            "isolated_documents": self.isolated_documents,
        }
        if self.topic_labels is not None:
            d["topic_labels"] = [DROP if l is None else l for l in self.topic_labels]
            d["topics"] = self.topics
        if self.seed_documents is not None:
            d["seed_documents"] = self.seed_documents
        return d


@dataclass
class RunReport:
    method: str
    config: dict
    graph: dict
    runs: list[RunResult]

    @property
    def scores(self) -> list[float]:
        return [r.macro_f1 for r in self.runs]

    @property
    def mean_macro_f1(self) -> float:
        return sum(self.scores) / len(self.scores)

    @property
    def stddev_macro_f1(self) -> float:
        """Sample standard deviation across runs (0 for a single run)."""
        s = self.scores
        if len(s) < 2:
            return 0.0
        mean = self.mean_macro_f1
        return math.sqrt(sum((x - mean) ** 2 for x in s) / (len(s) - 1))

    @property
    def all_converged(self) -> bool:
        return all(r.converged for r in self.runs)

    def to_dict(self) -> dict:
        labels = [r.to_dict().get("topic_labels") for r in self.runs]
        return {
            "format": "lpatd-run-report",
            "version": REPORT_VERSION,
            "method": self.method,
            "config": self.config,
            "graph": self.graph,
            "runs": [r.to_dict() for r in self.runs],
            "mean_macro_f1": self.mean_macro_f1,
            "stddev_macro_f1": self.stddev_macro_f1,
            "topic_labels_used": labels if any(l is not None for l in labels) else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


# --- shared document graph ---------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SharedGraph:
    """Thresholded similarity graph over all documents; identical across runs."""

    graph: G.DocumentGraph
    k: int

    def summary(self) -> dict:
        counts = self.graph.neighbor_counts()
        return {
            "k": self.k,
            "threshold": self.graph.threshold,
            "edges": int(self.graph.matrix.nnz // 2),
            "docs_with_k_neighbors": int(np.sum(counts >= self.k)),
            "isolated_docs": int(np.sum(counts == 0)),
        }


def build_shared_graph(corpus: Corpus, k: int) -> SharedGraph:
    vectors = tfidf_vectors(corpus)
    s = G.similarity_matrix(vectors, len(corpus.vocabulary))
    threshold = G.auto_threshold(s, k)
    return SharedGraph(G.build_document_graph(s, threshold), k)


def _check_corpus(corpus: Corpus) -> list[str]:
    if corpus.vocabulary is None:
        raise PipelineError("corpus must be prepared (encoded against a vocabulary) first")
    if not corpus.train() or not corpus.test():
        raise PipelineError("corpus needs both train and test documents")
    classes = corpus.classes()
    if len(classes) < 2:
        raise PipelineError("need at least two gold classes")
    missing = [d.id for d in corpus.test() if d.gold_label is None]
    if missing:
        raise PipelineError(f"{len(missing)} test documents lack gold labels, e.g. {missing[0]!r}")
    return classes


def _score_test(corpus: Corpus, y: np.ndarray, offset: int, classes: Sequence[str]):
    pred_idx = np.argmax(y[offset:], axis=1)
    preds, gold = {}, {}
    for i, d in enumerate(corpus):
        if d.split == "test":
            preds[d.id] = classes[int(pred_idx[i])]
            gold[d.id] = d.gold_label
    return preds, macro_f1(preds, gold, classes)


# --- LPA-TD ------------------------------------------------------------------------


def fit_topics(corpus: Corpus, config: RunConfig, seed: int) -> lda.TopicModel:
    return lda.fit(
        corpus.train(),
        corpus.vocabulary,
        n_topics=config.n_topics,
        alpha=config.alpha,
        beta=config.beta,
        iterations=config.gibbs_iters,
        seed=seed,
    )


def run_lpa_td(
    corpus: Corpus,
    config: RunConfig,
    labeler: Labeler,
    coherent: bool = False,
    shared: SharedGraph | None = None,
    models: Callable[[int], lda.TopicModel] | None = None,
    on_run: Callable[[int, G.EnrichedGraph, LabelMatrix], None] | None = None,
) -> RunReport:
    """Label propagation over the topic-enriched document graph, ``n_runs`` times.

    Topic nodes are the only labelled nodes. With ``coherent`` set, topics the
    labeling marks as dropped are removed before enrichment. ``models`` maps a
    seed to a topic model (default: fit one); ``on_run`` sees each run's graph
    and propagation result.
    """
    classes = _check_corpus(corpus)
    config = config.resolved(len(classes))
    if config.n_topics < len(classes):
        raise PipelineError("need at least as many topics as classes")
    if shared is None or shared.k != config.k:
        shared = build_shared_graph(corpus, config.k)
    cls_index = {c: i for i, c in enumerate(classes)}

    runs = []
    for r, seed in enumerate(config.seeds()):
        model = models(seed) if models is not None else fit_topics(corpus, config, seed)
        if model.n_topics != config.n_topics:
            raise PipelineError(f"model for seed {seed} has {model.n_topics} topics, expected {config.n_topics}")
        labeling = labeler(model, corpus, r)
        labeling.validate(classes, model.n_topics)
        if labeling.dropped and not coherent:
            raise PipelineError("labeling drops topics; use the coherent variant")

        affinity = G.affinity_matrix(model, corpus.documents, config.fold_in_iters, seed)
        kept = labeling.kept
        if labeling.dropped:
            affinity = affinity[kept]
            affinity = affinity / affinity.sum(axis=0, keepdims=True)
        enriched = G.enrich(shared.graph, affinity, config.tau)
        seeds = [(node, cls_index[labeling.labels[t]]) for node, t in enumerate(kept)]
        result = label_propagation(
            enriched.matrix,
            seeds,
            len(classes),
            config.lpa_tol,
            config.lpa_max_iters,
            normalization=config.transition,
        )
        if on_run is not None:
            on_run(r, enriched, result)
        if not result.converged:
            log.warning("run %d (seed %d): propagation stopped after %d iterations without converging",
                        r, seed, result.iterations)
        preds, scores = _score_test(corpus, result.y, len(kept), classes)
        runs.append(
            RunResult(
                seed=seed,
                macro_f1=scores.macro_f1,
                per_class=scores.per_class,
                lpa_iterations=result.iterations,
                converged=result.converged,
                topic_labels=list(labeling.labels),
                topics=[list(lda.top_words(model, t, 15).top_words) for t in range(model.n_topics)],
                isolated_documents=len(result.isolated),
                predictions=preds,
            )
        )
        log.info("run %d (seed %d): macro-F1 %.4f", r, seed, scores.macro_f1)
    return RunReport("lpa-td", asdict(config), shared.summary(), runs)


def run_lpa_td_coh(corpus: Corpus, config: RunConfig, labeler: Labeler, **kwargs) -> RunReport:
    return run_lpa_td(corpus, config, labeler, coherent=True, **kwargs)


# --- OnlyLPA baseline ----------------------------------------------------------------


def select_seed_documents(
    corpus: Corpus, doc_graph: G.DocumentGraph, classes: Sequence[str], per_class: int
) -> list[tuple[int, int]]:
    """Highest weighted-degree training documents of each gold class."""
    degree = doc_graph.degree()
    chosen = []
    for ci, c in enumerate(classes):
        cands = [i for i, d in enumerate(corpus) if d.split == "train" and d.gold_label == c]
        if not cands:
            raise PipelineError(f"class {c!r} has no gold-labelled training documents to seed from")
        cands.sort(key=lambda i: (-degree[i], i))
        chosen.extend((i, ci) for i in cands[:per_class])
    return chosen


def run_only_lpa(
    corpus: Corpus, config: RunConfig, n_labeled: int | None = None, shared: SharedGraph | None = None
) -> RunReport:
    """Propagate from a few labelled documents on the plain document graph.

    Nothing here is random, so a single run is reported.
    """
    classes = _check_corpus(corpus)
    config = config.resolved(len(classes))
    n_labeled = config.n_topics if n_labeled is None else n_labeled
    if n_labeled < len(classes):
        raise PipelineError("need at least one labelled document per class")
    if shared is None or shared.k != config.k:
        shared = build_shared_graph(corpus, config.k)
    seeds = select_seed_documents(corpus, shared.graph, classes, n_labeled // len(classes))
    result = label_propagation(
        shared.graph.matrix,
        seeds,
        len(classes),
        config.lpa_tol,
        config.lpa_max_iters,
        normalization=config.transition,
    )
    preds, scores = _score_test(corpus, result.y, 0, classes)
    run = RunResult(
        seed=None,
        macro_f1=scores.macro_f1,
        per_class=scores.per_class,
        lpa_iterations=result.iterations,
        converged=result.converged,
        seed_documents=[corpus[i].id for i, _ in seeds],
        isolated_documents=len(result.isolated),
        predictions=preds,
    )
    echo = asdict(config)
    echo["n_labeled"] = n_labeled
    return RunReport("only-lpa", echo, shared.summary(), [run])
