"""Corpus loading, tokenization, vocabulary and TF-IDF document vectors."""

from __future__ import annotations

import gzip
import hashlib
import json
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import scipy.sparse as sp

SPLITS = ("train", "test")
PREPARED_VERSION = 1

_NON_ALPHA = re.compile(r"[^a-z]+")


class CorpusError(ValueError):
    """Raised for unreadable or malformed corpus input."""


@dataclass(frozen=True, eq=False)
class Document:
    id: str
    text: str
    split: str
    gold_label: str | None = None
    # in-vocabulary token indices, in reading order
    tokens: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    def __post_init__(self):
        if self.split not in SPLITS:
            raise CorpusError(f"document {self.id!r}: split must be one of {SPLITS}, got {self.split!r}")


@dataclass(frozen=True)
class Vocabulary:
    words: tuple[str, ...]
    doc_frequency: np.ndarray

    def __len__(self) -> int:
        return len(self.words)

    def index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.words)}

    def digest(self) -> str:
        h = hashlib.sha256()
        for w, df in zip(self.words, self.doc_frequency.tolist()):
            h.update(f"{w}\t{df}\n".encode("utf-8"))
        return h.hexdigest()


class Corpus:
    """An immutable, id-ordered collection of documents.

    ``vocabulary`` is set once the documents have been encoded against it.
    """

    def __init__(self, documents: Iterable[Document], vocabulary: Vocabulary | None = None):
        docs = sorted(documents, key=lambda d: d.id)
        seen = set()
        for d in docs:
            if d.id in seen:
                raise CorpusError(f"duplicate document id {d.id!r}")
            seen.add(d.id)
        if not docs:
            raise CorpusError("empty corpus")
        self._docs = tuple(docs)
        self.vocabulary = vocabulary
        self._position = {d.id: i for i, d in enumerate(self._docs)}

    def __len__(self) -> int:
        return len(self._docs)

    def __iter__(self) -> Iterator[Document]:
        return iter(self._docs)

    def __getitem__(self, i: int) -> Document:
        return self._docs[i]

    @property
    def documents(self) -> tuple[Document, ...]:
        return self._docs

    def position(self, doc_id: str) -> int:
        return self._position[doc_id]

    def split_indices(self, split: str) -> np.ndarray:
        return np.array([i for i, d in enumerate(self._docs) if d.split == split], dtype=np.int64)

    def train(self) -> list[Document]:
        return [d for d in self._docs if d.split == "train"]

    def test(self) -> list[Document]:
        return [d for d in self._docs if d.split == "test"]

    def classes(self) -> list[str]:
        """Sorted distinct gold labels; this order defines class indices."""
        return sorted({d.gold_label for d in self._docs if d.gold_label is not None})


# --- loading -----------------------------------------------------------------


def _open_text(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def _load_jsonl(path: Path) -> list[Document]:
    docs = []
    try:
        fh = _open_text(path)
    except OSError as e:
        raise CorpusError(f"cannot read {path}: {e}") from e
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise CorpusError(f"{path}:{lineno}: malformed record: {e.msg}") from e
            if not isinstance(rec, dict):
                raise CorpusError(f"{path}:{lineno}: malformed record: expected a JSON object")
            for key in ("id", "text", "split"):
                if not isinstance(rec.get(key), str):
                    raise CorpusError(f"{path}:{lineno}: malformed record: missing or non-string {key!r}")
            label = rec.get("label")
            if label is not None and not isinstance(label, str):
                raise CorpusError(f"{path}:{lineno}: malformed record: 'label' must be a string")
            if rec["split"] not in SPLITS:
                raise CorpusError(f"{path}:{lineno}: malformed record: bad split {rec['split']!r}")
            docs.append(Document(id=rec["id"], text=rec["text"], split=rec["split"], gold_label=label))
    return docs


def _load_newsgroups_dirs(root: Path) -> list[Document]:
    docs = []
    for split in SPLITS:
        split_dir = root / split
        if not split_dir.is_dir():
            continue
        for class_dir in sorted(p for p in split_dir.iterdir() if p.is_dir()):
            for f in sorted(p for p in class_dir.iterdir() if p.is_file()):
                try:
                    text = f.read_bytes().decode("utf-8", errors="replace")
                except OSError as e:
                    raise CorpusError(f"cannot read {f}: {e}") from e
                docs.append(Document(id=f.name, text=text, split=split, gold_label=class_dir.name))
    return docs


def load_corpus(path: str | os.PathLike, format: str = "jsonl") -> Corpus:
    """Read a corpus from a JSONL file or a ``<root>/<split>/<class>/<file>`` tree."""
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"cannot read {path}: no such file or directory")
    if format == "jsonl":
        docs = _load_jsonl(path)
    elif format == "newsgroups_dirs":
        if not path.is_dir():
            raise CorpusError(f"{path} is not a directory")
        docs = _load_newsgroups_dirs(path)
    else:
        raise CorpusError(f"unknown corpus format {format!r}")
    return Corpus(docs)


# --- tokens and vocabulary ---------------------------------------------------


def load_stopwords(path: str | os.PathLike | None = None) -> frozenset[str]:
    """One word per line; the packaged English list when ``path`` is None."""
    if path is None:
        text = resources.files("lpatd").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def tokenize(text: str, stopwords: frozenset[str] | set[str] = frozenset()) -> list[str]:
    return [t for t in _NON_ALPHA.split(text.lower()) if len(t) >= 2 and t not in stopwords]


def build_vocabulary(corpus: Corpus, stopwords: frozenset[str] | set[str]) -> Vocabulary:
    """Words that are not stop-words and occur in at least two documents.

    Document frequencies are counted over every document, train and test alike.
    """
    df: Counter[str] = Counter()
    for doc in corpus:
        df.update(set(tokenize(doc.text, stopwords)))
    words = tuple(sorted(w for w, n in df.items() if n >= 2))
    if not words:
        raise CorpusError("empty vocabulary after filtering")
    return Vocabulary(words=words, doc_frequency=np.array([df[w] for w in words], dtype=np.int64))


def encode_corpus(corpus: Corpus, vocab: Vocabulary, stopwords: frozenset[str] | set[str]) -> Corpus:
    """Return a copy of ``corpus`` whose documents carry vocabulary indices."""
    index = vocab.index()
    docs = []
    for doc in corpus:
        ids = [index[t] for t in tokenize(doc.text, stopwords) if t in index]
        docs.append(
            Document(
                id=doc.id,
                text=doc.text,
                split=doc.split,
                gold_label=doc.gold_label,
                tokens=np.array(ids, dtype=np.int64),
            )
        )
    return Corpus(docs, vocabulary=vocab)


# --- TF-IDF --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TfIdfVector:
    indices: np.ndarray
    weights: np.ndarray
    norm: float

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.weights.tolist()))


def tfidf_vector(doc: Document, vocab: Vocabulary, n_docs: int) -> TfIdfVector:
    """Raw term count times ln(n_docs / document frequency); zero weights are not stored."""
    if len(doc.tokens) == 0:
        return TfIdfVector(np.zeros(0, dtype=np.int64), np.zeros(0), 0.0)
    idx, tf = np.unique(doc.tokens, return_counts=True)
    idf = np.log(n_docs / vocab.doc_frequency[idx])
    w = tf * idf
    keep = w > 0
    idx, w = idx[keep], w[keep]
    return TfIdfVector(idx.astype(np.int64), w, math.sqrt(float(np.dot(w, w))))


def tfidf_vectors(corpus: Corpus) -> list[TfIdfVector]:
    if corpus.vocabulary is None:
        raise CorpusError("corpus is not encoded against a vocabulary")
    n = len(corpus)
    return [tfidf_vector(d, corpus.vocabulary, n) for d in corpus]


def tfidf_matrix(vectors: Sequence[TfIdfVector], n_features: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v.indices) for v in vectors])
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.zeros(0, dtype=np.int64)
    data = np.concatenate([v.weights for v in vectors]) if vectors else np.zeros(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), n_features))


# --- prepared corpus persistence -------------------------------------------------


def prepare_corpus(corpus: Corpus, stopwords: frozenset[str] | set[str]) -> Corpus:
    vocab = build_vocabulary(corpus, stopwords)
    return encode_corpus(corpus, vocab, stopwords)


def _prepared_payload(corpus: Corpus) -> dict:
    vocab = corpus.vocabulary
    vectors = tfidf_vectors(corpus)
    return {
        "vocabulary": {"words": list(vocab.words), "doc_frequency": vocab.doc_frequency.tolist()},
        "documents": [
            {
                "id": d.id,
                "split": d.split,
                "label": d.gold_label,
                "text": d.text,
                "tokens": d.tokens.tolist(),
                "tfidf": {"indices": v.indices.tolist(), "weights": [repr(x) for x in v.weights.tolist()]},
            }
            for d, v in zip(corpus, vectors)
        ],
    }


def content_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def save_prepared(corpus: Corpus, path: str | os.PathLike) -> str:
    """Write an encoded corpus with its TF-IDF vectors; returns the content hash."""
    payload = _prepared_payload(corpus)
    digest = content_hash(payload)
    record = {"format": "lpatd-prepared-corpus", "version": PREPARED_VERSION, "content_hash": digest, **payload}
    path = Path(path)
    blob = json.dumps(record, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    if path.suffix == ".gz":
        # fixed header fields so equal content gives equal bytes
        with open(path, "wb") as raw, gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
            fh.write(blob)
    else:
        path.write_bytes(blob)
    return digest


def load_prepared(path: str | os.PathLike) -> tuple[Corpus, str]:
    path = Path(path)
    try:
        with _open_text(path) as fh:
            record = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise CorpusError(f"cannot read prepared corpus {path}: {e}") from e
    if record.get("format") != "lpatd-prepared-corpus":
        raise CorpusError(f"{path} is not a prepared corpus file")
    if record.get("version") != PREPARED_VERSION:
        raise CorpusError(f"{path}: unsupported prepared-corpus version {record.get('version')}")
    v = record["vocabulary"]
    vocab = Vocabulary(words=tuple(v["words"]), doc_frequency=np.array(v["doc_frequency"], dtype=np.int64))
    docs = [
        Document(
            id=r["id"],
            text=r["text"],
            split=r["split"],
            gold_label=r["label"],
            tokens=np.array(r["tokens"], dtype=np.int64),
        )
        for r in record["documents"]
    ]
    return Corpus(docs, vocabulary=vocab), record["content_hash"]
