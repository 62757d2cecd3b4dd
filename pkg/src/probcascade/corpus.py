"""Sparse labeled documents and the TF-IDF transform.

Corpus files hold one document per line::

    <label> <fid>:<count> <fid>:<count> ...

Feature ids must be strictly increasing within a line and counts are
non-negative integers. A line whose first token already contains ``:`` is an
unlabeled document.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import EmptyCorpus, MalformedLine, NegativeValue, NonLeafLabel, NonMonotoneFeatureIds

UNLABELED = -1


@dataclass(frozen=True)
class Document:
    features: Mapping[int, float]
    label: int | None = None


@dataclass(frozen=True, eq=False)
class Corpus:
    """Row-major sparse document matrix with labels and document frequencies.

    ``labels`` uses ``UNLABELED`` (-1) for documents without a gold leaf.
    """

    X: sp.csr_matrix
    labels: np.ndarray
    doc_frequency: np.ndarray
    _documents: list | None = field(default=None, repr=False)

    @property
    def num_features(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def documents(self) -> list[Document]:
        if self._documents is None:
            docs = []
            X = self.X
            for i in range(X.shape[0]):
                lo, hi = X.indptr[i], X.indptr[i + 1]
                feats = dict(zip(X.indices[lo:hi].tolist(), X.data[lo:hi].tolist()))
                lab = int(self.labels[i])
                docs.append(Document(feats, None if lab == UNLABELED else lab))
            object.__setattr__(self, "_documents", docs)
        return self._documents

    def df(self, f: int) -> int:
        return int(self.doc_frequency[f]) if 0 <= f < len(self.doc_frequency) else 0

    def check_labels(self, hierarchy, require=False) -> None:
        """Raise unless every label present is a leaf of ``hierarchy``."""
        for lab in np.unique(self.labels).tolist():
            if lab == UNLABELED:
                if require:
                    raise NonLeafLabel("training documents must be labeled")
                continue
            if lab not in hierarchy.leaves:
                raise NonLeafLabel(f"label {lab} is not a leaf of the hierarchy")


def _document_frequency(X: sp.csr_matrix) -> np.ndarray:
    present = X.copy()
    present.eliminate_zeros()
    return np.bincount(present.indices, minlength=X.shape[1]).astype(np.int64)


def corpus_from_documents(docs: Iterable[Document], num_features: int | None = None) -> Corpus:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    labels = []
    width = 0
    for d in docs:
        items = sorted(d.features.items())
        for f, v in items:
            if f < 0:
                raise ValueError(f"negative feature id {f}")
            indices.append(f)
            data.append(float(v))
            width = max(width, f + 1)
        indptr.append(len(indices))
        labels.append(UNLABELED if d.label is None else d.label)
    if num_features is not None:
        if num_features < width:
            raise ValueError("num_features smaller than the largest feature id")
        width = num_features
    X = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
        shape=(len(labels), width),
    )
    return Corpus(X, np.asarray(labels, dtype=np.int64), _document_frequency(X))


def parse_corpus(lines: Iterable[str]) -> Corpus:
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    labels: list[int] = []
    width = 0
    for line_no, line in enumerate(lines, start=1):
        tokens = line.split()
        if not tokens:
            continue
        if ":" in tokens[0]:
            label = UNLABELED
            pairs = tokens
        else:
            try:
                label = int(tokens[0])
            except ValueError:
                raise MalformedLine(line_no, f"bad label {tokens[0]!r}") from None
            if label < 0:
                raise MalformedLine(line_no, "label must be non-negative")
            pairs = tokens[1:]
        prev = -1
        for tok in pairs:
            fid, sep, val = tok.partition(":")
            if not sep:
                raise MalformedLine(line_no, f"expected fid:value, got {tok!r}")
            try:
                f = int(fid)
                v = int(val)
            except ValueError:
                raise MalformedLine(line_no, f"non-integer token {tok!r}") from None
            if f < 0:
                raise MalformedLine(line_no, "feature ids must be non-negative")
            if v < 0:
                raise NegativeValue(line_no)
            if f <= prev:
                raise NonMonotoneFeatureIds(line_no)
            prev = f
            indices.append(f)
            data.append(v)
        if prev + 1 > width:
            width = prev + 1
        indptr.append(len(indices))
        labels.append(label)
    X = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
        shape=(len(labels), width),
    )
    return Corpus(X, np.asarray(labels, dtype=np.int64), _document_frequency(X))


def read_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def format_document(label: int | None, features: Iterable[tuple[int, int]]) -> str:
    body = " ".join(f"{f}:{v}" for f, v in features)
    if label is None or label == UNLABELED:
        return body
    return f"{label} {body}" if body else str(label)


@dataclass(frozen=True, eq=False)
class IdfTable:
    """Document-frequency statistics of a training corpus.

    ``weights[f] = ln(N / df[f])``; features never seen in training carry no
    weight and are dropped from transformed documents.
    """

    num_documents: int
    doc_frequency: np.ndarray

    @classmethod
    def from_corpus(cls, c: Corpus) -> IdfTable:
        if len(c) == 0:
            raise EmptyCorpus("cannot compute idf from an empty corpus")
        return cls(len(c), np.asarray(c.doc_frequency, dtype=np.int64).copy())

    @property
    def weights(self) -> np.ndarray:
        df = self.doc_frequency
        w = np.zeros(len(df), dtype=np.float64)
        seen = df > 0
        w[seen] = np.log(self.num_documents / df[seen])
        return w

    def transform(self, c: Corpus) -> Corpus:
        X = align_columns(c.X, len(self.doc_frequency)).astype(np.float64, copy=True)
        w = self.weights
        X.data *= w[X.indices]
        X.eliminate_zeros()
        X = l2_normalize_rows(X)
        return Corpus(X, c.labels.copy(), c.doc_frequency.copy())


def align_columns(X: sp.csr_matrix, width: int) -> sp.csr_matrix:
    """Drop columns >= ``width`` or pad with empty columns up to ``width``."""
    n = X.shape[1]
    if n == width:
        return X
    if n > width:
        X = X.tocsc()[:, :width].tocsr()
        X.sort_indices()
        return X
    return sp.csr_matrix((X.data, X.indices, X.indptr), shape=(X.shape[0], width))


def l2_normalize_rows(X: sp.csr_matrix) -> sp.csr_matrix:
    X = X.copy()
    counts = np.diff(X.indptr)
    norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    norms[norms == 0.0] = 1.0
    X.data /= np.repeat(norms, counts)
    return X


def tfidf_transform(c: Corpus) -> Corpus:
    """Reweight raw counts by ``ln(N/df)`` and scale each document to unit norm.

    The returned corpus keeps the input's document frequencies so the same
    weighting can be applied to held-out documents via :class:`IdfTable`.
    """
    return IdfTable.from_corpus(c).transform(c)
