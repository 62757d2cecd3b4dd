"""Hierarchical and flat models built from per-node logistic classifiers.

One :class:`HierModel` backs both hierarchical strategies: greedy cascade
descent and the path-product scorer, which ranks every leaf by the sum of
log-probabilities along its root-to-leaf path. :class:`FlatModel` holds one
one-vs-all classifier per leaf.
"""

from __future__ import annotations

import io
import os
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from . import _backend
from .corpus import UNLABELED, Corpus, Document, IdfTable, align_columns
from .errors import DataError, EmptyCorpus, MalformedLine, RootHasNoTrainingSet
from .hierarchy import Hierarchy, leaf_descendants
from .linear import FitInfo, LabeledSet, NodeClassifier, TrainConfig, fit_logistic

FORMAT_VERSION = 1
_MAGIC = "probcascade-model"
_CHUNK = 2048


class ScoredLeaf(NamedTuple):
    leaf: int
    log_score: float


def build_features(raw: Corpus, mode: str = "tfidf", idf: IdfTable | None = None) -> tuple[Corpus, IdfTable | None]:
    """Map raw counts into the model feature space.

    ``tfidf`` fits the idf table on ``raw`` unless one is given; ``tf`` keeps
    raw counts.
    """
    if mode == "tfidf":
        if idf is None:
            idf = IdfTable.from_corpus(raw)
        return idf.transform(raw), idf
    if mode == "tf":
        return raw, None
    raise ValueError(f"feature mode must be 'tf' or 'tfidf', not {mode!r}")


class _Scorer:
    """Shared scoring machinery: stacked weights plus feature transform."""

    feature_mode: str
    idf: IdfTable | None
    num_features: int

    def prepare(self, raw: Corpus) -> sp.csr_matrix:
        """Raw test counts -> the matrix the classifiers were trained on."""
        if self.feature_mode == "tfidf":
            X = self.idf.transform(raw).X
        else:
            X = raw.X
        return align_columns(sp.csr_matrix(X, dtype=np.float64), self.num_features)

    def _stack(self, columns: Sequence[int], classifiers: Mapping[int, NodeClassifier]):
        rows, cols, vals = [], [], []
        bias = np.empty(len(columns), dtype=np.float64)
        for j, n in enumerate(columns):
            clf = classifiers[n]
            keep = clf.indices < self.num_features
            rows.append(np.full(int(keep.sum()), j, dtype=np.int64))
            cols.append(clf.indices[keep])
            vals.append(clf.values[keep])
            bias[j] = clf.bias
        rows.append(np.zeros(0, dtype=np.int64))
        cols.append(np.zeros(0, dtype=np.int64))
        vals.append(np.zeros(0, dtype=np.float64))
        coo = (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols)))
        W = sp.csr_matrix(coo, shape=(len(columns), self.num_features))
        return W.T.tocsr(), bias

    def _logits(self, X: sp.csr_matrix, Wt: sp.csr_matrix, bias: np.ndarray) -> np.ndarray:
        X = align_columns(sp.csr_matrix(X, dtype=np.float64), self.num_features)
        out = np.empty((X.shape[0], len(bias)), dtype=np.float64)
        for lo in range(0, X.shape[0], _CHUNK):
            block = X[lo : lo + _CHUNK] @ Wt
            out[lo : lo + _CHUNK] = block.toarray() if sp.issparse(block) else block
        out += bias
        return out


@dataclass(frozen=True, eq=False)
class HierModel(_Scorer):
    """Hierarchy plus one classifier per non-root node."""

    hierarchy: Hierarchy
    node_classifiers: Mapping[int, NodeClassifier]
    num_features: int
    feature_mode: str = "tf"
    idf: IdfTable | None = None
    stats: Mapping[int, FitInfo] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        h = self.hierarchy
        expected = set(h.nodes) - {h.root}
        got = set(self.node_classifiers)
        if got != expected:
            missing = sorted(expected - got)[:5]
            extra = sorted(got - expected)[:5]
            raise DataError(f"node classifiers do not match hierarchy (missing {missing}, extra {extra})")
        object.__setattr__(self, "node_classifiers", MappingProxyType(dict(self.node_classifiers)))

    @cached_property
    def _layout(self):
        h = self.hierarchy
        columns = [n for n in h.preorder if n != h.root]
        col_of = {n: j for j, n in enumerate(columns)}
        root_slot = len(columns)
        parent = np.array([col_of.get(h.parent_of[n], -1) for n in columns], dtype=np.int64)
        child_ptr = [0]
        child_idx: list[int] = []
        for n in [*columns, h.root]:
            child_idx.extend(col_of[c] for c in h.children_of[n])
            child_ptr.append(len(child_idx))
        leaf_ids = np.array(sorted(h.leaves), dtype=np.int64)
        leaf_cols = np.array([col_of.get(n, root_slot) for n in leaf_ids.tolist()], dtype=np.int64)
        Wt, bias = self._stack(columns, self.node_classifiers)
        return {
            "columns": np.array(columns, dtype=np.int64),
            "parent": parent,
            "child_ptr": np.array(child_ptr, dtype=np.int64),
            "child_idx": np.array(child_idx, dtype=np.int64),
            "leaf_ids": leaf_ids,
            "leaf_cols": leaf_cols,
            "Wt": Wt,
            "bias": bias,
        }

    def node_logits(self, X) -> np.ndarray:
        lay = self._layout
        return self._logits(X, lay["Wt"], lay["bias"])


@dataclass(frozen=True, eq=False)
class FlatModel(_Scorer):
    """One one-vs-all classifier per leaf."""

    hierarchy: Hierarchy
    leaf_classifiers: Mapping[int, NodeClassifier]
    num_features: int
    feature_mode: str = "tf"
    idf: IdfTable | None = None
    stats: Mapping[int, FitInfo] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if set(self.leaf_classifiers) != set(self.hierarchy.leaves):
            raise DataError("flat model must hold exactly one classifier per leaf")
        object.__setattr__(self, "leaf_classifiers", MappingProxyType(dict(self.leaf_classifiers)))

    @cached_property
    def _layout(self):
        leaf_ids = np.array(sorted(self.hierarchy.leaves), dtype=np.int64)
        Wt, bias = self._stack(leaf_ids.tolist(), self.leaf_classifiers)
        return {"leaf_ids": leaf_ids, "Wt": Wt, "bias": bias}

    def leaf_logits(self, X) -> np.ndarray:
        lay = self._layout
        return self._logits(X, lay["Wt"], lay["bias"])


# ---------------------------------------------------------------------------
# training


def _labeled_rows(h: Hierarchy, c: Corpus) -> dict[int, np.ndarray]:
    """Sorted corpus row indices of the labeled documents under each node."""
    labels = c.labels
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    rows: dict[int, np.ndarray] = {}
    for n in reversed(h.preorder):
        kids = h.children_of[n]
        if not kids:
            lo, hi = np.searchsorted(sorted_labels, [n, n + 1])
            rows[n] = order[lo:hi]
        else:
            rows[n] = np.sort(np.concatenate([rows[k] for k in kids]))
    return rows


def _check_training_corpus(h: Hierarchy, c: Corpus) -> None:
    if len(c) == 0:
        raise EmptyCorpus("training corpus is empty")
    if np.any(c.labels == UNLABELED):
        raise DataError("training corpus contains unlabeled documents")
    c.check_labels(h)


def _training_set_from_rows(c: Corpus, pool: np.ndarray, positive: np.ndarray) -> LabeledSet:
    y = np.where(np.isin(pool, positive, assume_unique=True), 1.0, -1.0)
    return LabeledSet(c.X[pool], y)


def node_training_set(h: Hierarchy, c: Corpus, n: int) -> LabeledSet:
    """Positives under ``n``; negatives under ``n``'s siblings; corpus order."""
    h._check(n)
    if n == h.root:
        raise RootHasNoTrainingSet("the root has no classifier")
    parent = h.parent_of[n]
    pos_leaves = leaf_descendants(h, n)
    pool_leaves = leaf_descendants(h, parent)
    labels = c.labels
    pool = np.flatnonzero(np.isin(labels, list(pool_leaves)))
    positive = pool[np.isin(labels[pool], list(pos_leaves))]
    return _training_set_from_rows(c, pool, positive)


def _fit_all(jobs, cfg, n_jobs, kernels):
    def run(job):
        return fit_logistic(job, cfg, kernels)

    if n_jobs == 1:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=n_jobs) as ex:
        return list(ex.map(run, jobs))


def train_hierarchical(
    h: Hierarchy,
    c: Corpus,
    cfg: TrainConfig,
    *,
    feature_mode: str = "tf",
    idf: IdfTable | None = None,
    n_jobs: int = 1,
    kernels=None,
) -> HierModel:
    """Fit one classifier per non-root node on its one-vs-siblings data.

    ``c`` must already be in feature space (see :func:`build_features`).
    """
    _check_training_corpus(h, c)
    rows = _labeled_rows(h, c)
    nodes = [n for n in h.preorder if n != h.root]
    jobs = (_training_set_from_rows(c, rows[h.parent_of[n]], rows[n]) for n in nodes)
    results = _fit_all(jobs, cfg, n_jobs, kernels)
    classifiers = {n: r[0] for n, r in zip(nodes, results)}
    stats = {n: r[1] for n, r in zip(nodes, results)}
    return HierModel(h, classifiers, c.num_features, feature_mode, idf, stats)


def train_flat(
    h: Hierarchy,
    c: Corpus,
    cfg: TrainConfig,
    *,
    feature_mode: str = "tf",
    idf: IdfTable | None = None,
    n_jobs: int = 1,
    kernels=None,
) -> FlatModel:
    """Fit one one-vs-all classifier per leaf over every labeled document."""
    _check_training_corpus(h, c)
    everything = np.arange(len(c))
    leaves = sorted(h.leaves)
    jobs = (_training_set_from_rows(c, everything, np.flatnonzero(c.labels == leaf)) for leaf in leaves)
    results = _fit_all(jobs, cfg, n_jobs, kernels)
    classifiers = {leaf: r[0] for leaf, r in zip(leaves, results)}
    stats = {leaf: r[1] for leaf, r in zip(leaves, results)}
    return FlatModel(h, classifiers, c.num_features, feature_mode, idf, stats)


# ---------------------------------------------------------------------------
# prediction


def _as_matrix(model: _Scorer, d: Document | Mapping[int, float]) -> sp.csr_matrix:
    feats = d.features if isinstance(d, Document) else d
    items = sorted((f, v) for f, v in feats.items() if f < model.num_features)
    idx = np.array([f for f, _ in items], dtype=np.int32)
    val = np.array([v for _, v in items], dtype=np.float64)
    return sp.csr_matrix((val, idx, np.array([0, len(items)])), shape=(1, model.num_features))


def _kernels(kernels):
    return kernels or _backend.kernels


def ppath_log_scores(m: HierModel, X, kernels=None) -> tuple[np.ndarray, np.ndarray]:
    """Leaf ids (ascending) and the (n_docs, n_leaves) path log-scores.

    Each node classifier is scored once per document; a preorder pass then
    accumulates log-probabilities from the root down.
    """
    lay = m._layout
    logits = m.node_logits(X)
    cum = _kernels(kernels).path_log_scores(logits, lay["parent"])
    return lay["leaf_ids"], np.ascontiguousarray(cum[:, lay["leaf_cols"]])


def ppath_scores(m: HierModel, d: Document | Mapping[int, float], kernels=None) -> list[ScoredLeaf]:
    leaf_ids, scores = ppath_log_scores(m, _as_matrix(m, d), kernels)
    return [ScoredLeaf(int(l), float(s)) for l, s in zip(leaf_ids, scores[0])]


def ppath_predict_batch(m: HierModel, X, kernels=None) -> np.ndarray:
    leaf_ids, scores = ppath_log_scores(m, X, kernels)
    return leaf_ids[np.argmax(scores, axis=1)] if len(scores) else np.zeros(0, dtype=np.int64)


def ppath_predict(m: HierModel, d: Document | Mapping[int, float], kernels=None) -> int:
    return int(ppath_predict_batch(m, _as_matrix(m, d), kernels)[0])


def cascade_predict_batch(m: HierModel, X, kernels=None) -> np.ndarray:
    lay = m._layout
    logits = m.node_logits(X)
    cols = _kernels(kernels).cascade_descend(logits, lay["child_ptr"], lay["child_idx"])
    return lay["columns"][cols]


def cascade_predict(m: HierModel, d: Document | Mapping[int, float], kernels=None) -> int:
    return int(cascade_predict_batch(m, _as_matrix(m, d), kernels)[0])


def cascade_path(m: HierModel, d: Document | Mapping[int, float]) -> list[ScoredLeaf]:
    """Replay the greedy descent: (node, log-probability) for each step taken."""
    lay = m._layout
    logits = m.node_logits(_as_matrix(m, d))[0]
    lsig = _backend.kernels.log_sigmoid(logits)
    ptr, idx = lay["child_ptr"], lay["child_idx"]
    node = len(lay["columns"])
    path = []
    while ptr[node + 1] > ptr[node]:
        kids = idx[ptr[node] : ptr[node + 1]]
        node = int(kids[int(np.argmax(logits[kids]))])
        path.append(ScoredLeaf(int(lay["columns"][node]), float(lsig[node])))
    return path


def flat_log_scores(m: FlatModel, X, kernels=None) -> tuple[np.ndarray, np.ndarray]:
    lay = m._layout
    logits = m.leaf_logits(X)
    return lay["leaf_ids"], _kernels(kernels).log_sigmoid(logits)


def flat_scores(m: FlatModel, d: Document | Mapping[int, float], kernels=None) -> list[ScoredLeaf]:
    leaf_ids, scores = flat_log_scores(m, _as_matrix(m, d), kernels)
    return [ScoredLeaf(int(l), float(s)) for l, s in zip(leaf_ids, scores[0])]


def flat_predict_batch(m: FlatModel, X, kernels=None) -> np.ndarray:
    leaf_ids, scores = flat_log_scores(m, X, kernels)
    return leaf_ids[np.argmax(scores, axis=1)] if len(scores) else np.zeros(0, dtype=np.int64)


def flat_predict(m: FlatModel, d: Document | Mapping[int, float], kernels=None) -> int:
    return int(flat_predict_batch(m, _as_matrix(m, d), kernels)[0])


def top_k(scores: Iterable[ScoredLeaf], k: int) -> list[int]:
    """Best ``k`` leaves by score, ties to the smaller id."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(scores, key=lambda s: (-s[1], s[0]))
    return [int(s[0]) for s in ranked[:k]]


def top_k_batch(leaf_ids: np.ndarray, scores: np.ndarray, k: int) -> np.ndarray:
    """Row-wise :func:`top_k` on a score matrix whose columns follow ascending ``leaf_ids``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, scores.shape[1])
    # Stable sort on the negated scores keeps ascending-id order within ties.
    order = np.argsort(-scores, axis=1, kind="stable")[:, :k]
    return leaf_ids[order]


# ---------------------------------------------------------------------------
# serialization


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dump_model(model: HierModel | FlatModel, fh) -> None:
    kind = "hierarchical" if isinstance(model, HierModel) else "flat"
    w = fh.write
    w(f"{_MAGIC} {FORMAT_VERSION}\n")
    w(f"kind {kind}\n")
    w(f"features {model.feature_mode}\n")
    w(f"num_features {model.num_features}\n")
    if model.idf is not None:
        df = model.idf.doc_frequency
        nz = np.flatnonzero(df)
        w(f"idf {model.idf.num_documents} {len(df)} {len(nz)}\n")
        for f in nz.tolist():
            w(f"{f}:{int(df[f])}\n")
    edges = model.hierarchy.edges()
    w(f"hierarchy {len(edges)}\n")
    for p, c in edges:
        w(f"{p} {c}\n")
    if isinstance(model, HierModel):
        h = model.hierarchy
        order = [n for n in h.preorder if n != h.root]
        table = model.node_classifiers
    else:
        order = sorted(model.leaf_classifiers)
        table = model.leaf_classifiers
    for n in order:
        clf = table[n]
        w(f"node {n} bias {_fmt(clf.bias)}\n")
        for f, v in zip(clf.indices.tolist(), clf.values.tolist()):
            w(f"{f}:{_fmt(v)}\n")


def dumps_model(model: HierModel | FlatModel) -> str:
    buf = io.StringIO()
    dump_model(model, buf)
    return buf.getvalue()


def save_model(model: HierModel | FlatModel, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        dump_model(model, fh)


def _expect(lines, pos, keyword):
    if pos >= len(lines):
        raise MalformedLine(pos + 1, f"unexpected end of model file, wanted {keyword!r}")
    parts = lines[pos].split()
    if not parts or parts[0] != keyword:
        raise MalformedLine(pos + 1, f"expected {keyword!r}")
    return parts


def loads_model(text: str) -> HierModel | FlatModel:
    lines = text.splitlines()
    head = _expect(lines, 0, _MAGIC)
    if len(head) != 2 or head[1] != str(FORMAT_VERSION):
        raise MalformedLine(1, f"unsupported model format {' '.join(head[1:])}")
    try:
        kind = _expect(lines, 1, "kind")[1]
        mode = _expect(lines, 2, "features")[1]
        num_features = int(_expect(lines, 3, "num_features")[1])
        pos = 4
        idf = None
        if pos < len(lines) and lines[pos].startswith("idf "):
            _, n_docs, width, count = lines[pos].split()
            df = np.zeros(int(width), dtype=np.int64)
            for i in range(pos + 1, pos + 1 + int(count)):
                f, v = lines[i].split(":")
                df[int(f)] = int(v)
            idf = IdfTable(int(n_docs), df)
            pos += 1 + int(count)
        n_edges = int(_expect(lines, pos, "hierarchy")[1])
        edges = []
        for i in range(pos + 1, pos + 1 + n_edges):
            p, c = lines[i].split()
            edges.append((int(p), int(c)))
        pos += 1 + n_edges
        h = Hierarchy(edges)
        table: dict[int, NodeClassifier] = {}
        while pos < len(lines):
            parts = _expect(lines, pos, "node")
            if len(parts) != 4 or parts[2] != "bias":
                raise MalformedLine(pos + 1, "expected 'node <id> bias <value>'")
            node, bias = int(parts[1]), float(parts[3])
            pos += 1
            idx, val = [], []
            while pos < len(lines) and not lines[pos].startswith("node "):
                f, v = lines[pos].split(":")
                idx.append(int(f))
                val.append(float(v))
                pos += 1
            table[node] = NodeClassifier(np.array(idx, dtype=np.int64), np.array(val, dtype=np.float64), bias)
    except (ValueError, IndexError) as exc:
        if isinstance(exc, DataError):
            raise
        raise MalformedLine(pos + 1, str(exc)) from None
    if mode == "tfidf" and idf is None:
        raise DataError("tfidf model without an idf table")
    if kind == "hierarchical":
        return HierModel(h, table, num_features, mode, idf)
    if kind == "flat":
        return FlatModel(h, table, num_features, mode, idf)
    raise DataError(f"unknown model kind {kind!r}")


def load_model(path: str | os.PathLike) -> HierModel | FlatModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
