"""L2-regularized binary logistic regression on sparse documents.

Minimizes ``J(w, b) = 0.5*|w|^2 + C * sum_i log(1 + exp(-y_i (w.x_i + b)))``
with an unregularized bias, using a truncated Newton method whose
Hessian-vector products come from the compiled kernels.
"""

from __future__ import annotations

import math
import warnings
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _backend
from .corpus import Document
from .errors import EmptyTrainingSetWarning, NonFiniteLoss, SingleClassDataWarning

# Bias of the constant classifier used when a node sees only one class;
# sigma(30) = 1 - 9.4e-14.
SINGLE_CLASS_LOGIT = 30.0

_TINY = math.ulp(0.0)
_ALMOST_ONE = 1.0 - 2.0**-53


@dataclass(frozen=True)
class TrainConfig:
    c: float = 1.0
    max_iterations: int = 1000
    tolerance: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"c must be a positive finite number, got {self.c}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True, eq=False)
class NodeClassifier:
    """Sparse weight vector (sorted ``indices``/``values``) plus bias."""

    indices: np.ndarray
    values: np.ndarray
    bias: float

    def __post_init__(self):
        if not math.isfinite(self.bias) or not np.all(np.isfinite(self.values)):
            raise ValueError("classifier parameters must be finite")

    @classmethod
    def constant(cls, bias: float) -> NodeClassifier:
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.float64), float(bias))

    @classmethod
    def from_dense(cls, w: np.ndarray, bias: float) -> NodeClassifier:
        nz = np.flatnonzero(w)
        return cls(nz.astype(np.int64), np.asarray(w, dtype=np.float64)[nz].copy(), float(bias))

    @classmethod
    def from_mapping(cls, weights: Mapping[int, float], bias: float) -> NodeClassifier:
        items = sorted((int(f), float(v)) for f, v in weights.items() if v != 0.0)
        idx = np.array([f for f, _ in items], dtype=np.int64)
        val = np.array([v for _, v in items], dtype=np.float64)
        return cls(idx, val, float(bias))

    @property
    def weights(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def negated(self) -> NodeClassifier:
        return NodeClassifier(self.indices, -self.values, -self.bias)

    def scaled(self, factor: float) -> NodeClassifier:
        return NodeClassifier(self.indices, self.values * factor, self.bias * factor)

    def logit(self, d: Document | Mapping[int, float]) -> float:
        feats = d.features if isinstance(d, Document) else d
        if not feats or len(self.indices) == 0:
            return self.bias
        total = self.bias
        idx = self.indices
        pos = np.searchsorted(idx, list(feats.keys()))
        for p, (f, x) in zip(pos.tolist(), feats.items()):
            if p < len(idx) and idx[p] == f:
                total += self.values[p] * x
        return total

    def same_as(self, other: NodeClassifier) -> bool:
        """Bit-exact parameter equality."""
        return (
            np.array_equal(self.indices, other.indices)
            and self.values.tobytes() == other.values.tobytes()
            and float(self.bias).hex() == float(other.bias).hex()
        )


@dataclass(frozen=True, eq=False)
class LabeledSet:
    """Binary training data: sparse rows ``X`` with signs ``y`` in {+1, -1}."""

    X: sp.csr_matrix
    y: np.ndarray

    def __post_init__(self):
        if self.X.shape[0] != len(self.y):
            raise ValueError("X and y disagree on the number of examples")
        if len(self.y) and not np.all(np.abs(self.y) == 1):
            raise ValueError("signs must be +1 or -1")

    @classmethod
    def from_examples(cls, examples: Iterable[tuple[Document | Mapping[int, float], int]], num_features=None):
        rows, signs = [], []
        for d, s in examples:
            rows.append(d.features if isinstance(d, Document) else d)
            signs.append(float(s))
        width = max((max(r) + 1 for r in rows if r), default=0)
        if num_features is not None:
            width = max(width, num_features)
        indptr, indices, data = [0], [], []
        for r in rows:
            for f in sorted(r):
                indices.append(f)
                data.append(float(r[f]))
            indptr.append(len(indices))
        X = sp.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
            shape=(len(rows), width),
        )
        return cls(X, np.asarray(signs, dtype=np.float64))

    @property
    def examples(self) -> list[tuple[Document, int]]:
        X = self.X
        out = []
        for i in range(X.shape[0]):
            lo, hi = X.indptr[i], X.indptr[i + 1]
            out.append((Document(dict(zip(X.indices[lo:hi].tolist(), X.data[lo:hi].tolist()))), int(self.y[i])))
        return out

    @property
    def n_positive(self) -> int:
        return int(np.sum(self.y > 0))

    @property
    def n_negative(self) -> int:
        return int(np.sum(self.y < 0))

    def __len__(self):
        return len(self.y)


@dataclass(frozen=True)
class FitInfo:
    status: str  # "ok", "single-class" or "empty"
    n_positive: int
    n_negative: int
    iterations: int = 0
    objective: float = 0.0
    grad_norm: float = 0.0
    converged: bool = True


def _arrays(X: sp.csr_matrix):
    X = sp.csr_matrix(X, dtype=np.float64)
    X.sort_indices()
    return (
        np.ascontiguousarray(X.indptr, dtype=np.int64),
        np.ascontiguousarray(X.indices, dtype=np.int32),
        np.ascontiguousarray(X.data, dtype=np.float64),
    )


def objective(data: LabeledSet, w: np.ndarray, b: float, c: float, kernels=None) -> float:
    k = kernels or _backend.kernels
    ip, ix, dv = _arrays(data.X)
    return k.loss_grad(ip, ix, dv, data.y, np.asarray(w, dtype=np.float64), float(b), float(c))[0]


def gradient(data: LabeledSet, w: np.ndarray, b: float, c: float, kernels=None) -> tuple[np.ndarray, float]:
    k = kernels or _backend.kernels
    ip, ix, dv = _arrays(data.X)
    _, gw, gb, _ = k.loss_grad(ip, ix, dv, data.y, np.asarray(w, dtype=np.float64), float(b), float(c))
    return gw, gb


def _cg(hess, gw, gb, gnorm2, max_steps):
    """Approximately solve H p = -g by conjugate gradients."""
    tol2 = min(0.25, math.sqrt(gnorm2)) ** 2 * gnorm2
    pw = np.zeros_like(gw)
    pb = 0.0
    rw, rb = -gw, -gb
    dw, db = rw.copy(), rb
    rr = float(rw @ rw) + rb * rb
    for _ in range(max_steps):
        if rr <= tol2:
            break
        hw, hb = hess(dw, db)
        dhd = float(dw @ hw) + db * hb
        if dhd <= 0.0:
            break
        alpha = rr / dhd
        pw += alpha * dw
        pb += alpha * db
        rw -= alpha * hw
        rb -= alpha * hb
        rr_new = float(rw @ rw) + rb * rb
        beta = rr_new / rr
        dw = rw + beta * dw
        db = rb + beta * db
        rr = rr_new
    if not pw.any() and pb == 0.0:
        return -gw, -gb
    return pw, pb


def fit_logistic(data: LabeledSet, cfg: TrainConfig, kernels=None) -> tuple[NodeClassifier, FitInfo]:
    """Train one binary classifier and report how the fit went.

    Degenerate node training sets do not raise: all-one-sign data yields a
    constant classifier at +/-``SINGLE_CLASS_LOGIT`` and empty data yields
    the zero classifier, each with a warning.
    """
    k = kernels or _backend.kernels
    n_pos, n_neg = data.n_positive, data.n_negative
    if n_pos == 0 and n_neg == 0:
        warnings.warn("empty training set; using the zero classifier", EmptyTrainingSetWarning, stacklevel=2)
        return NodeClassifier.constant(0.0), FitInfo("empty", 0, 0)
    if n_pos == 0 or n_neg == 0:
        sign = 1.0 if n_pos else -1.0
        warnings.warn(
            f"single-class training set ({n_pos} positive, {n_neg} negative); using a constant classifier",
            SingleClassDataWarning,
            stacklevel=2,
        )
        return NodeClassifier.constant(sign * SINGLE_CLASS_LOGIT), FitInfo("single-class", n_pos, n_neg)

    ip, ix, dv = _arrays(data.X)
    y = np.ascontiguousarray(data.y, dtype=np.float64)
    c = float(cfg.c)
    d = data.X.shape[1]
    w = np.zeros(d, dtype=np.float64)
    b = 0.0
    f, gw, gb, curv = k.loss_grad(ip, ix, dv, y, w, b, c)
    if not math.isfinite(f):
        raise NonFiniteLoss("objective is not finite at the starting point")

    def hess(vw, vb):
        return k.hess_vec(ip, ix, dv, curv, vw, vb, c)

    max_cg = max(10, min(d + 1, 500))
    it = 0
    converged = False
    gnorm = max(float(np.max(np.abs(gw))) if d else 0.0, abs(gb))
    while True:
        if gnorm <= cfg.tolerance:
            converged = True
            break
        if it >= cfg.max_iterations:
            break
        it += 1
        gnorm2 = float(gw @ gw) + gb * gb
        pw, pb = _cg(hess, gw, gb, gnorm2, max_cg)
        slope = float(gw @ pw) + gb * pb
        if slope >= 0.0:
            pw, pb = -gw, -gb
            slope = -gnorm2
        slack = 8.0 * np.finfo(np.float64).eps * abs(f)
        t = 1.0
        accepted = False
        for _ in range(60):
            w_new = w + t * pw
            b_new = b + t * pb
            f_new, gw_new, gb_new, curv_new = k.loss_grad(ip, ix, dv, y, w_new, b_new, c)
            if not math.isfinite(f_new):
                raise NonFiniteLoss(f"objective became {f_new} during training")
            if f_new <= f + 1e-4 * t * slope + slack:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        w, b, f, gw, gb, curv = w_new, b_new, f_new, gw_new, gb_new, curv_new
        gnorm = max(float(np.max(np.abs(gw))) if d else 0.0, abs(gb))

    if not np.all(np.isfinite(w)) or not math.isfinite(b):
        raise NonFiniteLoss("non-finite parameters after training")
    info = FitInfo("ok", n_pos, n_neg, it, f, gnorm, converged)
    return NodeClassifier.from_dense(w, b), info


def train_logistic(data: LabeledSet, cfg: TrainConfig, kernels=None) -> NodeClassifier:
    return fit_logistic(data, cfg, kernels)[0]


def _scalar_log_sigmoid(z: float) -> float:
    if z >= 0:
        return -math.log1p(math.exp(-z))
    return z - math.log1p(math.exp(z))


def sigmoid(z: float) -> float:
    """Logistic function clamped to the open interval (0, 1)."""
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        e = math.exp(z)
        p = e / (1.0 + e)
    if p <= 0.0:
        return _TINY
    if p >= 1.0:
        return _ALMOST_ONE
    return p


def predict_proba(m: NodeClassifier, d: Document | Mapping[int, float]) -> float:
    return sigmoid(m.logit(d))


def log_predict_proba(m: NodeClassifier, d: Document | Mapping[int, float]) -> float:
    return _scalar_log_sigmoid(m.logit(d))


def logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)
