"""Reference numpy implementations of the hot kernels.

Same signatures and semantics as the compiled ``_ckernels`` module; used
when the extension is unavailable or ``PROBCASCADE_BACKEND=python``.
"""

import numpy as np
import scipy.sparse as sp

NAME = "python"


def log_sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(z >= 0, -np.log1p(np.exp(-np.abs(z))), z - np.log1p(np.exp(-np.abs(z))))


def _softplus(x):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def _csr(indptr, indices, data, n_features):
    return sp.csr_matrix((data, indices, indptr), shape=(len(indptr) - 1, n_features))


def loss_grad(indptr, indices, data, y, w, b, c):
    """Objective ``0.5|w|^2 + c * sum softplus(-y(Xw+b))`` and its gradient.

    Returns ``(loss, grad_w, grad_b, curv)`` where ``curv[i] = s_i (1 - s_i)``
    is cached for Hessian-vector products.
    """
    X = _csr(indptr, indices, data, w.shape[0])
    m = y * (X @ w + b)
    loss = 0.5 * float(w @ w) + c * float(np.sum(_softplus(-m)))
    s = _sigmoid(-m)
    coef = -c * y * s
    grad_w = w + X.T @ coef
    grad_b = float(np.sum(coef))
    curv = s * (1.0 - s)
    return loss, np.ascontiguousarray(grad_w), grad_b, curv


def hess_vec(indptr, indices, data, curv, v, vb, c):
    X = _csr(indptr, indices, data, v.shape[0])
    t = c * curv * (X @ v + vb)
    return np.ascontiguousarray(v + X.T @ t), float(np.sum(t))


def path_log_scores(logits, parent):
    """Cumulative root-to-node log-probabilities.

    ``logits`` is (n_docs, n_nodes) with nodes in an order where each parent
    precedes its children; ``parent[j]`` is the column of node j's parent or
    -1 when the parent is the root.
    """
    ls = log_sigmoid(logits)
    out = np.empty_like(ls)
    for j in range(ls.shape[1]):
        p = parent[j]
        if p < 0:
            out[:, j] = ls[:, j]
        else:
            out[:, j] = out[:, p] + ls[:, j]
    return out


def cascade_descend(logits, child_ptr, child_idx):
    """Greedy descent per document; returns the reached node column.

    ``child_ptr``/``child_idx`` list children per column in CSR form, with
    the extra last slot (index n_nodes) standing for the root.
    """
    n_docs, n_nodes = logits.shape
    out = np.empty(n_docs, dtype=np.int64)
    ptr = child_ptr.tolist()
    idx = child_idx.tolist()
    for i in range(n_docs):
        row = logits[i]
        node = n_nodes
        while ptr[node + 1] > ptr[node]:
            lo, hi = ptr[node], ptr[node + 1]
            best = idx[lo]
            best_z = row[best]
            for k in range(lo + 1, hi):
                cand = idx[k]
                if row[cand] > best_z:
                    best = cand
                    best_z = row[cand]
            node = best
        out[i] = node
    return out
