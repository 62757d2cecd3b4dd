# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for logistic training and path scoring.

Mirrors ``_pykernels``; loops release the GIL so node trainings can run on
a thread pool.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs

cnp.import_array()

NAME = "cython"


cdef inline double _log_sigmoid(double z) noexcept nogil:
    if z >= 0:
        return -log1p(exp(-z))
    return z - log1p(exp(z))


def log_sigmoid(z):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] flat = np.ascontiguousarray(z, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(flat)
    cdef double[::1] fv = flat
    cdef double[::1] ov = out
    cdef Py_ssize_t i, n = flat.shape[0]
    with nogil:
        for i in range(n):
            ov[i] = _log_sigmoid(fv[i])
    return out.reshape(np.shape(z))


def loss_grad(indptr, indices, data, y, w, double b, double c):
    cdef const cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const cnp.int32_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef const double[::1] dv = np.ascontiguousarray(data, dtype=np.float64)
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(w, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1, d = wv.shape[0]
    grad = np.array(w, dtype=np.float64, copy=True, order="C")
    curv = np.empty(n, dtype=np.float64)
    cdef double[::1] gv = grad
    cdef double[::1] cv = curv
    cdef Py_ssize_t i, k
    cdef double z, m, s, e, coef, gb = 0.0, data_loss = 0.0, reg = 0.0
    with nogil:
        for k in range(d):
            reg += wv[k] * wv[k]
        for i in range(n):
            z = b
            for k in range(ip[i], ip[i + 1]):
                z += dv[k] * wv[ix[k]]
            m = yv[i] * z
            # one exp feeds both softplus(-m) and sigmoid(-m)
            e = exp(-fabs(m))
            if m >= 0:
                data_loss += log1p(e)
                s = e / (1.0 + e)
            else:
                data_loss += -m + log1p(e)
                s = 1.0 / (1.0 + e)
            cv[i] = s * (1.0 - s)
            coef = -c * yv[i] * s
            gb += coef
            for k in range(ip[i], ip[i + 1]):
                gv[ix[k]] += coef * dv[k]
    return 0.5 * reg + c * data_loss, grad, gb, curv


def hess_vec(indptr, indices, data, curv, v, double vb, double c):
    cdef const cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef const cnp.int32_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int32)
    cdef const double[::1] dv = np.ascontiguousarray(data, dtype=np.float64)
    cdef const double[::1] cv = np.ascontiguousarray(curv, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = ip.shape[0] - 1
    out = np.array(v, dtype=np.float64, copy=True, order="C")
    cdef double[::1] ov = out
    cdef Py_ssize_t i, k
    cdef double r, t, hb = 0.0
    with nogil:
        for i in range(n):
            r = vb
            for k in range(ip[i], ip[i + 1]):
                r += dv[k] * vv[ix[k]]
            t = c * cv[i] * r
            hb += t
            for k in range(ip[i], ip[i + 1]):
                ov[ix[k]] += t * dv[k]
    return out, hb


def path_log_scores(logits, parent):
    cdef const double[:, ::1] lv = np.ascontiguousarray(logits, dtype=np.float64)
    cdef const cnp.int64_t[::1] pv = np.ascontiguousarray(parent, dtype=np.int64)
    cdef Py_ssize_t n_docs = lv.shape[0], n_nodes = lv.shape[1], i, j
    out = np.empty((n_docs, n_nodes), dtype=np.float64)
    cdef double[:, ::1] ov = out
    with nogil:
        for i in range(n_docs):
            for j in range(n_nodes):
                if pv[j] < 0:
                    ov[i, j] = _log_sigmoid(lv[i, j])
                else:
                    ov[i, j] = ov[i, pv[j]] + _log_sigmoid(lv[i, j])
    return out


def cascade_descend(logits, child_ptr, child_idx):
    cdef const double[:, ::1] lv = np.ascontiguousarray(logits, dtype=np.float64)
    cdef const cnp.int64_t[::1] cp = np.ascontiguousarray(child_ptr, dtype=np.int64)
    cdef const cnp.int64_t[::1] ci = np.ascontiguousarray(child_idx, dtype=np.int64)
    cdef Py_ssize_t n_docs = lv.shape[0], n_nodes = lv.shape[1], i, k, node, best, cand
    cdef double best_z
    out = np.empty(n_docs, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    with nogil:
        for i in range(n_docs):
            node = n_nodes
            while cp[node + 1] > cp[node]:
                best = ci[cp[node]]
                best_z = lv[i, best]
                for k in range(cp[node] + 1, cp[node + 1]):
                    cand = ci[k]
                    if lv[i, cand] > best_z:
                        best = cand
                        best_z = lv[i, cand]
                node = best
            ov[i] = node
    return out
