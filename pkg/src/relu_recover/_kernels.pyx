# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled streaming kernels for the one-hidden-layer ReLU square loss."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double _dot(const double* u, const double* v, Py_ssize_t n) noexcept nogil:
    # four independent partial sums break the add latency chain
    cdef double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0
    cdef Py_ssize_t a = 0
    while a + 4 <= n:
        s0 += u[a] * v[a]
        s1 += u[a + 1] * v[a + 1]
        s2 += u[a + 2] * v[a + 2]
        s3 += u[a + 3] * v[a + 3]
        a += 4
    while a < n:
        s0 += u[a] * v[a]
        a += 1
    return (s0 + s1) + (s2 + s3)


cdef inline void _axpy(double r, const double* x, double* g, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t a
    for a in range(n):
        g[a] += r * x[a]


def loss_and_grad(const double[:, ::1] X, const double[::1] y, W):
    """Return ``(loss, grad)`` for ``loss = sum_i (sum_k relu(w_k.x_i) - y_i)^2 / 2N``.

    One pass over the rows; the indicator is inclusive at zero.
    """
    cdef Py_ssize_t N = X.shape[0], d = X.shape[1]
    cdef double[:, ::1] Wt = np.ascontiguousarray(np.asarray(W, dtype=np.float64).T)
    cdef Py_ssize_t K = Wt.shape[0]
    if Wt.shape[1] != d or y.shape[0] != N:
        raise ValueError("dimension mismatch")
    cdef double[:, ::1] Gt = np.zeros((K, d))
    cdef double[::1] z = np.empty(K)
    cdef Py_ssize_t i, k
    cdef double s, pred, r, total = 0.0
    with nogil:
        for i in range(N):
            pred = 0.0
            for k in range(K):
                s = _dot(&Wt[k, 0], &X[i, 0], d)
                z[k] = s
                if s > 0.0:
                    pred += s
            r = pred - y[i]
            total += r * r
            for k in range(K):
                if z[k] >= 0.0:
                    _axpy(r, &X[i, 0], &Gt[k, 0], d)
    G = np.asarray(Gt).T / N
    return total / (2.0 * N), np.ascontiguousarray(G)


def loss_only(const double[:, ::1] X, const double[::1] y, W):
    cdef Py_ssize_t N = X.shape[0], d = X.shape[1]
    cdef double[:, ::1] Wt = np.ascontiguousarray(np.asarray(W, dtype=np.float64).T)
    cdef Py_ssize_t K = Wt.shape[0]
    if Wt.shape[1] != d or y.shape[0] != N:
        raise ValueError("dimension mismatch")
    cdef Py_ssize_t i, k
    cdef double s, pred, r, total = 0.0
    with nogil:
        for i in range(N):
            pred = 0.0
            for k in range(K):
                s = _dot(&Wt[k, 0], &X[i, 0], d)
                if s > 0.0:
                    pred += s
            r = pred - y[i]
            total += r * r
    return total / (2.0 * N)
