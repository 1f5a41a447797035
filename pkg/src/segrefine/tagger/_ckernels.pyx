# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled LSTM sequence kernels (hot-loop backend).

Same contract as kernels_py: float64 C-order arrays, gate-stacked
(4H, H) weights, per-step state masking.  Matrix products go through
BLAS dgemm on the row-major buffers; gate nonlinearities and state
updates are fused per-step loops.
"""

from libc.math cimport exp, tanh

import numpy as np

from scipy.linalg.cython_blas cimport dgemm

NAME = "cython"


cdef inline double _sig(double z) noexcept nogil:
    cdef double e
    if z >= 0.0:
        return 1.0 / (1.0 + exp(-z))
    e = exp(z)
    return e / (1.0 + e)


cdef void _gemm_abt(double* a, double* b, double* c,
                    int m, int n, int k, double beta) noexcept nogil:
    # c (m, n) = a (m, k) @ b (n, k)^T + beta * c, all row-major.
    cdef double alpha = 1.0
    cdef int lda = k, ldb = k, ldc = n
    dgemm(b"T", b"N", &n, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


cdef void _gemm_atb(double* a, double* b, double* c,
                    int m, int n, int k, double beta) noexcept nogil:
    # c (m, n) = a (k, m)^T @ b (k, n) + beta * c, all row-major.
    cdef double alpha = 1.0
    cdef int lda = m, ldb = n, ldc = n
    dgemm(b"N", b"T", &ldc, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


cdef void _gemm_ab(double* a, double* b, double* c,
                   int m, int n, int k, double beta) noexcept nogil:
    # c (m, n) = a (m, k) @ b (k, n) + beta * c, all row-major.
    cdef double alpha = 1.0
    cdef int lda = k, ldb = n, ldc = n
    dgemm(b"N", b"N", &ldb, &m, &k, &alpha, b, &ldb, a, &lda, &beta, c, &ldc)


def lstm_forward(double[:, ::1] Wx, double[:, ::1] Wh,
                 double[:, :, ::1] x, double[:, ::1] mask):
    cdef Py_ssize_t T = x.shape[0], B = x.shape[1], H = x.shape[2]
    h_arr = np.zeros((T, B, H))
    c_arr = np.zeros((T, B, H))
    g_arr = np.empty((T, B, 4 * H))
    raw_arr = np.empty((B, 4 * H))
    zeros_arr = np.zeros((B, H))
    cdef double[:, :, ::1] h = h_arr
    cdef double[:, :, ::1] c = c_arr
    cdef double[:, :, ::1] gates = g_arr
    cdef double[:, ::1] raw = raw_arr
    cdef double[:, ::1] zeros = zeros_arr
    cdef double[:, ::1] h_prev, c_prev
    cdef Py_ssize_t t, b, j
    cdef double m, iv, fv, gv, ov, cv
    for t in range(T):
        h_prev = h[t - 1] if t > 0 else zeros
        c_prev = c[t - 1] if t > 0 else zeros
        _gemm_abt(&x[t, 0, 0], &Wx[0, 0], &raw[0, 0], <int>B, <int>(4 * H), <int>H, 0.0)
        _gemm_abt(&h_prev[0, 0], &Wh[0, 0], &raw[0, 0], <int>B, <int>(4 * H), <int>H, 1.0)
        for b in range(B):
            m = mask[t, b]
            for j in range(H):
                iv = _sig(raw[b, j])
                fv = _sig(raw[b, H + j])
                gv = raw[b, 2 * H + j]
                ov = _sig(raw[b, 3 * H + j])
                cv = (fv * c_prev[b, j] + iv * gv) * m
                gates[t, b, j] = iv
                gates[t, b, H + j] = fv
                gates[t, b, 2 * H + j] = gv
                gates[t, b, 3 * H + j] = ov
                c[t, b, j] = cv
                h[t, b, j] = (ov * tanh(cv) + (1.0 - iv) * x[t, b, j]) * m
    return h_arr, c_arr, g_arr


def lstm_backward(double[:, ::1] Wx, double[:, ::1] Wh,
                  double[:, :, ::1] x, double[:, ::1] mask,
                  double[:, :, ::1] h, double[:, :, ::1] c,
                  double[:, :, ::1] gates, double[:, :, ::1] dh_out):
    cdef Py_ssize_t T = x.shape[0], B = x.shape[1], H = x.shape[2]
    dx_arr = np.zeros((T, B, H))
    dWx_arr = np.zeros((4 * H, H))
    dWh_arr = np.zeros((4 * H, H))
    draw_arr = np.empty((B, 4 * H))
    dh_rec_arr = np.zeros((B, H))
    dc_rec_arr = np.zeros((B, H))
    zeros_arr = np.zeros((B, H))
    cdef double[:, :, ::1] dx = dx_arr
    cdef double[:, ::1] dWx = dWx_arr
    cdef double[:, ::1] dWh = dWh_arr
    cdef double[:, ::1] draw = draw_arr
    cdef double[:, ::1] dh_rec = dh_rec_arr
    cdef double[:, ::1] dc_rec = dc_rec_arr
    cdef double[:, ::1] zeros = zeros_arr
    cdef double[:, ::1] h_prev, c_prev
    cdef Py_ssize_t t, b, j
    cdef double m, dh, tc, iv, fv, gv, ov, dc, dd
    for t in range(T - 1, -1, -1):
        h_prev = h[t - 1] if t > 0 else zeros
        c_prev = c[t - 1] if t > 0 else zeros
        for b in range(B):
            m = mask[t, b]
            for j in range(H):
                dh = (dh_out[t, b, j] + dh_rec[b, j]) * m
                tc = tanh(c[t, b, j])
                iv = gates[t, b, j]
                fv = gates[t, b, H + j]
                gv = gates[t, b, 2 * H + j]
                ov = gates[t, b, 3 * H + j]
                dc = (dh * ov * (1.0 - tc * tc) + dc_rec[b, j]) * m
                dd = dc * gv - dh * x[t, b, j]
                draw[b, j] = dd * iv * (1.0 - iv)
                dd = dc * c_prev[b, j]
                draw[b, H + j] = dd * fv * (1.0 - fv)
                draw[b, 2 * H + j] = dc * iv
                dd = dh * tc
                draw[b, 3 * H + j] = dd * ov * (1.0 - ov)
                dx[t, b, j] = dh * (1.0 - iv)
                dc_rec[b, j] = dc * fv
        _gemm_atb(&draw[0, 0], &x[t, 0, 0], &dWx[0, 0], <int>(4 * H), <int>H, <int>B, 1.0)
        _gemm_atb(&draw[0, 0], &h_prev[0, 0], &dWh[0, 0], <int>(4 * H), <int>H, <int>B, 1.0)
        _gemm_ab(&draw[0, 0], &Wx[0, 0], &dx[t, 0, 0], <int>B, <int>H, <int>(4 * H), 1.0)
        _gemm_ab(&draw[0, 0], &Wh[0, 0], &dh_rec[0, 0], <int>B, <int>H, <int>(4 * H), 0.0)
    return dx_arr, dWx_arr, dWh_arr
