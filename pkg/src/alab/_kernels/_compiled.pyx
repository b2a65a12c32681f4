# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled float32 kernels for the minibatch training loop.

Same contract as ``alab._kernels.pure`` (which is the reference): the caller
draws dropout masks and shuffles, so both backends consume identical random
streams; only floating-point rounding may differ between them.  Matrix
products go through BLAS sgemm, elementwise work through tight C loops.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport expf, logf, sqrtf
from scipy.linalg.cython_blas cimport sgemm

cnp.import_array()

cdef float LOG_CLAMP = 1e-12


cdef inline void _gemm(bint ta, bint tb, int M, int N, int K, float alpha,
                       const float* A, int lda, const float* B, int ldb,
                       float beta, float* C, int ldc) noexcept nogil:
    # Row-major C(M,N) = opA(A) @ opB(B) via the column-major transpose trick.
    cdef char cta = b'T' if ta else b'N'
    cdef char ctb = b'T' if tb else b'N'
    sgemm(&ctb, &cta, &N, &M, &K, &alpha, B, &ldb, A, &lda, &beta, C, &ldc)


cdef void _hidden(const float[:, ::1] x, const float[:, ::1] W1,
                  const float[::1] b1, object mask_obj, float[:, ::1] h):
    cdef int B = x.shape[0], D = x.shape[1], m = W1.shape[1]
    cdef int i, j
    cdef float v
    cdef bint has_mask = mask_obj is not None
    cdef float[:, ::1] mask
    if B == 0:
        return
    _gemm(0, 0, B, m, D, 1.0, &x[0, 0], D, &W1[0, 0], m, 0.0, &h[0, 0], m)
    if has_mask:
        mask = mask_obj
        for i in range(B):
            for j in range(m):
                v = h[i, j] + b1[j]
                if v < 0:
                    v = 0
                h[i, j] = v * mask[i, j]
    else:
        for i in range(B):
            for j in range(m):
                v = h[i, j] + b1[j]
                if v < 0:
                    v = 0
                h[i, j] = v


cdef void _softmax_rows(float[:, ::1] p):
    cdef int B = p.shape[0], C = p.shape[1]
    cdef int i, c
    cdef float mx, s
    for i in range(B):
        mx = p[i, 0]
        for c in range(1, C):
            if p[i, c] > mx:
                mx = p[i, c]
        s = 0.0
        for c in range(C):
            p[i, c] = expf(p[i, c] - mx)
            s += p[i, c]
        for c in range(C):
            p[i, c] = p[i, c] / s


def forward_probs(float[:, ::1] W1, float[::1] b1,
                  float[:, ::1] W2, float[::1] b2,
                  float[:, ::1] x, object mask=None):
    """Class probabilities softmax(relu(x@W1+b1)*mask @ W2 + b2)."""
    cdef int B = x.shape[0], m = W1.shape[1], C = W2.shape[1]
    h_arr = np.empty((B, m), dtype=np.float32)
    p_arr = np.empty((B, C), dtype=np.float32)
    cdef float[:, ::1] h = h_arr
    cdef float[:, ::1] p = p_arr
    cdef int i, c
    if B == 0:
        return p_arr
    _hidden(x, W1, b1, mask, h)
    _gemm(0, 0, B, C, m, 1.0, &h[0, 0], m, &W2[0, 0], C, 0.0, &p[0, 0], C)
    for i in range(B):
        for c in range(C):
            p[i, c] = p[i, c] + b2[c]
    _softmax_rows(p)
    return p_arr


cdef void _adam_tensor(float* w, float* m, float* v, const float* g, long n,
                       float lr, float beta1, float beta2, float eps,
                       float c1, float c2) noexcept nogil:
    cdef long i
    for i in range(n):
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i]
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i]
        w[i] = w[i] - lr * (m[i] / c1) / (sqrtf(v[i] / c2) + eps)


def train_minibatch(float[:, ::1] W1, float[::1] b1,
                    float[:, ::1] W2, float[::1] b2,
                    float[:, ::1] mW1, float[:, ::1] vW1,
                    float[::1] mb1, float[::1] vb1,
                    float[:, ::1] mW2, float[:, ::1] vW2,
                    float[::1] mb2, float[::1] vb2,
                    float[:, ::1] x, long[::1] y, object mask,
                    long step, double lr, double beta1, double beta2,
                    double eps):
    """Fused forward/backward/Adam step on one minibatch; returns the loss."""
    cdef int B = x.shape[0], D = x.shape[1], m = W1.shape[1], C = W2.shape[1]
    h_arr = np.empty((B, m), dtype=np.float32)
    dl_arr = np.empty((B, C), dtype=np.float32)
    dh_arr = np.empty((B, m), dtype=np.float32)
    gW1_arr = np.empty((D, m), dtype=np.float32)
    gW2_arr = np.empty((m, C), dtype=np.float32)
    gb1_arr = np.zeros(m, dtype=np.float32)
    gb2_arr = np.zeros(C, dtype=np.float32)
    cdef float[:, ::1] h = h_arr
    cdef float[:, ::1] dl = dl_arr
    cdef float[:, ::1] dh = dh_arr
    cdef float[:, ::1] gW1 = gW1_arr
    cdef float[:, ::1] gW2 = gW2_arr
    cdef float[::1] gb1 = gb1_arr
    cdef float[::1] gb2 = gb2_arr
    cdef bint has_mask = mask is not None
    cdef float[:, ::1] maskv
    cdef int i, j, c
    cdef float p, g, invB
    cdef double loss = 0.0
    cdef float c1 = <float>(1.0 - beta1 ** step)
    cdef float c2 = <float>(1.0 - beta2 ** step)
    cdef float lrf = <float>lr, b1f = <float>beta1, b2f = <float>beta2
    cdef float epsf = <float>eps

    if B == 0:
        return 0.0

    # forward
    _hidden(x, W1, b1, mask, h)
    _gemm(0, 0, B, C, m, 1.0, &h[0, 0], m, &W2[0, 0], C, 0.0, &dl[0, 0], C)
    for i in range(B):
        for c in range(C):
            dl[i, c] = dl[i, c] + b2[c]
    _softmax_rows(dl)

    # loss and softmax/cross-entropy gradient, both on the probs buffer
    invB = <float>(1.0 / B)
    for i in range(B):
        p = dl[i, y[i]]
        if p < LOG_CLAMP:
            p = LOG_CLAMP
        loss -= logf(p)
        dl[i, y[i]] -= 1.0
    loss /= B
    for i in range(B):
        for c in range(C):
            dl[i, c] *= invB

    # backward
    _gemm(1, 0, m, C, B, 1.0, &h[0, 0], m, &dl[0, 0], C, 0.0, &gW2[0, 0], C)
    for i in range(B):
        for c in range(C):
            gb2[c] += dl[i, c]
    _gemm(0, 1, B, m, C, 1.0, &dl[0, 0], C, &W2[0, 0], C, 0.0, &dh[0, 0], m)
    if has_mask:
        maskv = mask
        for i in range(B):
            for j in range(m):
                g = dh[i, j] * maskv[i, j]
                if h[i, j] <= 0:
                    g = 0
                dh[i, j] = g
    else:
        for i in range(B):
            for j in range(m):
                if h[i, j] <= 0:
                    dh[i, j] = 0
    _gemm(1, 0, D, m, B, 1.0, &x[0, 0], D, &dh[0, 0], m, 0.0, &gW1[0, 0], m)
    for i in range(B):
        for j in range(m):
            gb1[j] += dh[i, j]

    # Adam updates
    _adam_tensor(&W1[0, 0], &mW1[0, 0], &vW1[0, 0], &gW1[0, 0],
                 <long>D * m, lrf, b1f, b2f, epsf, c1, c2)
    _adam_tensor(&b1[0], &mb1[0], &vb1[0], &gb1[0],
                 m, lrf, b1f, b2f, epsf, c1, c2)
    _adam_tensor(&W2[0, 0], &mW2[0, 0], &vW2[0, 0], &gW2[0, 0],
                 <long>m * C, lrf, b1f, b2f, epsf, c1, c2)
    _adam_tensor(&b2[0], &mb2[0], &vb2[0], &gb2[0],
                 C, lrf, b1f, b2f, epsf, c1, c2)
    return loss
