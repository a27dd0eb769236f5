# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twin of pykernels: fused layer sweeps over BLAS dgemm.

Same ABI and float64 semantics as the numpy implementation; layer loops,
bias adds, ReLU masks, Adam, and Polyak blends run as single C passes.
"""

from libc.math cimport exp, log, log1p, sqrt, pow, tanh

import numpy as np

from scipy.linalg.cython_blas cimport dgemm

BACKEND = "compiled"

cdef double LOG_STD_MIN = -20.0
cdef double LOG_STD_MAX = 2.0
cdef double LOG_2PI = 1.8378770664093453
cdef double LOG_2 = 0.6931471805599453
cdef double ACTION_EDGE = 0.9999999999999999  # nextafter(1, 0)


cdef inline double _softplus(double x) noexcept nogil:
    if x > 0.0:
        return x + log1p(exp(-x))
    return log1p(exp(x))


cdef void _gemm_x_wt(double[:, ::1] x, double[:, ::1] w, double[:, ::1] out) noexcept nogil:
    # out(B,o) = x(B,i) @ w(o,i)^T, row-major buffers fed to a column-major BLAS
    cdef int b = x.shape[0], i = x.shape[1], o = w.shape[0]
    cdef double one = 1.0, zero = 0.0
    cdef char ta = b'T', tb = b'N'
    dgemm(&ta, &tb, &o, &b, &i, &one, &w[0, 0], &i, &x[0, 0], &i, &zero, &out[0, 0], &o)


cdef void _gemm_dt_a(double[:, ::1] d, double[:, ::1] a, double[:, ::1] out) noexcept nogil:
    # out(o,i) = d(B,o)^T @ a(B,i)
    cdef int b = d.shape[0], o = d.shape[1], i = a.shape[1]
    cdef double one = 1.0, zero = 0.0
    cdef char ta = b'N', tb = b'T'
    dgemm(&ta, &tb, &i, &o, &b, &one, &a[0, 0], &i, &d[0, 0], &o, &zero, &out[0, 0], &i)


cdef void _gemm_d_w(double[:, ::1] d, double[:, ::1] w, double[:, ::1] out) noexcept nogil:
    # out(B,i) = d(B,o) @ w(o,i)
    cdef int b = d.shape[0], o = d.shape[1], i = w.shape[1]
    cdef double one = 1.0, zero = 0.0
    cdef char ta = b'N', tb = b'N'
    dgemm(&ta, &tb, &i, &b, &o, &one, &w[0, 0], &i, &d[0, 0], &o, &zero, &out[0, 0], &i)


cdef void _bias_relu(double[:, ::1] h, double[::1] bias, bint relu) noexcept nogil:
    cdef Py_ssize_t r, c
    cdef double v
    for r in range(h.shape[0]):
        for c in range(h.shape[1]):
            v = h[r, c] + bias[c]
            if relu and v < 0.0:
                v = 0.0
            h[r, c] = v


cdef void _mask_by_active(double[:, ::1] d, double[:, ::1] act) noexcept nogil:
    cdef Py_ssize_t r, c
    for r in range(d.shape[0]):
        for c in range(d.shape[1]):
            if act[r, c] <= 0.0:
                d[r, c] = 0.0


cdef void _col_sum(double[:, ::1] d, double[::1] out) noexcept nogil:
    cdef Py_ssize_t r, c
    for c in range(d.shape[1]):
        out[c] = 0.0
    for r in range(d.shape[0]):
        for c in range(d.shape[1]):
            out[c] += d[r, c]


def mlp_forward(weights, biases, x):
    cdef Py_ssize_t last = len(weights) - 1
    h = np.ascontiguousarray(x, dtype=np.float64)
    for i in range(len(weights)):
        out = np.empty((h.shape[0], weights[i].shape[0]))
        _gemm_x_wt(h, weights[i], out)
        _bias_relu(out, biases[i], i < last)
        h = out
    return h


def mlp_forward_cached(weights, biases, x):
    cdef Py_ssize_t last = len(weights) - 1
    h = np.ascontiguousarray(x, dtype=np.float64)
    acts = [h]
    for i in range(len(weights)):
        out = np.empty((h.shape[0], weights[i].shape[0]))
        _gemm_x_wt(h, weights[i], out)
        _bias_relu(out, biases[i], i < last)
        h = out
        if i < last:
            acts.append(h)
    return h, acts


def mlp_backward(weights, acts, upstream):
    cdef Py_ssize_t n = len(weights)
    cdef Py_ssize_t i
    dws = [None] * n
    dbs = [None] * n
    d = np.ascontiguousarray(upstream, dtype=np.float64)
    for i in range(n - 1, -1, -1):
        dw = np.empty_like(weights[i])
        db = np.empty(weights[i].shape[0])
        _gemm_dt_a(d, acts[i], dw)
        _col_sum(d, db)
        dws[i] = dw
        dbs[i] = db
        dprev = np.empty((d.shape[0], weights[i].shape[1]))
        _gemm_d_w(d, weights[i], dprev)
        if i > 0:
            _mask_by_active(dprev, acts[i])
        d = dprev
    return dws, dbs, d


def mlp_backward_input(weights, acts, upstream):
    cdef Py_ssize_t i
    d = np.ascontiguousarray(upstream, dtype=np.float64)
    for i in range(len(weights) - 1, -1, -1):
        dprev = np.empty((d.shape[0], weights[i].shape[1]))
        _gemm_d_w(d, weights[i], dprev)
        if i > 0:
            _mask_by_active(dprev, acts[i])
        d = dprev
    return d


def head_sample(trunk_out, noise):
    cdef double[:, ::1] out = trunk_out
    cdef double[:, ::1] nz = noise
    cdef Py_ssize_t b = nz.shape[0], d = nz.shape[1]
    action_arr = np.empty((b, d))
    logp_arr = np.empty(b)
    std_arr = np.empty((b, d))
    cdef double[:, ::1] act = action_arr
    cdef double[::1] logp = logp_arr
    cdef double[:, ::1] std = std_arr
    cdef Py_ssize_t r, c
    cdef double ls, s, pre, n, lp, a
    with nogil:
        for r in range(b):
            lp = 0.0
            for c in range(d):
                ls = out[r, d + c]
                if ls < LOG_STD_MIN:
                    ls = LOG_STD_MIN
                elif ls > LOG_STD_MAX:
                    ls = LOG_STD_MAX
                s = exp(ls)
                n = nz[r, c]
                pre = out[r, c] + s * n
                a = tanh(pre)
                if a > ACTION_EDGE:
                    a = ACTION_EDGE
                elif a < -ACTION_EDGE:
                    a = -ACTION_EDGE
                act[r, c] = a
                std[r, c] = s
                lp += -0.5 * n * n - 0.5 * LOG_2PI - ls \
                    - 2.0 * (LOG_2 - pre - _softplus(-2.0 * pre))
            logp[r] = lp
    return action_arr, logp_arr, std_arr


def head_sample_grad(trunk_out, action, std, noise, d_action, d_log_prob):
    cdef double[:, ::1] out = trunk_out
    cdef double[:, ::1] act = action
    cdef double[:, ::1] sd = std
    cdef double[:, ::1] nz = noise
    cdef double[:, ::1] da = d_action
    cdef double[::1] dlp = d_log_prob
    cdef Py_ssize_t b = nz.shape[0], d = nz.shape[1]
    upstream_arr = np.empty((b, 2 * d))
    cdef double[:, ::1] up = upstream_arr
    cdef Py_ssize_t r, c
    cdef double a, g, raw
    with nogil:
        for r in range(b):
            for c in range(d):
                a = act[r, c]
                g = da[r, c] * (1.0 - a * a) + dlp[r] * (2.0 * a)
                up[r, c] = g
                raw = out[r, d + c]
                if LOG_STD_MIN <= raw <= LOG_STD_MAX:
                    up[r, d + c] = g * sd[r, c] * nz[r, c] - dlp[r]
                else:
                    up[r, d + c] = 0.0
    return upstream_arr


def soft_backup(reward, bootstrap, gamma, alpha, q1t, q2t, logp):
    cdef double[::1] rew = reward
    cdef double[::1] boot = bootstrap
    cdef double[::1] v1 = q1t
    cdef double[::1] v2 = q2t
    cdef double[::1] lp = logp
    cdef double g = gamma, al = alpha
    cdef Py_ssize_t n = rew.shape[0], k
    y_arr = np.empty(n)
    cdef double[::1] y = y_arr
    cdef double q
    with nogil:
        for k in range(n):
            q = v1[k] if v1[k] < v2[k] else v2[k]
            y[k] = rew[k] + boot[k] * g * (q - al * lp[k])
    return y_arr


def value_backup(base, bootstrap, gamma, vt):
    cdef double[::1] b0 = base
    cdef double[::1] boot = bootstrap
    cdef double[::1] v = vt
    cdef double g = gamma
    cdef Py_ssize_t n = b0.shape[0], k
    y_arr = np.empty(n)
    cdef double[::1] y = y_arr
    with nogil:
        for k in range(n):
            y[k] = b0[k] + boot[k] * g * v[k]
    return y_arr


def mse_upstream(pred, target):
    cdef double[:, ::1] p = pred
    cdef double[::1] t = target
    cdef Py_ssize_t n = t.shape[0], k
    up_arr = np.empty((n, 1))
    cdef double[:, ::1] up = up_arr
    cdef double loss = 0.0, r, scale = 2.0 / n
    with nogil:
        for k in range(n):
            r = p[k, 0] - t[k]
            loss += r * r
            up[k, 0] = scale * r
    return loss / n, up_arr


def adam_step_inplace(param, grad, m, v, step_count, lr, beta1, beta2, eps):
    cdef double[::1] p1 = param.ravel()
    cdef double[::1] g1 = np.ascontiguousarray(grad, dtype=np.float64).ravel()
    cdef double[::1] m1 = m.ravel()
    cdef double[::1] v1 = v.ravel()
    cdef double b1 = beta1, b2 = beta2, e = eps, rate = lr
    cdef double bc1 = 1.0 - pow(b1, <double> step_count)
    cdef double bc2 = 1.0 - pow(b2, <double> step_count)
    cdef Py_ssize_t k
    cdef double g
    with nogil:
        for k in range(p1.shape[0]):
            g = g1[k]
            m1[k] = b1 * m1[k] + (1.0 - b1) * g
            v1[k] = b2 * v1[k] + (1.0 - b2) * (g * g)
            p1[k] -= rate * (m1[k] / bc1) / (sqrt(v1[k] / bc2) + e)


def polyak_inplace(target, source, tau):
    cdef double[::1] t1 = target.ravel()
    cdef double[::1] s1 = source.ravel()
    cdef double tt = tau
    cdef Py_ssize_t k
    with nogil:
        for k in range(t1.shape[0]):
            t1[k] = (1.0 - tt) * t1[k] + tt * s1[k]
