# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch trial loop; see ``_fallback.run_batch`` for the contract."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log1p, exp, ceil, log2, INFINITY

cnp.import_array()


def run_batch(k_vector, long n, tx, rx, alpha, noise, double sqrt_p, double n0,
              double p_r, double gamma, long m_max, bint adaptive):
    cdef cnp.int64_t[::1] kv = np.ascontiguousarray(k_vector, dtype=np.int64)
    cdef cnp.int64_t[::1] tx_v = np.ascontiguousarray(tx, dtype=np.int64)
    cdef cnp.int64_t[::1] rx_v = np.ascontiguousarray(rx, dtype=np.int64)
    cdef double complex[::1] alpha_v = np.ascontiguousarray(alpha, dtype=np.complex128)
    cdef double complex[:, ::1] noise_v = np.ascontiguousarray(noise, dtype=np.complex128)
    cdef Py_ssize_t trials = tx_v.shape[0]
    cdef Py_ssize_t cap = noise_v.shape[1]
    cdef Py_ssize_t n_stages = kv.shape[0]
    cdef Py_ssize_t max_kk = 0
    cdef Py_ssize_t s
    for s in range(n_stages):
        if kv[s] * kv[s] > max_kk:
            max_kk = kv[s] * kv[s]

    out_tx = np.empty(trials, dtype=np.int64)
    out_rx = np.empty(trials, dtype=np.int64)
    out_alpha = np.empty(trials, dtype=np.complex128)
    out_total = np.empty(trials, dtype=np.int64)
    out_fb = np.empty(trials, dtype=np.int64)
    cdef cnp.int64_t[::1] o_tx = out_tx
    cdef cnp.int64_t[::1] o_rx = out_rx
    cdef double complex[::1] o_alpha = out_alpha
    cdef cnp.int64_t[::1] o_total = out_total
    cdef cnp.int64_t[::1] o_fb = out_fb

    cdef double complex[::1] sums = np.zeros(max_kk, dtype=np.complex128)
    cdef cnp.int64_t[::1] counts = np.zeros(max_kk, dtype=np.int64)
    cdef double[::1] scores = np.zeros(max_kk, dtype=np.float64)

    cdef double power = sqrt_p * sqrt_p
    cdef double threshold = 1.0 - gamma
    cdef Py_ssize_t t, j, kk, m, best, on_path
    cdef long reserved, k, size, tx_lo, rx_lo, tx_t, rx_t, kt_true, kr_true, fb, bits, cnt
    cdef double c2, g, sc, best_score, total, p_best, sr, si
    cdef double complex a, amp, y

    for t in range(trials):
        a = alpha_v[t]
        tx_t = tx_v[t]
        rx_t = rx_v[t]
        tx_lo = 0
        rx_lo = 0
        size = n
        m = 0
        fb = 0
        best = 0
        kk = 1
        c2 = 1.0
        for s in range(n_stages):
            k = kv[s]
            reserved = 0
            for j in range(s + 1, n_stages):
                reserved += kv[j] * kv[j]
            size = size // k
            c2 = 1.0 / size
            amp = sqrt_p * a * (n * c2)
            g = power * p_r * (n * c2) * (n * c2)
            if adaptive:
                bits = <long>ceil(log2(<double>k) + 1.0)
            else:
                bits = <long>ceil(log2(<double>k))
            kt_true = (tx_t - tx_lo) // size if tx_lo <= tx_t < tx_lo + k * size else -1
            kr_true = (rx_t - rx_lo) // size if rx_lo <= rx_t < rx_lo + k * size else -1
            on_path = kt_true * k + kr_true if kt_true >= 0 and kr_true >= 0 else -1
            kk = k * k
            for j in range(kk):
                if m >= cap:
                    raise IndexError("noise buffer exhausted")
                y = noise_v[t, m]
                if j == on_path:
                    y = amp + y
                sums[j] = y
                counts[j] = 1
                m += 1
            while True:
                best = 0
                best_score = -INFINITY
                for j in range(kk):
                    cnt = counts[j]
                    sr = sums[j].real
                    si = sums[j].imag
                    sc = -log1p(g * cnt / n0) + g * (sr * sr + si * si) / (n0 * (n0 + g * cnt))
                    scores[j] = sc
                    if sc > best_score:
                        best_score = sc
                        best = j
                total = 0.0
                for j in range(kk):
                    total += exp(scores[j] - best_score)
                p_best = 1.0 / total
                fb += bits
                if not adaptive or p_best > threshold or m + reserved >= m_max:
                    break
                if m >= cap:
                    raise IndexError("noise buffer exhausted")
                y = noise_v[t, m]
                if best == on_path:
                    y = amp + y
                sums[best] = sums[best] + y
                counts[best] = counts[best] + 1
                m += 1
            tx_lo += (best // k) * size
            rx_lo += (best % k) * size
        o_tx[t] = tx_lo
        o_rx[t] = rx_lo
        o_alpha[t] = (sums[best] / counts[best]) / (sqrt_p * (n * c2))
        o_total[t] = m
        o_fb[t] = fb
    return out_tx, out_rx, out_alpha, out_total, out_fb
