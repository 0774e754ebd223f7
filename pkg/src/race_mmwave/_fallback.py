"""Pure-Python batch trial loop; mirrors ``_kernels.pyx`` operation for operation."""

import math

import numpy as np


def run_batch(k_vector, n, tx, rx, alpha, noise, sqrt_p, n0, p_r, gamma, m_max, adaptive):
    """Run one estimation trial per row of ``noise``.

    Slot ``j`` of trial ``t`` uses ``noise[t, j]``. Returns arrays
    ``(tx_est, rx_est, alpha_hat, total, feedback)``.
    """
    k_vector = [int(k) for k in k_vector]
    trials = len(tx)
    cap = noise.shape[1]
    out_tx = np.empty(trials, dtype=np.int64)
    out_rx = np.empty(trials, dtype=np.int64)
    out_alpha = np.empty(trials, dtype=np.complex128)
    out_total = np.empty(trials, dtype=np.int64)
    out_fb = np.empty(trials, dtype=np.int64)
    power = sqrt_p * sqrt_p
    threshold = 1.0 - gamma

    for t in range(trials):
        a = complex(alpha[t])
        tx_t = int(tx[t])
        rx_t = int(rx[t])
        row = noise[t].tolist()
        tx_lo = 0
        rx_lo = 0
        size = n
        m = 0
        fb = 0
        best = 0
        sums = []
        counts = []
        c2 = 1.0
        for s, k in enumerate(k_vector):
            reserved = sum(kk * kk for kk in k_vector[s + 1:])
            size //= k
            c2 = 1.0 / size
            amp = sqrt_p * a * (n * c2)
            g = power * p_r * (n * c2) * (n * c2)
            bits = math.ceil(math.log2(k) + 1.0) if adaptive else math.ceil(math.log2(k))
            kt_true = (tx_t - tx_lo) // size if tx_lo <= tx_t < tx_lo + k * size else -1
            kr_true = (rx_t - rx_lo) // size if rx_lo <= rx_t < rx_lo + k * size else -1
            on_path = kt_true * k + kr_true if kt_true >= 0 and kr_true >= 0 else -1
            kk = k * k
            sums = [0j] * kk
            counts = [0] * kk
            for j in range(kk):
                if m >= cap:
                    raise IndexError("noise buffer exhausted")
                y = row[m]
                if j == on_path:
                    y = amp + y
                sums[j] = sums[j] + y
                counts[j] = counts[j] + 1
                m += 1
            while True:
                best = 0
                best_score = -math.inf
                scores = [0.0] * kk
                for j in range(kk):
                    cnt = counts[j]
                    sr = sums[j].real
                    si = sums[j].imag
                    sc = -math.log1p(g * cnt / n0) + g * (sr * sr + si * si) / (n0 * (n0 + g * cnt))
                    scores[j] = sc
                    if sc > best_score:
                        best_score = sc
                        best = j
                total = 0.0
                for j in range(kk):
                    total += math.exp(scores[j] - best_score)
                p_best = 1.0 / total
                fb += bits
                if not adaptive or p_best > threshold or m + reserved >= m_max:
                    break
                if m >= cap:
                    raise IndexError("noise buffer exhausted")
                y = row[m]
                if best == on_path:
                    y = amp + y
                sums[best] = sums[best] + y
                counts[best] = counts[best] + 1
                m += 1
            tx_lo += (best // k) * size
            rx_lo += (best % k) * size
        out_tx[t] = tx_lo
        out_rx[t] = rx_lo
        out_alpha[t] = (sums[best] / counts[best]) / (sqrt_p * (n * c2))
        out_total[t] = m
        out_fb[t] = fb
    return out_tx, out_rx, out_alpha, out_total, out_fb
