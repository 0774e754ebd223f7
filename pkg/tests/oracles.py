"""Independent dense reference computations used only by the tests."""

import math

import numpy as np


def dense_log_likelihood(y, v, g, n0):
    """CN(0, Sigma) log-density with Sigma built and inverted explicitly."""
    y = np.asarray(y, dtype=complex)
    v = np.asarray(v, dtype=float)
    m = y.size
    sigma = n0 * np.eye(m) + g * np.outer(v, v)
    sign, logdet = np.linalg.slogdet(sigma)
    assert sign > 0
    quad = np.vdot(y, np.linalg.inv(sigma) @ y).real
    return -m * math.log(math.pi) - logdet - quad


def dense_posterior(y, pairs, k, g, n0):
    """Posterior over canonical pairs from dense per-hypothesis likelihoods."""
    hyps = [(t, r) for t in range(1, k + 1) for r in range(1, k + 1)]
    ll = np.array([dense_log_likelihood(y, [float(p == h) for p in pairs], g, n0) for h in hyps])
    w = np.exp(ll - ll.max())
    return w / w.sum()


def expected_outer_covariance(pairs, on_path, g, n0, alpha_samples):
    """Sample E[h h^H] + N0 I where slot j carries alpha*sqrt(g/P_R) iff pairs[j] == on_path."""
    v = np.array([float(p == on_path) for p in pairs])
    h = np.outer(alpha_samples, v) * math.sqrt(g)
    return h.T @ h.conj() / len(alpha_samples) + n0 * np.eye(len(pairs))


def dense_pinv_beam(n, indices):
    """Beam from a dense least-squares solve of U^H f = z, then unit-normalized."""
    k = np.arange(n)
    u = np.exp(2j * np.pi * np.outer(k, k / n)) / math.sqrt(n)
    z = np.zeros(n)
    z[list(indices)] = 1.0
    f, *_ = np.linalg.lstsq(u.conj().T, z, rcond=None)
    c = 1.0 / np.linalg.norm(f)
    return f * c, c
