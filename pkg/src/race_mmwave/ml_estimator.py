"""Maximum-likelihood sub-range detection from a stage's measurement log.

Under hypothesis h the observations are CN(0, N0 I + g v_h v_h^T), where
v_h flags the slots measured on pair h and g is the stage gain. The rank-one
structure gives closed forms for the determinant and quadratic form, so the
likelihood only needs ``||y||^2``, ``v_h^T y`` and ``n_h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array_channel import NoiseModel
from .sounding import SoundingLog, canonical_pairs


@dataclass(frozen=True, order=True)
class Hypothesis:
    tx_k: int
    rx_k: int

    def index(self, k: int) -> int:
        """Position in the canonical (receive-fastest) order."""
        return (self.tx_k - 1) * k + (self.rx_k - 1)


def hypotheses(k: int) -> list[Hypothesis]:
    return [Hypothesis(t, r) for t, r in canonical_pairs(k)]


@dataclass(frozen=True)
class PosteriorDistribution:
    k: int
    probabilities: np.ndarray

    def __getitem__(self, h: Hypothesis) -> float:
        return float(self.probabilities[h.index(self.k)])

    def as_dict(self) -> dict[Hypothesis, float]:
        return dict(zip(hypotheses(self.k), self.probabilities.tolist()))


def indicator_vector(log: SoundingLog, h: Hypothesis) -> np.ndarray:
    return np.array([s.tx_k == h.tx_k and s.rx_k == h.rx_k for s in log.slots],
                    dtype=float)


def conditional_covariance(log: SoundingLog, h: Hypothesis, noise: NoiseModel) -> np.ndarray:
    v = indicator_vector(log, h)
    return noise.noise_spectral * np.eye(len(v)) + log.stage_gain * np.outer(v, v)


def log_likelihood(y: np.ndarray, v: np.ndarray, g: float, n0: float) -> float:
    """Log-density of ``y`` under CN(0, n0 I + g v v^T)."""
    if n0 <= 0:
        raise ValueError("noise density must be positive")
    y = np.asarray(y, dtype=complex)
    v = np.asarray(v, dtype=float)
    m = y.size
    if m < 1:
        raise ValueError("need at least one observation")
    n_h = float(v.sum())
    proj = np.dot(v, y)
    energy = float(np.vdot(y, y).real)
    log_det = m * math.log(n0) + math.log1p(g * n_h / n0)
    quad = (energy - g * abs(proj) ** 2 / (n0 + g * n_h)) / n0
    return -m * math.log(math.pi) - log_det - quad


def _log_scores(log: SoundingLog, n0: float) -> np.ndarray:
    # Terms shared by every hypothesis are dropped; they cancel in the posterior.
    k = log.k
    g = log.stage_gain
    sums = np.zeros(k * k, dtype=complex)
    counts = np.zeros(k * k)
    for s in log.slots:
        j = (s.tx_k - 1) * k + (s.rx_k - 1)
        sums[j] += s.observation
        counts[j] += 1
    return (-np.log1p(g * counts / n0)
            + g * np.abs(sums) ** 2 / (n0 * (n0 + g * counts)))


def normalize_log(scores: np.ndarray) -> np.ndarray:
    shifted = np.exp(scores - scores.max())
    return shifted / shifted.sum()


def posterior(log: SoundingLog, noise: NoiseModel) -> PosteriorDistribution:
    """Posterior over the K^2 pairs under a uniform prior."""
    if len(log) < log.k ** 2:
        raise ValueError("posterior requires the complete initial scan")
    return PosteriorDistribution(log.k, normalize_log(_log_scores(log, noise.noise_spectral)))


def map_estimate(post: PosteriorDistribution) -> tuple[Hypothesis, float]:
    """Most probable pair; ties go to the earliest canonical index."""
    j = int(np.argmax(post.probabilities))
    return hypotheses(post.k)[j], float(post.probabilities[j])


def estimate_alpha(final_observation: complex, transmit_power: float, n: int,
                   gain_constant: float) -> complex:
    return complex(final_observation) / (math.sqrt(transmit_power) * n * gain_constant ** 2)
