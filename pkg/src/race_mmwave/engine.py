"""Batched Monte Carlo trials on the compiled kernel or its pure-Python twin.

The backend is chosen at import: the Cython extension when it was built,
otherwise ``_fallback``. Set ``RACE_MMWAVE_PURE=1`` to force the fallback.
Each trial owns a generator seeded from ``(master_seed, scheme_key, point,
trial)``, so results do not depend on batching or worker count.
"""

from __future__ import annotations

import math
import os
import zlib
from dataclasses import dataclass

import numpy as np

from . import _fallback
from .array_channel import NoiseModel
from .codebook import StagePlan

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None

_BACKENDS = {"python": _fallback.run_batch}
if _kernels is not None:
    _BACKENDS["compiled"] = _kernels.run_batch

if _kernels is not None and os.environ.get("RACE_MMWAVE_PURE") != "1":
    BACKEND = "compiled"
else:
    BACKEND = "python"


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def scheme_key(name: str) -> int:
    """Stable 32-bit id of a scheme name, used in trial seeding."""
    return zlib.crc32(name.encode("utf-8"))


def trial_rng(master_seed: int, key: int, point: int, trial: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(master_seed), int(key), int(point), int(trial)])
    return np.random.Generator(np.random.PCG64(ss))


def draw_trial(rng: np.random.Generator, n: int, noise: NoiseModel, cap: int):
    """Channel then ``cap`` noise samples, in the same order the object-level path uses."""
    tx = int(rng.integers(n))
    rx = int(rng.integers(n))
    re, im = rng.standard_normal(2) * math.sqrt(noise.path_variance / 2.0)
    if noise.inject_noise:
        w = rng.standard_normal(2 * cap) * math.sqrt(noise.noise_spectral / 2.0)
        z = w.view(np.complex128)
    else:
        z = np.zeros(cap, dtype=np.complex128)
    return tx, rx, complex(re, im), z


def slot_capacity(plan: StagePlan, adaptive: bool, m_max: int) -> int:
    """Upper bound on slots a trial can use."""
    base = plan.total_measurements
    return max(m_max, base) if adaptive else base


@dataclass
class PointSamples:
    """Per-trial results of one (scheme, SNR) point."""

    tx_true: np.ndarray
    rx_true: np.ndarray
    alpha: np.ndarray
    tx_est: np.ndarray
    rx_est: np.ndarray
    alpha_hat: np.ndarray
    measurements: np.ndarray
    feedback_bits: np.ndarray

    @property
    def success(self) -> np.ndarray:
        return (self.tx_est == self.tx_true) & (self.rx_est == self.rx_true)

    def __len__(self) -> int:
        return len(self.tx_true)


def run_trials(plan: StagePlan, noise: NoiseModel, rngs, *, adaptive: bool,
               gamma: float = 1.0, m_max: int = 0,
               backend: str | None = None) -> PointSamples:
    """Run one trial per generator in ``rngs``."""
    run_batch = _BACKENDS[backend or BACKEND]
    n = plan.n_antennas
    cap = slot_capacity(plan, adaptive, m_max)
    rngs = list(rngs)
    t = len(rngs)
    tx = np.empty(t, dtype=np.int64)
    rx = np.empty(t, dtype=np.int64)
    alpha = np.empty(t, dtype=np.complex128)
    noise_buf = np.empty((t, cap), dtype=np.complex128)
    for i, rng in enumerate(rngs):
        tx[i], rx[i], alpha[i], noise_buf[i] = draw_trial(rng, n, noise, cap)
    out = run_batch(np.asarray(plan.k_vector, dtype=np.int64), n, tx, rx, alpha, noise_buf,
                    math.sqrt(noise.transmit_power), noise.noise_spectral,
                    noise.path_variance, float(gamma), int(m_max), bool(adaptive))
    tx_est, rx_est, alpha_hat, total, fb = out
    return PointSamples(tx, rx, alpha, tx_est, rx_est, alpha_hat, total, fb)


def simulate_point(plan: StagePlan, noise: NoiseModel, trials: int, *, adaptive: bool,
                   gamma: float = 1.0, m_max: int = 0, master_seed: int = 0,
                   key: int = 0, point: int = 0, backend: str | None = None) -> PointSamples:
    rngs = (trial_rng(master_seed, key, point, i) for i in range(trials))
    return run_trials(plan, noise, rngs, adaptive=adaptive, gamma=gamma, m_max=m_max,
                      backend=backend)
