"""Angle grid, ULA steering vectors and single-path channel realizations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class AngleGrid:
    """N-point grid of normalized spatial frequencies ``i / N``."""

    n_antennas: int
    frequencies: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_antennas < 1:
            raise ValueError("n_antennas must be >= 1")
        freqs = np.arange(self.n_antennas) / self.n_antennas
        freqs.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)

    def steering_matrix(self) -> np.ndarray:
        """Matrix whose columns are the steering vectors of all grid points."""
        n = self.n_antennas
        k = np.arange(n)
        return np.exp(2j * np.pi * np.outer(k, self.frequencies)) / math.sqrt(n)

    def steering(self, index: int) -> np.ndarray:
        return steering_vector(self.frequencies[index], self.n_antennas)


@dataclass(frozen=True)
class ChannelRealization:
    alpha: complex
    tx_index: int
    rx_index: int


@dataclass(frozen=True)
class NoiseModel:
    """Transmit power P, noise density N0 and path variance P_R (all linear).

    ``inject_noise=False`` produces noiseless observations while the
    estimator keeps using ``noise_spectral`` as its model parameter.
    """

    transmit_power: float = 1.0
    noise_spectral: float = 1.0
    path_variance: float = 1.0
    inject_noise: bool = True

    def __post_init__(self):
        for name in ("transmit_power", "noise_spectral", "path_variance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def from_snr_db(cls, snr_db: float, path_variance: float = 1.0,
                    inject_noise: bool = True) -> "NoiseModel":
        """P = 1 and N0 = 10^(-snr_db/10)."""
        return cls(1.0, 10.0 ** (-snr_db / 10.0), path_variance, inject_noise)

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.transmit_power / self.noise_spectral)


def steering_vector(epsilon: float, n: int) -> np.ndarray:
    """Unit-norm ULA response ``exp(j 2 pi epsilon k) / sqrt(n)``."""
    if n < 1:
        raise ValueError("antenna count must be >= 1")
    return np.exp(2j * np.pi * epsilon * np.arange(n)) / math.sqrt(n)


def physical_to_spatial(theta: float, spacing_ratio: float = 0.5) -> float:
    """Map a physical angle in [0, pi) to spatial frequency ``d sin(theta) / lambda``."""
    if not 0.0 <= theta < math.pi:
        raise ValueError(f"theta={theta} outside [0, pi)")
    if spacing_ratio <= 0:
        raise ValueError("spacing_ratio must be positive")
    return spacing_ratio * math.sin(theta)


def sample_channel(grid: AngleGrid, noise: NoiseModel,
                   rng: np.random.Generator) -> ChannelRealization:
    """Draw uniform on-grid AOD/AOA indices and a CN(0, P_R) path gain.

    Draw order is fixed (tx, rx, re/im) so trial streams are reproducible.
    """
    n = grid.n_antennas
    tx = int(rng.integers(n))
    rx = int(rng.integers(n))
    re, im = rng.standard_normal(2) * math.sqrt(noise.path_variance / 2.0)
    return ChannelRealization(complex(re, im), tx, rx)


def channel_matrix(real: ChannelRealization, grid: AngleGrid) -> np.ndarray:
    """Rank-one channel ``alpha * N * u(phi_r) u(phi_t)^H``."""
    n = grid.n_antennas
    return real.alpha * n * np.outer(grid.steering(real.rx_index),
                                     grid.steering(real.tx_index).conj())
