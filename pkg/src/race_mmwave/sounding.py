"""Pilot transmission over beam pairs and the per-stage measurement log."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .array_channel import AngleGrid, ChannelRealization, NoiseModel
from .codebook import BeamVector, Codebook, SubRange


@dataclass(frozen=True)
class MeasurementSlot:
    tx_k: int
    rx_k: int
    observation: complex

    @property
    def pair(self) -> tuple[int, int]:
        return (self.tx_k, self.rx_k)


@dataclass(frozen=True)
class SoundingLog:
    """Ordered slots of one stage. The first ``k**2`` follow the canonical scan order."""

    stage: int
    k: int
    stage_gain: float
    slots: tuple[MeasurementSlot, ...] = ()

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def observations(self) -> np.ndarray:
        return np.array([s.observation for s in self.slots], dtype=complex)

    def count(self, pair: tuple[int, int]) -> int:
        return sum(1 for s in self.slots if s.pair == pair)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps({"stage": self.stage, "tx_k": s.tx_k, "rx_k": s.rx_k,
                        "re": s.observation.real, "im": s.observation.imag}) + "\n"
            for s in self.slots)


@dataclass(frozen=True)
class StageContext:
    """Beams available at one stage: children of the surviving tx/rx sub-ranges."""

    codebook: Codebook
    stage: int
    tx_parent: SubRange | None = None
    rx_parent: SubRange | None = None

    @property
    def tx_beams(self) -> list[BeamVector]:
        return self.codebook.beams(self.tx_parent)

    @property
    def rx_beams(self) -> list[BeamVector]:
        return self.codebook.beams(self.rx_parent)

    @property
    def k(self) -> int:
        return self.codebook.plan.k_vector[self.stage - 1]

    @property
    def gain_constant(self) -> float:
        return self.codebook.gain_constant(self.stage)

    def stage_gain(self, noise: NoiseModel) -> float:
        n = self.codebook.grid.n_antennas
        c = self.gain_constant
        return noise.transmit_power * noise.path_variance * (n * c * c) ** 2


def canonical_pairs(k: int) -> list[tuple[int, int]]:
    """All (tx_k, rx_k) pairs with the receive index varying fastest."""
    return [(t, r) for t in range(1, k + 1) for r in range(1, k + 1)]


def _check_unit(beam: BeamVector) -> None:
    if abs(np.linalg.norm(beam.coefficients) - 1.0) > 1e-9:
        raise ValueError("beamforming vectors must have unit norm")


def noiseless_response(real: ChannelRealization, grid: AngleGrid,
                       f: BeamVector, w: BeamVector) -> complex:
    """``w^H H f`` through the rank-one factorization of H."""
    n = grid.n_antennas
    tx_gain = np.vdot(grid.steering(real.tx_index), f.coefficients)
    rx_gain = np.vdot(grid.steering(real.rx_index), w.coefficients)
    return complex(real.alpha * n * rx_gain.conjugate() * tx_gain)


def measure(real: ChannelRealization, grid: AngleGrid, f: BeamVector, w: BeamVector,
            noise: NoiseModel, rng: np.random.Generator) -> complex:
    """One pilot slot: ``sqrt(P) w^H H f + w^H q`` with unit pilot.

    Since ``||w|| = 1`` the projected noise is drawn directly as CN(0, N0).
    """
    _check_unit(f)
    _check_unit(w)
    y = math.sqrt(noise.transmit_power) * noiseless_response(real, grid, f, w)
    if noise.inject_noise:
        re, im = rng.standard_normal(2) * math.sqrt(noise.noise_spectral / 2.0)
        y += complex(re, im)
    return y


def _slot(ctx: StageContext, pair, real, noise, rng) -> MeasurementSlot:
    tx_k, rx_k = pair
    if not (1 <= tx_k <= ctx.k and 1 <= rx_k <= ctx.k):
        raise ValueError(f"pair {pair} outside 1..{ctx.k}")
    y = measure(real, ctx.codebook.grid, ctx.tx_beams[tx_k - 1], ctx.rx_beams[rx_k - 1],
                noise, rng)
    return MeasurementSlot(tx_k, rx_k, y)


def initial_scan(ctx: StageContext, real: ChannelRealization, noise: NoiseModel,
                 rng: np.random.Generator) -> SoundingLog:
    slots = tuple(_slot(ctx, pair, real, noise, rng) for pair in canonical_pairs(ctx.k))
    return SoundingLog(ctx.stage, ctx.k, ctx.stage_gain(noise), slots)


def append_measurement(log: SoundingLog, ctx: StageContext, pair: tuple[int, int],
                       real: ChannelRealization, noise: NoiseModel,
                       rng: np.random.Generator) -> SoundingLog:
    """Return a new log with one extra slot on ``pair``."""
    if len(log) < log.k ** 2:
        raise ValueError("initial scan must precede additional measurements")
    return replace(log, slots=log.slots + (_slot(ctx, pair, real, noise, rng),))
