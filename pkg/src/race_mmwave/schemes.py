"""Fixed-rate multi-stage estimation, RACE, and the rate-switching benchmark."""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .array_channel import AngleGrid, ChannelRealization, NoiseModel
from .codebook import Codebook, StagePlan, build_codebook
from .ml_estimator import Hypothesis, PosteriorDistribution, estimate_alpha, map_estimate, posterior
from .sounding import SoundingLog, StageContext, append_measurement, initial_scan


@dataclass(frozen=True)
class RaceConfig:
    gamma: float
    m_max: int
    plan: StagePlan

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.m_max < self.plan.total_measurements:
            raise ValueError(
                f"m_max={self.m_max} below the mandatory scan cost {self.plan.total_measurements}")


@dataclass(frozen=True)
class StageTrace:
    log: SoundingLog
    rounds: tuple[tuple[PosteriorDistribution, Hypothesis, float], ...]
    selected: Hypothesis


@dataclass(frozen=True)
class EstimationOutcome:
    tx_estimate: int
    rx_estimate: int
    alpha_estimate: complex
    total_measurements: int
    feedback_bits: int
    per_stage_measurements: tuple[int, ...]
    success: bool
    trace: tuple[StageTrace, ...] = field(default=(), compare=False, repr=False)


@functools.lru_cache(maxsize=32)
def _codebook(k_vector: tuple[int, ...], n: int) -> Codebook:
    return build_codebook(StagePlan(k_vector, n), AngleGrid(n), eager=False)


def codebook_for(plan: StagePlan) -> Codebook:
    return _codebook(plan.k_vector, plan.n_antennas)


def _run(plan: StagePlan, channel: ChannelRealization, noise: NoiseModel,
         rng: np.random.Generator, gamma: float | None, m_max: int) -> EstimationOutcome:
    cb = codebook_for(plan)
    tx_parent = rx_parent = None
    m_total = 0
    bits = 0
    per_stage = []
    traces = []
    log = None
    selected = None
    for stage, k in enumerate(plan.k_vector, start=1):
        reserved = sum(kk * kk for kk in plan.k_vector[stage:])
        ctx = StageContext(cb, stage, tx_parent, rx_parent)
        log = initial_scan(ctx, channel, noise, rng)
        m_total += len(log)
        rounds = []
        while True:
            post = posterior(log, noise)
            selected, p_max = map_estimate(post)
            rounds.append((post, selected, p_max))
            if gamma is None:
                bits += math.ceil(math.log2(k))
                break
            bits += math.ceil(math.log2(k) + 1)
            if p_max > 1.0 - gamma or m_total + reserved >= m_max:
                break
            log = append_measurement(log, ctx, (selected.tx_k, selected.rx_k),
                                     channel, noise, rng)
            m_total += 1
        per_stage.append(len(log))
        traces.append(StageTrace(log, tuple(rounds), selected))
        tx_parent = ctx.tx_beams[selected.tx_k - 1].subrange
        rx_parent = ctx.rx_beams[selected.rx_k - 1].subrange

    final = [s.observation for s in log.slots if s.pair == (selected.tx_k, selected.rx_k)]
    alpha_hat = estimate_alpha(sum(final) / len(final), noise.transmit_power,
                               plan.n_antennas, cb.gain_constant(plan.n_stages))
    tx_est, rx_est = tx_parent.start, rx_parent.start
    return EstimationOutcome(
        tx_est, rx_est, alpha_hat, m_total, bits, tuple(per_stage),
        tx_est == channel.tx_index and rx_est == channel.rx_index, tuple(traces))


def run_fixed(plan: StagePlan, channel: ChannelRealization, noise: NoiseModel,
              rng: np.random.Generator) -> EstimationOutcome:
    """One K_s^2 scan per stage, descending into the MAP pair.

    With one slot per pair the MAP pair is the strongest measurement.
    Feedback is the selected transmit index only, ``ceil(log2 K_s)`` bits per stage.
    """
    return _run(plan, channel, noise, rng, None, plan.total_measurements)


def run_race(cfg: RaceConfig, channel: ChannelRealization, noise: NoiseModel,
             rng: np.random.Generator) -> EstimationOutcome:
    """Re-measure the MAP pair until its posterior exceeds ``1 - gamma``.

    An extra measurement is only scheduled while the running total plus the
    scans still owed by later stages stays below ``m_max``, so the total
    never exceeds ``max(m_max, sum K_s^2)``.
    """
    return _run(cfg.plan, channel, noise, rng, cfg.gamma, cfg.m_max)


@dataclass(frozen=True)
class SwitchTable:
    """SNR thresholds (dB, ascending) and the fixed-rate K-vector used from each."""

    entries: tuple[tuple[float, tuple[int, ...]], ...]

    def __init__(self, entries: Sequence[tuple[float, Sequence[int]]]):
        norm = tuple((float(t), tuple(int(k) for k in kv)) for t, kv in entries)
        thresholds = [t for t, _ in norm]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("switch thresholds must be strictly increasing")
        for _, kv in norm:
            StagePlan(kv, math.prod(kv))
        object.__setattr__(self, "entries", norm)

    def to_json(self) -> str:
        doc = [{"snr_db": None if math.isinf(t) else t, "k_vector": list(kv)}
               for t, kv in self.entries]
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SwitchTable":
        doc = json.loads(text)
        return cls([(-math.inf if e["snr_db"] is None else e["snr_db"], e["k_vector"])
                    for e in doc])


def select_scheme(table: SwitchTable, snr_db: float) -> StagePlan:
    """Plan of the highest threshold not above ``snr_db``; the costliest plan below all thresholds."""
    if not table.entries:
        raise ValueError("switch table is empty")
    chosen = None
    for threshold, kv in table.entries:
        if threshold <= snr_db:
            chosen = kv
    if chosen is None:
        chosen = max((kv for _, kv in table.entries), key=lambda kv: sum(k * k for k in kv))
    return StagePlan(chosen, math.prod(chosen))


def calibrate_switch_table(candidate_plans: Sequence[StagePlan], snr_grid: Sequence[float],
                           gamma: float, trials: int, rng: np.random.Generator,
                           p_r: float = 1.0) -> SwitchTable:
    """Pick, per SNR point, the cheapest plan whose Monte Carlo PEE is at most ``gamma``.

    Falls back to the lowest-PEE plan when none qualifies. Consecutive equal
    choices collapse into one threshold entry.
    """
    from .engine import simulate_point

    if trials < 100:
        raise ValueError("calibration needs at least 100 trials per point")
    if not candidate_plans or not snr_grid:
        raise ValueError("need candidate plans and a non-empty SNR grid")
    plans = sorted(candidate_plans, key=lambda p: p.total_measurements)
    seed = int(rng.integers(2 ** 63))
    choices = []
    for gi, snr in enumerate(sorted(snr_grid)):
        noise = NoiseModel.from_snr_db(snr, p_r)
        pees = []
        for pi, plan in enumerate(plans):
            samples = simulate_point(plan, noise, trials, adaptive=False,
                                     master_seed=seed, key=pi, point=gi)
            pees.append(1.0 - samples.success.mean())
        ok = [i for i, p in enumerate(pees) if p <= gamma]
        pick = ok[0] if ok else int(np.argmin(pees))
        choices.append((snr, plans[pick].k_vector))
    entries = []
    for snr, kv in choices:
        if not entries or entries[-1][1] != kv:
            entries.append((snr, kv))
    return SwitchTable(entries)
