import json
from dataclasses import replace
import math

import numpy as np
import pytest

from race_mmwave.array_channel import AngleGrid, ChannelRealization, NoiseModel, sample_channel
from race_mmwave.codebook import StagePlan
from race_mmwave.schemes import (RaceConfig, SwitchTable, calibrate_switch_table, run_fixed,
                                 run_race, select_scheme)

PLAN64 = StagePlan([2] * 6, 64)


def trial(seed, n=64, snr_db=5.0):
    noise = NoiseModel.from_snr_db(snr_db)
    rng = np.random.default_rng(seed)
    return sample_channel(AngleGrid(n), noise, rng), noise, rng


@pytest.mark.parametrize("kv, n, cost", [([2] * 6, 64, 24), ([2, 2, 2], 8, 12), ([4, 2], 8, 20),
                                         ([16, 2, 2], 64, 264)])
def test_fixed_cost(kv, n, cost):
    channel, noise, rng = trial(1, n)
    out = run_fixed(StagePlan(kv, n), channel, noise, rng)
    assert out.total_measurements == cost
    assert out.per_stage_measurements == tuple(k * k for k in kv)
    assert out.feedback_bits == sum(math.ceil(math.log2(k)) for k in kv)


def test_race_config_validation():
    with pytest.raises(ValueError):
        RaceConfig(0.0, 264, PLAN64)
    with pytest.raises(ValueError):
        RaceConfig(0.01, 23, PLAN64)


def test_map_rule_equals_strongest_measurement():
    for seed in range(200):
        channel, noise, rng = trial(seed, snr_db=0.0)
        out = run_fixed(PLAN64, channel, noise, rng)
        for st in out.trace:
            strongest = max(st.log.slots, key=lambda s: abs(s.observation))
            assert (st.selected.tx_k, st.selected.rx_k) == strongest.pair


def test_race_budget_equal_to_scan_cost_adds_nothing():
    for seed in range(30):
        channel, noise, rng = trial(seed, snr_db=-5.0)
        out = run_race(RaceConfig(1e-6, 24, PLAN64), channel, noise, rng)
        assert out.total_measurements == 24


def test_race_budget_cap():
    cfg = RaceConfig(1e-2, 40, PLAN64)
    hit = 0
    for seed in range(300):
        out = run_race(cfg, *trial(seed, snr_db=-8.0))
        assert 24 <= out.total_measurements <= cfg.m_max
        hit += out.total_measurements == cfg.m_max
    assert hit > 0


def test_race_invariants():
    cfg = RaceConfig(1e-2, 400, PLAN64)
    for seed in range(300):
        channel, noise, rng = trial(seed, snr_db=0.0)
        out = run_race(cfg, channel, noise, rng)
        assert out.total_measurements == sum(out.per_stage_measurements)
        rounds = sum(len(st.rounds) for st in out.trace)
        assert out.feedback_bits == 2 * rounds
        for st, m in zip(out.trace, out.per_stage_measurements):
            assert m >= 4
            assert (m > 4) == (len(st.rounds) > 1)
            if out.total_measurements < cfg.m_max - 24:
                assert (m > 4) == (st.rounds[0][2] <= 1 - cfg.gamma)
            for post, h, p in st.rounds[:-1]:
                assert p <= 1 - cfg.gamma
            # extra slots follow the MAP pair of the round that scheduled them
            extra = [s.pair for s in st.log.slots[4:]]
            assert extra == [(h.tx_k, h.rx_k) for _, h, _ in st.rounds[:-1]]


def test_error_propagation():
    failures = 0
    for seed in range(400):
        channel, noise, rng = trial(seed, snr_db=-3.0)
        out = run_fixed(PLAN64, channel, noise, rng)
        tx_lo = rx_lo = 0
        size = 64
        ok = True
        for st in out.trace:
            size //= 2
            tx_lo += (st.selected.tx_k - 1) * size
            rx_lo += (st.selected.rx_k - 1) * size
            ok = ok and tx_lo <= channel.tx_index < tx_lo + size and rx_lo <= channel.rx_index < rx_lo + size
            if not ok:
                failures += 1
                assert not out.success
                break
        assert ok == out.success
    assert failures > 0


def test_noiseless_exhaustive_n8():
    plan = StagePlan([2, 2, 2], 8)
    noise = NoiseModel(inject_noise=False)
    for tx in range(8):
        for rx in range(8):
            ch = ChannelRealization(complex(math.cos(tx), math.sin(rx)) / abs(complex(math.cos(tx), math.sin(rx))), tx, rx)
            assert run_fixed(plan, ch, noise, None).success
            out = run_race(RaceConfig(1e-2, 100, plan), ch, noise, None)
            assert out.success and out.alpha_estimate == pytest.approx(ch.alpha, abs=1e-9)


def test_gamma_one_matches_fixed():
    for seed in range(100):
        a = run_race(RaceConfig(1.0, 264, PLAN64), *trial(seed, snr_db=0.0))
        b = run_fixed(PLAN64, *trial(seed, snr_db=0.0))
        assert b == replace(a, feedback_bits=b.feedback_bits)
        assert a.feedback_bits == 12 and b.feedback_bits == 6
        assert [st.log for st in a.trace] == [st.log for st in b.trace]


def test_select_scheme():
    table = SwitchTable([(-math.inf, [4, 2]), (10.0, [2, 2, 2])])
    assert select_scheme(table, 12.0).k_vector == (2, 2, 2)
    assert select_scheme(table, 5.0).k_vector == (4, 2)
    single = SwitchTable([(3.0, [2, 2, 2])])
    assert select_scheme(single, -40).k_vector == select_scheme(single, 40).k_vector == (2, 2, 2)
    two = SwitchTable([(0.0, [4, 2]), (10.0, [2, 2, 2])])
    assert select_scheme(two, -5).k_vector == (4, 2)
    with pytest.raises(ValueError):
        select_scheme(SwitchTable([]), 0.0)
    with pytest.raises(ValueError):
        SwitchTable([(5.0, [2, 2, 2]), (5.0, [4, 2])])


def test_switch_table_json_roundtrip():
    table = SwitchTable([(-math.inf, [4, 2]), (10.0, [2, 2, 2])])
    doc = json.loads(table.to_json())
    assert doc == [{"snr_db": None, "k_vector": [4, 2]}, {"snr_db": 10.0, "k_vector": [2, 2, 2]}]
    assert SwitchTable.from_json(table.to_json()) == table


def test_calibration():
    cheap, dear = StagePlan([2] * 6, 64), StagePlan([4, 4, 4], 64)
    table = calibrate_switch_table([dear, cheap], [-10.0, 30.0], 1e-2, 400,
                                   np.random.default_rng(11))
    assert select_scheme(table, 30.0).k_vector == cheap.k_vector
    # at -10 dB neither plan meets the target: the lower-PEE plan wins
    assert select_scheme(table, -10.0).k_vector == dear.k_vector
    again = calibrate_switch_table([dear, cheap], [-10.0, 30.0], 1e-2, 400,
                                   np.random.default_rng(11))
    assert again == table
    with pytest.raises(ValueError):
        calibrate_switch_table([cheap], [0.0], 1e-2, 99, np.random.default_rng(0))
