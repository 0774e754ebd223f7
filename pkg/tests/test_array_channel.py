import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from race_mmwave.array_channel import (AngleGrid, ChannelRealization, NoiseModel,
                                       channel_matrix, physical_to_spatial, sample_channel,
                                       steering_vector)


@pytest.mark.parametrize("eps, n, expected", [
    (0.0, 4, 0.5 * np.ones(4)),
    (0.5, 2, np.array([1, -1]) / math.sqrt(2)),
    (0.25, 4, 0.5 * np.array([1, 1j, -1, -1j])),
])
def test_steering_vector_examples(eps, n, expected):
    np.testing.assert_allclose(steering_vector(eps, n), expected, atol=1e-15)


def test_steering_vector_rejects_zero_antennas():
    with pytest.raises(ValueError):
        steering_vector(0.1, 0)


@given(st.integers(1, 256), st.floats(-2, 2, allow_nan=False))
def test_steering_vector_unit_norm(n, eps):
    assert abs(np.linalg.norm(steering_vector(eps, n)) - 1) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 8, 64, 256])
def test_grid_is_dft_and_unitary(n):
    grid = AngleGrid(n)
    np.testing.assert_array_equal(grid.frequencies, np.arange(n) / n)
    u = grid.steering_matrix()
    np.testing.assert_allclose(u.conj().T @ u, np.eye(n), atol=1e-9)


@pytest.mark.parametrize("theta, expected", [(0.0, 0.0), (math.pi / 2, 0.5), (math.pi / 6, 0.25)])
def test_physical_to_spatial(theta, expected):
    assert physical_to_spatial(theta, 0.5) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("theta", [-0.1, math.pi, 4.0])
def test_physical_to_spatial_domain(theta):
    with pytest.raises(ValueError):
        physical_to_spatial(theta, 0.5)


def test_noise_model_rejects_nonpositive():
    with pytest.raises(ValueError):
        NoiseModel(1.0, 0.0, 1.0)
    assert NoiseModel.from_snr_db(10).noise_spectral == pytest.approx(0.1)


def test_sample_channel_statistics():
    n, draws = 16, 100_000
    grid, noise = AngleGrid(n), NoiseModel(path_variance=2.0)
    rng = np.random.default_rng(7)
    reals = [sample_channel(grid, noise, rng) for _ in range(draws)]
    power = np.mean([abs(r.alpha) ** 2 for r in reals])
    assert abs(power - 2.0) / 2.0 < 0.03
    sd = math.sqrt(draws * (1 / n) * (1 - 1 / n))
    for attr in ("tx_index", "rx_index"):
        counts = np.bincount([getattr(r, attr) for r in reals], minlength=n)
        assert np.all(np.abs(counts - draws / n) < 3 * sd + 1)


def test_sample_channel_deterministic():
    grid, noise = AngleGrid(64), NoiseModel()
    a = sample_channel(grid, noise, np.random.default_rng(3))
    b = sample_channel(grid, noise, np.random.default_rng(3))
    assert a == b


def test_channel_matrix_examples():
    grid = AngleGrid(2)
    np.testing.assert_array_equal(channel_matrix(ChannelRealization(0j, 1, 0), grid),
                                  np.zeros((2, 2)))
    np.testing.assert_allclose(channel_matrix(ChannelRealization(1 + 0j, 0, 0), grid),
                               np.ones((2, 2)), atol=1e-15)


def test_channel_matrix_properties(rng):
    n = 32
    grid = AngleGrid(n)
    for _ in range(50):
        real = sample_channel(grid, NoiseModel(), rng)
        h = channel_matrix(real, grid)
        gain = grid.steering(real.rx_index).conj() @ h @ grid.steering(real.tx_index)
        assert abs(gain - real.alpha * n) < 1e-9
        assert abs(np.linalg.norm(h) - abs(real.alpha) * n) < 1e-9
        sv = np.linalg.svd(h, compute_uv=False)
        assert sv[1] < 1e-9 * abs(real.alpha) * n
