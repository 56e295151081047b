import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hmbeam.array_model import (AngleGrid, Channels, ScenarioConfig, SpatialFrequency, UpaGeometry,
                                angles_to_frequency, draw_channels, gain_ladder, grid_frequencies,
                                grid_frequency, steering_vector)
from hmbeam.codebook import build_single_beam_codebook
from hmbeam.errors import IndexOutOfRange

freqs = st.floats(-1, 1, allow_nan=False)


class TestGridFrequency:
    def test_two_cell_grid(self):
        assert grid_frequency(AngleGrid(2, 1), 0) == SpatialFrequency(-0.5, 0.0)

    def test_last_of_sixteen(self):
        assert grid_frequency(AngleGrid(16), 15).u == pytest.approx(0.9375)

    def test_single_cell(self):
        assert grid_frequency(AngleGrid(1, 1), 0) == SpatialFrequency(0.0, 0.0)

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            grid_frequency(AngleGrid(4, 2), 8)
        with pytest.raises(IndexOutOfRange):
            grid_frequency(AngleGrid(4, 2), -1)

    def test_index_order_two_dimensional(self):
        grid = AngleGrid(4, 2)
        u, v = grid_frequencies(grid)
        for n in range(grid.size):
            f = grid_frequency(grid, n)
            assert (u[n], v[n]) == (f.u, f.v)
        assert list(v[:2]) == [-0.5, 0.5] and u[0] == u[1]

    def test_cells_cover_interval(self):
        u, _ = grid_frequencies(AngleGrid(8))
        assert np.allclose(np.diff(u), 2 / 8) and np.isclose(u[0], -1 + 1 / 8)


class TestSteeringVector:
    def test_broadside_all_ones(self):
        assert np.allclose(steering_vector(UpaGeometry(4, 3), SpatialFrequency(0, 0)), 1)

    def test_half_wavelength_endfire(self):
        a = steering_vector(UpaGeometry(2, 1, 0.5), SpatialFrequency(1, 0))
        assert np.allclose(a, [1, -1])

    @given(freqs, freqs)
    def test_unit_modulus(self, u, v):
        a = steering_vector(UpaGeometry(5, 3, 0.5, 0.7), SpatialFrequency(u, v))
        assert np.allclose(np.abs(a), 1)

    @given(freqs, freqs)
    def test_constant_phase_ratios(self, u, v):
        geom = UpaGeometry(4, 3, 0.5, 0.4)
        a = steering_vector(geom, SpatialFrequency(u, v)).reshape(geom.n_v, geom.n_h)
        assert np.allclose(a[:, 1:] / a[:, :-1], np.exp(2j * np.pi * geom.d_h * u))
        assert np.allclose(a[1:, :] / a[:-1, :], np.exp(2j * np.pi * geom.d_v * v))

    def test_matches_codebook_rows(self):
        geom, grid = UpaGeometry(8, 4), AngleGrid(4, 2)
        rows = build_single_beam_codebook(geom, grid).rows
        for n in range(grid.size):
            assert np.array_equal(steering_vector(geom, grid_frequency(grid, n)), rows[n])


class TestAngles:
    @pytest.mark.parametrize("phi,theta,expected", [
        (math.pi / 2, 0.0, (1.0, 0.0)),
        (0.0, math.pi / 2, (0.0, 1.0)),
        (math.pi / 2, math.pi / 2, (0.0, 1.0)),
    ])
    def test_examples(self, phi, theta, expected):
        f = angles_to_frequency(phi, theta)
        assert (f.u, f.v) == pytest.approx(expected, abs=1e-12)

    def test_out_of_domain_frequency(self):
        with pytest.raises(ValueError):
            SpatialFrequency(1.5, 0)


def _scenario(I=3, K=2, gap=3.0, snr=0.0):
    return ScenarioConfig(I, K, UpaGeometry(16, 4), AngleGrid(16), gain_gap_db=gap, snr_db=snr)


class TestDrawChannels:
    def test_single_ris(self, rng):
        ch = draw_channels(_scenario(I=1, K=1), rng)
        assert ch.ranking.tolist() == [[0]]
        assert ch.gains.shape == (1, 1) and 0 <= ch.directions[0, 0] < 16

    def test_gain_gap(self, rng):
        for _ in range(50):
            ch = draw_channels(_scenario(I=3, K=4), rng)
            mags = np.abs(ch.gains)
            for k in range(4):
                ordered = mags[ch.ranking[k], k]
                assert np.all(ordered[:-1] / ordered[1:] >= 10 ** 0.15 * (1 - 1e-12))

    def test_strongest_link_sets_snr(self, rng):
        cfg = _scenario(snr=-20.0)
        ch = draw_channels(cfg, rng)
        strongest = np.abs(ch.gains[ch.ranking[:, 0], np.arange(cfg.user_count)])
        snr = cfg.tx_power * strongest ** 2 / cfg.noise_power
        assert np.allclose(10 * np.log10(snr), -20.0)

    def test_seeded_determinism(self):
        a = draw_channels(_scenario(), np.random.default_rng(3))
        b = draw_channels(_scenario(), np.random.default_rng(3))
        assert np.array_equal(a.gains, b.gains) and np.array_equal(a.directions, b.directions)
        assert np.array_equal(a.ranking, b.ranking)

    def test_direction_uniformity(self):
        # 10^5 draws on 16 directions, every frequency within 3 binomial sigma
        cfg = ScenarioConfig(10, 10, UpaGeometry(16, 1), AngleGrid(16))
        rng = np.random.default_rng(5)
        dirs = np.concatenate([draw_channels(cfg, rng).directions.ravel() for _ in range(1000)])
        counts = np.bincount(dirs, minlength=16)
        n, p = dirs.size, 1 / 16
        assert n == 100_000
        assert np.all(np.abs(counts - n * p) <= 3 * math.sqrt(n * p * (1 - p)))

    def test_ladder(self):
        assert np.allclose(gain_ladder(3, 20.0), [1, 0.1, 0.01])

    def test_link_and_scaling(self, rng):
        ch = draw_channels(_scenario(), rng)
        link = ch.link(1, 0)
        assert link.gain == ch.gains[1, 0] and link.direction == ch.directions[1, 0]
        assert isinstance(ch.scaled(2.0), Channels)
        assert np.allclose(ch.scaled(2.0).gains, 2 * ch.gains)
