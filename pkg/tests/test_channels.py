"""Geometry placement, path loss and Rayleigh draws: determinism and
statistical calibration."""

import numpy as np
import pytest

from ris_see.channels import (GeometryConfig, dbm_to_watts, db_to_linear,
                              draw_channels, noise_power_watts, pathloss_gain,
                              place_nodes, watts_to_dbm)
from ris_see.model import RisMode, SystemParams

from conftest import make_params


class TestPlaceNodes:
    def test_users_inside_annulus(self):
        params = make_params(K=8)
        geo = place_nodes(params, 0, GeometryConfig())
        d = np.linalg.norm(geo.user_positions[:, :2] - geo.ris_position[:2], axis=1)
        assert np.all(d >= 20.0) and np.all(d <= 30.0)

    def test_deterministic_per_seed(self):
        params = make_params()
        a = place_nodes(params, 42, GeometryConfig())
        b = place_nodes(params, 42, GeometryConfig())
        np.testing.assert_array_equal(a.user_positions, b.user_positions)
        np.testing.assert_array_equal(a.eve_position, b.eve_position)

    def test_min_user_distance_monte_carlo(self):
        params = make_params(K=4)
        geo_cfg = GeometryConfig()
        dmin = np.inf
        for seed in range(10_000):
            geo = place_nodes(params, seed, geo_cfg)
            d = np.linalg.norm(geo.user_positions[:, :2] - geo.ris_position[:2],
                               axis=1)
            dmin = min(dmin, float(d.min()))
        assert dmin >= 20.0

    def test_bob_placement(self):
        params = make_params()
        geo = place_nodes(params, 1, GeometryConfig())
        np.testing.assert_allclose(geo.bob_position, [20.0, 0.0, 10.0])
        assert geo.ris_position[2] == 10.0

    def test_eve_within_disc_of_bob(self):
        params = make_params()
        for seed in range(200):
            geo = place_nodes(params, seed, GeometryConfig())
            d = np.linalg.norm(geo.eve_position[:2] - geo.bob_position[:2])
            assert d <= 30.0
            assert np.linalg.norm(geo.eve_position[:2] - geo.ris_position[:2]) >= 1.0


class TestPathloss:
    def test_reference_point(self):
        for exp in (2.0, 3.5, 4.0):
            np.testing.assert_allclose(pathloss_gain(1.0, exp, -30.0),
                                       db_to_linear(-30.0))

    def test_decade_rule(self):
        np.testing.assert_allclose(10 * np.log10(pathloss_gain(10.0, 2.0, 0.0)),
                                   -20.0)

    def test_closed_form_evaluation(self):
        # -30 dB reference, exponent 4 at 20 m: -30 - 40 log10(20) dB
        want_db = -30.0 - 40.0 * np.log10(20.0)
        got = pathloss_gain(20.0, 4.0, -30.0)
        np.testing.assert_allclose(10 * np.log10(got), want_db, atol=1e-12)
        np.testing.assert_allclose(want_db, -82.0411998, atol=1e-6)

    def test_monotone_decreasing(self):
        gains = [pathloss_gain(d, 3.0, -30.0) for d in (1.0, 5.0, 20.0, 100.0)]
        assert all(a > b for a, b in zip(gains, gains[1:]))

    def test_nonpositive_distance_raises(self):
        with pytest.raises(ValueError):
            pathloss_gain(0.0, 2.0, -30.0)


class TestDrawChannels:
    def test_deterministic_per_seed(self):
        params = make_params()
        geo = place_nodes(params, 3, GeometryConfig())
        a = draw_channels(geo, params, 77)
        b = draw_channels(geo, params, 77)
        np.testing.assert_array_equal(a.h, b.h)
        np.testing.assert_array_equal(a.G_B, b.G_B)
        np.testing.assert_array_equal(a.G_E, b.G_E)

    def test_second_moment_matches_path_gain(self):
        # one huge draw pools 10^5 iid entries of a single link
        params = make_params(K=1, N=100_000, N_B=1, N_E=1)
        geo = place_nodes(params, 4, GeometryConfig())
        chans = draw_channels(geo, params, 5)
        d = np.linalg.norm(geo.user_positions[0] - geo.ris_position)
        gain = pathloss_gain(d, 4.0, -30.0)
        sample = float(np.mean(np.abs(chans.h[0]) ** 2))
        assert abs(sample - gain) / gain < 0.02

    def test_zero_reference_gain_zeroes_channels(self):
        params = make_params(K=1, N=4)
        geo_cfg = GeometryConfig(ref_gain_db=-np.inf)
        geo = place_nodes(params, 6, geo_cfg)
        chans = draw_channels(geo, params, 7)
        assert np.all(chans.h == 0) and np.all(chans.G_B == 0)

    def test_cross_entry_independence(self):
        params = make_params(K=1, N=2, N_B=1, N_E=1)
        geo = place_nodes(params, 8, GeometryConfig())
        draws = np.array([draw_channels(geo, params, s).h[0] for s in range(10_000)])
        x, y = draws[:, 0], draws[:, 1]
        corr = np.abs(np.mean(x * np.conj(y))) / (np.std(x) * np.std(y))
        assert corr < 0.05


class TestUnits:
    def test_dbm_round_trip(self):
        for dbm in (-10.0, 0.0, 17.0, 30.0):
            np.testing.assert_allclose(watts_to_dbm(dbm_to_watts(dbm)), dbm,
                                       rtol=1e-12)

    def test_known_conversions(self):
        np.testing.assert_allclose(dbm_to_watts(30.0), 1.0)
        np.testing.assert_allclose(dbm_to_watts(0.0), 1e-3)
        np.testing.assert_allclose(dbm_to_watts(20.0), 0.1)

    def test_noise_power_formula(self):
        # -174 dBm/Hz over 20 MHz with a 5 dB noise figure
        want_dbm = -174.0 + 10 * np.log10(2e7) + 5.0
        np.testing.assert_allclose(noise_power_watts(2e7, 5.0),
                                   dbm_to_watts(want_dbm), rtol=1e-12)
