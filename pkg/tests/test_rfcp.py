"""Tests for the pilot-readable reduced-full-CP frame format."""
import numpy as np
import pytest

from otfslib import (ChannelModel, ChannelTap, ConfigurationError, FrameConfig,
                     PilotSpec, PrefixKind, ReferenceGrid, build_rfcp,
                     check_model, extend_grid, heff_closed_form,
                     otfs_modulate, pilot_cir, pilot_frame, propagate,
                     random_model, rfcp_pilot_readout, rfcp_receive)


def _cfg(m=8, n=4, l_cp=3):
    return FrameConfig(PrefixKind.RFCP, m, n, L_cp=l_cp)


def _model(cfg, seed=0, n_taps=3, k_max=2):
    return random_model(np.random.default_rng(seed), n_taps, k_max, cfg)


class TestFrameConstruction:
    def test_extend_grid_repeats_tail_rows(self):
        x = np.arange(12.0).reshape(4, 3)
        ext = extend_grid(x, 2)
        assert ext.shape == (6, 3)
        assert np.array_equal(ext[:2], x[2:])
        assert np.array_equal(ext[2:], x)
        assert np.array_equal(extend_grid(x, 0), x)

    def test_extend_grid_limit(self):
        with pytest.raises(ConfigurationError):
            extend_grid(np.zeros((2, 2)), 3)

    def test_build_matches_modulated_extended_grid(self):
        cfg = _cfg()
        rng = np.random.default_rng(1)
        x = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
        s = build_rfcp(x, cfg)
        inner = otfs_modulate(extend_grid(x, cfg.L_cp))
        assert s.size == cfg.framed_len
        assert np.allclose(s[cfg.L_cp:], inner)
        assert np.allclose(s[:cfg.L_cp], inner[-cfg.L_cp:])

    def test_build_requires_rfcp_config(self):
        with pytest.raises(ConfigurationError):
            build_rfcp(np.zeros((4, 4)), FrameConfig(PrefixKind.RCP, 4, 4))

    def test_receive_round_trip_clean(self):
        cfg = _cfg()
        rng = np.random.default_rng(2)
        x = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
        data, cp = rfcp_receive(build_rfcp(x, cfg), cfg)
        assert np.allclose(data, x, atol=1e-12)
        assert np.allclose(cp, x[8 - cfg.L_cp:, :], atol=1e-12)


class TestChannelBehaviour:
    def test_extended_grid_follows_reduced_cp_model(self):
        # through a channel, the received extended grid is H_eff(RFCP) applied
        # to the extended input grid
        cfg = _cfg()
        model = _model(cfg, seed=3)
        rng = np.random.default_rng(4)
        x = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
        r = propagate(build_rfcp(x, cfg), model, cfg)
        data, cp = rfcp_receive(r, cfg)
        got = np.vstack([cp, data]).ravel(order="F")
        heff = heff_closed_form(model, cfg).matrix
        want = heff @ extend_grid(x, cfg.L_cp).ravel(order="F")
        assert np.max(np.abs(got - want)) < 1e-10

    def test_pilot_frame(self):
        p = pilot_frame(PilotSpec(position=(2, 1), amplitude=3.0), 4, 4)
        assert p[2, 1] == 3.0
        assert np.count_nonzero(p) == 1
        with pytest.raises(ConfigurationError):
            pilot_frame(PilotSpec(position=(4, 0)), 4, 4)

    def test_pilot_readout_recovers_taps(self):
        cfg = _cfg(m=16, n=8, l_cp=4)
        model = ChannelModel(
            taps=(
                ChannelTap(0.8 - 0.2j, 0, 1.0),
                ChannelTap(-0.3 + 0.4j, 1, -2.0),
                ChannelTap(0.5j, 3, 2.0),
                ChannelTap(0.25, 4, 0.0),
            ),
            reference_grid=ReferenceGrid.FCP_GRID,
        )
        check_model(model, cfg)
        pilot = PilotSpec(position=(4, 2), guard_delay=4, guard_doppler=3)
        r = propagate(build_rfcp(pilot_frame(pilot, 16, 8), cfg), model, cfg)
        est = rfcp_pilot_readout(r, cfg, pilot)
        assert est.reference_grid is ReferenceGrid.FCP_GRID
        got = {(t.delay, t.doppler): t.gain for t in est.taps}
        assert len(got) == len(model.taps)
        for t in model.taps:
            assert (t.delay, t.doppler) in got
            assert abs(got[(t.delay, t.doppler)] - t.gain) < 1e-8

    def test_pilot_readout_scaled_pilot(self):
        cfg = _cfg(m=8, n=8, l_cp=3)
        model = ChannelModel(
            taps=(ChannelTap(1.0, 0, 0.0), ChannelTap(0.5, 2, 1.0)),
            reference_grid=ReferenceGrid.FCP_GRID,
        )
        pilot = PilotSpec(position=(0, 0), amplitude=4.0,
                          guard_delay=3, guard_doppler=2)
        r = propagate(build_rfcp(pilot_frame(pilot, 8, 8), cfg), model, cfg)
        est = rfcp_pilot_readout(r, cfg, pilot)
        got = {(t.delay, t.doppler): t.gain for t in est.taps}
        assert abs(got[(0, 0.0)] - 1.0) < 1e-8
        assert abs(got[(2, 1.0)] - 0.5) < 1e-8

    def test_pilot_cir_rejects_silence(self):
        with pytest.raises(ConfigurationError):
            pilot_cir(np.zeros((8, 8), dtype=complex),
                      PilotSpec(position=(0, 0)))

    def test_pilot_spec_validation(self):
        with pytest.raises(ConfigurationError):
            PilotSpec(position=(0, 0), amplitude=0.0)
        with pytest.raises(ConfigurationError):
            PilotSpec(position=(0, 0), guard_delay=-1)
