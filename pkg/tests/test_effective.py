"""Effective-channel tests: dual construction routes, the circulant toolkit
and static equalization."""
import numpy as np
import pytest

from otfslib import (ChannelModel, ChannelTap, ConfigurationError, FrameConfig,
                     FractionalDopplerError, PrefixKind, ReferenceGrid,
                     SingularChannelError, StructureError, block_diagonalize,
                     build_time_channel, dft_matrix, doubly_block_circulant,
                     effective_from_time, effective_numeric, expected_grid,
                     gamma, heff_closed_form, io_response, random_model,
                     sfft_diagonalize, static_equalize)

ALL_KINDS = list(PrefixKind)


def _rand_model(rng, cfg, n_taps=3, k_max=4, fractional=False):
    guard = cfg.L_zs if cfg.kind is PrefixKind.FZS else cfg.L_cp
    n_taps = min(n_taps, guard + 1, cfg.M)
    return random_model(rng, n_taps, k_max, cfg, fractional=fractional)


class TestDualRoutes:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("m,n", [(2, 4), (4, 4), (8, 4)])
    def test_closed_form_equals_conjugation(self, kind, m, n):
        cfg = FrameConfig(kind, m, n, L_cp=2, L_zs=1)
        rng = np.random.default_rng(m * 100 + n)
        for trial in range(5):
            model = _rand_model(rng, cfg)
            h = build_time_channel(model, cfg)
            rows = h.shape[0] // n
            via_time = effective_from_time(h, rows, n).matrix
            direct = heff_closed_form(model, cfg).matrix
            assert np.max(np.abs(via_time - direct)) < 1e-12

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_closed_form_equals_numeric(self, kind):
        cfg = FrameConfig(kind, 8, 4, L_cp=3, L_zs=3)
        rng = np.random.default_rng(7)
        for trial in range(5):
            model = _rand_model(rng, cfg)
            a = heff_closed_form(model, cfg).matrix
            b = effective_numeric(model, cfg).matrix
            if kind is PrefixKind.FZS:
                # the numeric route keeps the zero-suffix input columns that
                # the closed form prunes; they are unused by valid frames
                cols = (np.arange(a.shape[1]) % cfg.M) < cfg.M - cfg.L_zs
                assert np.all(a[:, ~cols] == 0)
                a, b = a[:, cols], b[:, cols]
            assert np.max(np.abs(a - b)) < 1e-10

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_io_response_equals_matrix(self, kind):
        cfg = FrameConfig(kind, 8, 4, L_cp=3, L_zs=3)
        rng = np.random.default_rng(13)
        model = _rand_model(rng, cfg)
        heff = heff_closed_form(model, cfg).matrix
        m_eff = heff.shape[0] // cfg.N
        x = rng.standard_normal((m_eff, cfg.N)) \
            + 1j * rng.standard_normal((m_eff, cfg.N))
        if cfg.kind is PrefixKind.FZS:
            x[m_eff - cfg.L_zs:, :] = 0.0
        y = io_response(x, model, cfg)
        assert np.allclose(y.ravel(order="F"), heff @ x.ravel(order="F"),
                           atol=1e-12)

    def test_sparsity_one_entry_per_tap_per_row(self):
        cfg = FrameConfig(PrefixKind.RCP, 8, 8, L_cp=4)
        model = _rand_model(np.random.default_rng(3), cfg, n_taps=4)
        heff = heff_closed_form(model, cfg)
        counts = np.count_nonzero(np.abs(heff.matrix) > 0, axis=1)
        assert np.all(counts == len(model.taps))

    def test_gamma_matches_assembled_entries(self):
        cfg = FrameConfig(PrefixKind.FCP, 4, 4, L_cp=2)
        tap = ChannelTap(1.0, 1, 2.0)
        model = ChannelModel(taps=(tap,), reference_grid=expected_grid(cfg))
        heff = heff_closed_form(model, cfg).matrix
        for l in range(4):
            for k in range(4):
                row = k * 4 + l
                col = (l - 1) % 4 + 4 * ((k - 2) % 4)
                assert abs(heff[row, col] - gamma(cfg, tap, l, k)) < 1e-12

    def test_fractional_requires_numeric_route(self):
        cfg = FrameConfig(PrefixKind.RCP, 4, 4, L_cp=2)
        model = ChannelModel(taps=(ChannelTap(1.0, 0, 0.3),),
                             reference_grid=ReferenceGrid.RCP_GRID)
        with pytest.raises(FractionalDopplerError):
            heff_closed_form(model, cfg)
        with pytest.raises(FractionalDopplerError):
            io_response(np.zeros((4, 4)), model, cfg)
        effective_numeric(model, cfg)  # and the numeric route still works


class TestCirculantToolkit:
    def test_doubly_block_circulant_convolution(self):
        # Lemma check: A vec(b) is the 2D circular convolution of g and b
        rng = np.random.default_rng(17)
        m, n = 5, 4
        g = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        b = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
        a = doubly_block_circulant(g)
        conv = np.fft.ifft2(np.fft.fft2(g) * np.fft.fft2(b))
        assert np.allclose(a @ b.ravel(order="F"), conv.ravel(order="F"),
                           atol=1e-10)

    def test_sfft_diagonalizes_doubly_block_circulant(self):
        rng = np.random.default_rng(18)
        for m, n in [(2, 2), (4, 3), (8, 8)]:
            g = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
            a = doubly_block_circulant(g)
            sigma = sfft_diagonalize(a, m, n)
            assert np.allclose(sigma, np.diag(np.diag(sigma)))
            # eigenvector check against the raw definition
            fm, fn = dft_matrix(m), dft_matrix(n)
            basis = np.kron(fn.conj().T, fm)
            assert np.max(np.abs(a @ basis - basis @ sigma)) < 1e-10

    def test_sfft_diagonalize_rejects_unstructured(self):
        rng = np.random.default_rng(19)
        a = rng.standard_normal((12, 12))
        with pytest.raises(StructureError):
            sfft_diagonalize(a, 4, 3)

    def test_block_diagonalize_block_circulant(self):
        rng = np.random.default_rng(20)
        m, n = 3, 4
        blocks = [rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
                  for _ in range(n)]
        a = np.zeros((m * n, m * n), dtype=complex)
        for r in range(n):
            for c in range(n):
                a[r * m:(r + 1) * m, c * m:(c + 1) * m] = blocks[(r - c) % n]
        d = block_diagonalize(a, m, n)
        mask = np.kron(np.eye(n, dtype=bool), np.ones((m, m), dtype=bool))
        assert np.all(d[~mask] == 0)
        op = np.kron(dft_matrix(n), np.eye(m))
        assert np.max(np.abs(op @ a @ op.conj().T - d)) < 1e-10

    def test_block_diagonalize_rejects_unstructured(self):
        with pytest.raises(StructureError):
            block_diagonalize(np.arange(36.0).reshape(6, 6), 3, 2)

    def test_effective_fcp_is_block_circulant(self):
        # block-diagonal time channel implies block-circulant effective one
        cfg = FrameConfig(PrefixKind.FCP, 4, 4, L_cp=2)
        model = _rand_model(np.random.default_rng(23), cfg)
        heff = heff_closed_form(model, cfg).matrix
        first = heff[:4, :]
        for blk in range(1, 4):
            rows = heff[4 * blk:4 * blk + 4, :]
            assert np.allclose(rows, np.roll(first, 4 * blk, axis=1),
                               atol=1e-12)


class TestStaticEqualization:
    def test_recovers_symbols(self):
        cfg = FrameConfig(PrefixKind.FCP, 8, 4, L_cp=3)
        rng = np.random.default_rng(29)
        model = ChannelModel(
            taps=tuple(
                ChannelTap(complex(g), d, 0.0)
                for g, d in zip(rng.standard_normal(3) + 0.1, (0, 1, 3))
            ),
            reference_grid=ReferenceGrid.FCP_GRID,
        )
        x = rng.standard_normal((8, 4)) + 1j * rng.standard_normal((8, 4))
        y = io_response(x, model, cfg)
        assert np.max(np.abs(static_equalize(y, model) - x)) < 1e-10

    def test_singular_bins_reported(self):
        # h = {1 at delay 0, -1 at delay M/2} kills every odd delay DFT bin
        model = ChannelModel(
            taps=(ChannelTap(1.0, 0, 0.0), ChannelTap(-1.0, 2, 0.0)),
            reference_grid=ReferenceGrid.FCP_GRID,
        )
        with pytest.raises(SingularChannelError) as err:
            static_equalize(np.ones((4, 4), dtype=complex), model)
        assert err.value.zero_bins  # the failing bins are listed

    def test_requires_zero_doppler(self):
        model = ChannelModel(taps=(ChannelTap(1.0, 0, 1.0),),
                             reference_grid=ReferenceGrid.FCP_GRID)
        with pytest.raises(ConfigurationError):
            static_equalize(np.ones((4, 4)), model)


class TestEffectiveChannelContainer:
    def test_to_triples_round_trip(self):
        cfg = FrameConfig(PrefixKind.RCP, 4, 2, L_cp=1)
        model = ChannelModel(
            taps=(ChannelTap(1.0, 0, 0.0), ChannelTap(0.5j, 1, 1.0)),
            reference_grid=ReferenceGrid.RCP_GRID,
        )
        heff = heff_closed_form(model, cfg)
        rebuilt = np.zeros_like(heff.matrix)
        for r, c, v in heff.to_triples():
            rebuilt[r, c] = v
        assert np.array_equal(rebuilt, heff.matrix)

    def test_save_csv(self, tmp_path):
        cfg = FrameConfig(PrefixKind.RCP, 2, 2, L_cp=1)
        model = ChannelModel(taps=(ChannelTap(1.0, 0, 0.0),),
                             reference_grid=ReferenceGrid.RCP_GRID)
        out = tmp_path / "heff.csv"
        heff_closed_form(model, cfg).save_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "row,col,re,im"
        assert len(lines) == 5  # header + one entry per diagonal element
