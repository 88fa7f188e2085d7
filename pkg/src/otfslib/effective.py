"""Effective delay-Doppler channel matrices and the circulant toolkit.

The effective channel relates vectorized delay-Doppler input and output,
``y = H_eff x``; for integer Doppler it is sparse with one entry per tap in
each row.  Both routes to it are provided: conjugating the time-domain matrix
by the Kronecker-structured DFT, and direct sparse assembly from the
per-configuration phase term.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .channel import (ChannelModel, ChannelTap, check_model, pipeline_matrix)
from .errors import (ConfigurationError, FractionalDopplerError,
                     SingularChannelError, StructureError)
from .grid import FrameConfig, PrefixKind, dft_matrix


@dataclass(frozen=True)
class EffectiveChannel:
    """Delay-Doppler channel matrix with row/column index ``k*M + l``."""

    matrix: np.ndarray
    config: FrameConfig | None = None

    @property
    def shape(self):
        return self.matrix.shape

    def to_triples(self, tol: float = 0.0):
        """Coordinate list [(row, col, value), ...] of the non-zero entries."""
        rows, cols = np.nonzero(np.abs(self.matrix) > tol)
        vals = self.matrix[rows, cols]
        return list(zip(rows.tolist(), cols.tolist(), vals.tolist()))

    def save_json(self, path):
        triples = [
            {"row": r, "col": c, "re": v.real, "im": v.imag}
            for r, c, v in self.to_triples()
        ]
        with open(path, "w") as fh:
            json.dump(triples, fh)

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "col", "re", "im"])
            for r, c, v in self.to_triples():
                writer.writerow([r, c, f"{v.real:.17e}", f"{v.imag:.17e}"])


def _kron_fn_im(m: int, n: int, conj: bool = False) -> np.ndarray:
    f = dft_matrix(n)
    if conj:
        f = f.conj().T
    return np.kron(f, np.eye(m))


def effective_from_time(h: np.ndarray, m: int, n: int,
                        config: FrameConfig | None = None) -> EffectiveChannel:
    """Conjugate a time-domain channel matrix into the delay-Doppler domain:
    ``H_eff = (F_N kron I_M) H (F_N^H kron I_M)``."""
    h = np.asarray(h, dtype=complex)
    if h.shape != (m * n, m * n):
        raise ConfigurationError(
            f"time channel must be {m * n}x{m * n}, got {h.shape}"
        )
    heff = _kron_fn_im(m, n) @ h @ _kron_fn_im(m, n, conj=True)
    return EffectiveChannel(matrix=heff, config=config)


def effective_numeric(model: ChannelModel, cfg: FrameConfig) -> EffectiveChannel:
    """Effective channel obtained numerically from the propagation pipeline.

    This is the route for fractional Doppler, where no closed form exists.
    """
    if cfg.kind is PrefixKind.RFCP:
        # the inner frame behaves like a reduced-CP frame on the extended grid
        import dataclasses

        from .channel import ReferenceGrid

        base = FrameConfig(kind=PrefixKind.RCP, M=cfg.M + cfg.L_cp,
                           N=cfg.N, L_cp=cfg.L_cp)
        retagged = dataclasses.replace(
            model, reference_grid=ReferenceGrid.RCP_GRID
        )
        h = pipeline_matrix(retagged, base)
        return effective_from_time(h, base.M, base.N, config=cfg)
    h = pipeline_matrix(model, cfg)
    return effective_from_time(h, cfg.M, cfg.N, config=cfg)


def gamma(cfg: FrameConfig, tap: ChannelTap, l: int, k: int) -> complex:
    """Phase term of one tap at output bin (l, k).

    This is the configuration-dependent factor the received signal picks up
    when the input grid is extended quasi-periodically:

    * RCP/RZP: ``z^(k_i [l-l_i]_M) * Lambda`` with the extra ``exp(-j2pi k/N)``
      on delay-wrapped rows;
    * FCP: ``exp(j2pi k_i (L_cp + l - l_i) / ((M+L_cp)N))``, no wrap factor;
    * FZS: ``exp(j2pi k_i (l - l_i) / (MN))`` for ``l >= l_i``, zero weight
      otherwise (the wrapped symbol is zero by construction);
    * RFCP: RCP formula on the extended ``(M+L_cp) x N`` grid.
    """
    ki = tap.doppler
    li = tap.delay
    m, n = cfg.M, cfg.N
    kind = cfg.kind
    if kind in (PrefixKind.RCP, PrefixKind.RZP, PrefixKind.RFCP):
        if kind is PrefixKind.RFCP:
            m = cfg.M + cfg.L_cp
        glen = m * n
        val = np.exp(2j * np.pi * ki * ((l - li) % m) / glen)
        if l < li:
            val *= np.exp(-2j * np.pi * k / n)
        return complex(val)
    if kind is PrefixKind.FCP:
        glen = (m + cfg.L_cp) * n
        return complex(np.exp(2j * np.pi * ki * (cfg.L_cp + l - li) / glen))
    if kind is PrefixKind.FZS:
        if l < li:
            return 0j
        return complex(np.exp(2j * np.pi * ki * (l - li) / (m * n)))
    raise ConfigurationError(f"unsupported frame kind {kind}")


def heff_closed_form(model: ChannelModel, cfg: FrameConfig) -> EffectiveChannel:
    """Sparse closed-form assembly of the effective channel (integer Doppler).

    Row ``kM + l`` couples to column ``[l-l_i]_M + M [k-k_i]_N`` with value
    ``h_i * gamma(...)``; FZS uses the un-wrapped delay and skips zero-suffix
    input bins.
    """
    check_model(model, cfg)
    if not model.has_integer_doppler:
        raise FractionalDopplerError(
            "closed-form effective channels require integer Doppler; "
            "use effective_numeric() instead"
        )
    m = cfg.M + cfg.L_cp if cfg.kind is PrefixKind.RFCP else cfg.M
    n = cfg.N
    heff = np.zeros((m * n, m * n), dtype=complex)
    lg, kg = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    rows = kg * m + lg
    for tap in model.taps:
        ki = int(round(tap.doppler))
        li = tap.delay
        if cfg.kind is PrefixKind.FZS:
            sel = lg >= li
            ld = lg - li
            sel &= ld < m - cfg.L_zs  # zero-suffix bins carry no data
        else:
            sel = np.ones_like(lg, dtype=bool)
            ld = (lg - li) % m
        cols = ld + m * ((kg - ki) % n)
        phases = _gamma_grid(cfg, tap, m, n)
        heff[rows[sel], cols[sel]] += tap.gain * phases[sel]
    return EffectiveChannel(matrix=heff, config=cfg)


def _gamma_grid(cfg: FrameConfig, tap: ChannelTap, m: int, n: int) -> np.ndarray:
    """Vectorized ``gamma`` over the full (l, k) grid."""
    ki, li = tap.doppler, tap.delay
    lg = np.arange(m)[:, None]
    kg = np.arange(n)[None, :]
    kind = cfg.kind
    if kind in (PrefixKind.RCP, PrefixKind.RZP, PrefixKind.RFCP):
        glen = m * n
        val = np.exp(2j * np.pi * ki * ((lg - li) % m) / glen)
        wrap = np.exp(-2j * np.pi * kg / n)
        return np.where(lg < li, val * wrap, val * np.ones_like(wrap))
    if kind is PrefixKind.FCP:
        glen = (m + cfg.L_cp) * n
        val = np.exp(2j * np.pi * ki * (cfg.L_cp + lg - li) / glen)
        return np.broadcast_to(val, (m, n)).copy()
    if kind is PrefixKind.FZS:
        val = np.exp(2j * np.pi * ki * (lg - li) / (m * n))
        out = np.broadcast_to(val, (m, n)).copy()
        out[np.broadcast_to(lg < li, (m, n))] = 0.0
        return out
    raise ConfigurationError(f"unsupported frame kind {kind}")


def io_response(x_dd: np.ndarray, model: ChannelModel,
                cfg: FrameConfig) -> np.ndarray:
    """Noiseless closed-form input-output relation on the delay-Doppler grid:
    ``Y(l,k) = sum_i h_i gamma_i(l,k) X([l-l_i]_M, [k-k_i]_N)`` (FZS uses the
    un-wrapped delay shift with zero fill).  Integer Doppler only."""
    check_model(model, cfg)
    if not model.has_integer_doppler:
        raise FractionalDopplerError("io_response requires integer Doppler")
    m = cfg.M + cfg.L_cp if cfg.kind is PrefixKind.RFCP else cfg.M
    n = cfg.N
    x_dd = np.asarray(x_dd, dtype=complex)
    if x_dd.shape != (m, n):
        raise ConfigurationError(f"expected a {m}x{n} grid, got {x_dd.shape}")
    y = np.zeros((m, n), dtype=complex)
    if cfg.kind is PrefixKind.FZS and cfg.L_zs > 0:
        x_dd = x_dd.copy()
        x_dd[m - cfg.L_zs:, :] = 0.0
    for tap in model.taps:
        ki = int(round(tap.doppler))
        li = tap.delay
        shifted = np.roll(np.roll(x_dd, li, axis=0), ki, axis=1)
        if cfg.kind is PrefixKind.FZS and li > 0:
            shifted[:li, :] = 0.0  # no delay wrap: suffix bins are zero anyway
        y += tap.gain * _gamma_grid(cfg, tap, m, n) * shifted
    return y


def doubly_block_circulant(gen: np.ndarray) -> np.ndarray:
    """Doubly block circulant matrix of a 2-D generator ``g`` (shape M x N):
    ``A[nM+m, n'M+m'] = g([m-m']_M, [n-n']_N)``, so ``A vec(b)`` is the 2-D
    circular convolution of ``g`` and ``b``."""
    gen = np.asarray(gen, dtype=complex)
    if gen.ndim != 2:
        raise ConfigurationError("generator must be a 2-D array")
    m, n = gen.shape
    a = np.empty((m * n, m * n), dtype=complex)
    mi = np.arange(m)
    for bn in range(n):
        for bnp in range(n):
            block = gen[(mi[:, None] - mi[None, :]) % m, (bn - bnp) % n]
            a[bn * m:(bn + 1) * m, bnp * m:(bnp + 1) * m] = block
    return a


def _generator_eigenvalues(gen: np.ndarray) -> np.ndarray:
    """Eigenvalue grid of the doubly block circulant matrix of ``gen``:
    ``lam(p,q) = sum_{a,b} g(a,b) exp(j2pi(ap/M - bq/N))`` (the 2-D SFFT of
    the generator, up to normalization)."""
    m = gen.shape[0]
    return m * np.fft.ifft(np.fft.fft(gen, axis=1), axis=0)


def sfft_diagonalize(a: np.ndarray, m: int, n: int,
                     tol: float = 1e-10) -> np.ndarray:
    """Diagonalize a doubly block circulant matrix by the 2-D SFFT basis:
    ``Sigma = (F_N kron F_M^-1) A (F_N^-1 kron F_M)``.

    Returns the diagonal matrix; raises ``StructureError`` if the off-diagonal
    residual exceeds ``tol`` (the input was not doubly block circulant).
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (m * n, m * n):
        raise ConfigurationError(f"matrix must be {m * n}x{m * n}")
    fm, fn = dft_matrix(m), dft_matrix(n)
    left = np.kron(fn, fm.conj().T)
    right = np.kron(fn.conj().T, fm)
    sigma = left @ a @ right
    off = sigma - np.diag(np.diag(sigma))
    resid = np.max(np.abs(off))
    if resid > tol:
        raise StructureError(
            f"off-diagonal residual {resid:.3e} > {tol:.1e}: "
            "input is not doubly block circulant"
        )
    return np.diag(np.diag(sigma))


def block_diagonalize(a: np.ndarray, m: int, n: int,
                      tol: float = 1e-10) -> np.ndarray:
    """Block-diagonalize a block-circulant matrix (blocks of size M):
    ``D = (F_N kron I_M) A (F_N^-1 kron I_M)``; raises ``StructureError`` when
    the off-block residual exceeds ``tol``."""
    a = np.asarray(a, dtype=complex)
    if a.shape != (m * n, m * n):
        raise ConfigurationError(f"matrix must be {m * n}x{m * n}")
    d = _kron_fn_im(m, n) @ a @ _kron_fn_im(m, n, conj=True)
    mask = np.kron(np.eye(n, dtype=bool), np.ones((m, m), dtype=bool))
    resid = np.max(np.abs(d[~mask])) if (~mask).any() else 0.0
    if resid > tol:
        raise StructureError(
            f"off-block residual {resid:.3e} > {tol:.1e}: "
            "input is not block circulant"
        )
    return np.where(mask, d, 0.0)


def static_equalize(y_dd: np.ndarray, model: ChannelModel,
                    tol: float = 1e-12) -> np.ndarray:
    """Bin-wise equalization of a static (zero-Doppler) FCP/FZS channel.

    The static effective channel is a 2-D circular convolution, so it is
    inverted by element-wise division in the 2-D SFFT eigendomain.  Raises
    ``SingularChannelError`` listing bins whose eigenvalue magnitude falls
    below ``tol``.
    """
    y_dd = np.asarray(y_dd, dtype=complex)
    m, n = y_dd.shape
    if any(abs(t.doppler) > 1e-12 for t in model.taps):
        raise ConfigurationError("static_equalize requires all-zero Doppler")
    gen = np.zeros((m, n), dtype=complex)
    for tap in model.taps:
        gen[tap.delay % m, 0] += tap.gain
    lam = _generator_eigenvalues(gen)
    bad = np.argwhere(np.abs(lam) < tol)
    if bad.size:
        bins = [(int(p), int(q)) for p, q in bad]
        raise SingularChannelError(
            f"channel eigenvalues vanish at delay/Doppler bins {bins}",
            zero_bins=bins,
        )
    fm, fn = dft_matrix(m), dft_matrix(n)
    w = fm.conj().T @ y_dd @ fn       # (F_N kron F_M^-1) y on the grid
    w /= lam
    return fm @ w @ fn.conj().T       # back through (F_N^-1 kron F_M)
