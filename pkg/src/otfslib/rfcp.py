"""Reduced-full-CP OTFS: frame construction, receive-side reshaping and
pilot-based channel readout.

An RFCP frame is an FCP frame with one extra reduced CP in front, which makes
the per-block CPs decodable: in the delay-Doppler domain the frame is the
``(M+L_cp) x N`` grid obtained by repeating the last ``L_cp`` delay rows on
top, and the whole extended grid follows the reduced-CP channel model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel, ChannelTap, ReferenceGrid
from .errors import ConfigurationError
from .grid import FrameConfig, PrefixKind, otfs_demodulate, otfs_modulate


@dataclass(frozen=True)
class PilotSpec:
    """Single embedded pilot with a guard region around it."""

    position: tuple
    amplitude: float = 1.0
    guard_delay: int = 0
    guard_doppler: int = 0

    def __post_init__(self):
        if self.amplitude <= 0:
            raise ConfigurationError("pilot amplitude must be positive")
        if self.guard_delay < 0 or self.guard_doppler < 0:
            raise ConfigurationError("guard widths must be non-negative")


def extend_grid(x_dd: np.ndarray, l_cp: int) -> np.ndarray:
    """CP addition in the delay-Doppler domain: repeat the last ``l_cp`` delay
    rows on top, giving the ``(M+l_cp) x N`` extended grid."""
    x_dd = np.asarray(x_dd, dtype=complex)
    if l_cp > x_dd.shape[0]:
        raise ConfigurationError("L_cp cannot exceed M")
    if l_cp == 0:
        return x_dd.copy()
    return np.vstack([x_dd[x_dd.shape[0] - l_cp:, :], x_dd])


def build_rfcp(x_dd: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Time samples of an RFCP frame for a base ``M x N`` grid.

    Extends the delay grid by the CP-addition rows, Heisenberg-transforms
    column by column (identical to FCP framing in time) and prepends an outer
    reduced CP of ``L_cp`` samples; total length ``(M+L_cp)N + L_cp``.
    """
    if cfg.kind is not PrefixKind.RFCP:
        raise ConfigurationError("build_rfcp needs an RFCP frame config")
    x_dd = np.asarray(x_dd, dtype=complex)
    if x_dd.shape != (cfg.M, cfg.N):
        raise ConfigurationError(
            f"expected a {cfg.M}x{cfg.N} grid, got {x_dd.shape}"
        )
    inner = otfs_modulate(extend_grid(x_dd, cfg.L_cp))
    if cfg.L_cp == 0:
        return inner
    return np.concatenate([inner[inner.size - cfg.L_cp:], inner])


def rfcp_receive(r: np.ndarray, cfg: FrameConfig):
    """Split a received RFCP frame into its data and CP delay-Doppler blocks.

    Drops the outer CP, demodulates the ``(M+L_cp) x N`` extended grid and
    partitions the delay rows: rows ``[L_cp, M+L_cp)`` are the data block
    (reduced-CP channel model on the extended grid) and rows ``[0, L_cp)`` the
    decodable CP block.
    """
    if cfg.kind is not PrefixKind.RFCP:
        raise ConfigurationError("rfcp_receive needs an RFCP frame config")
    r = np.asarray(r, dtype=complex).ravel()
    if r.size != cfg.framed_len:
        raise ConfigurationError(
            f"expected {cfg.framed_len} samples, got {r.size}"
        )
    inner = r[cfg.L_cp:]
    grid = otfs_demodulate(inner, cfg.M + cfg.L_cp, cfg.N)
    return grid[cfg.L_cp:, :], grid[:cfg.L_cp, :]


def pilot_frame(pilot: PilotSpec, m: int, n: int) -> np.ndarray:
    """Grid carrying only the pilot impulse (guard region left empty)."""
    l_p, k_p = pilot.position
    if not (0 <= l_p < m and 0 <= k_p < n):
        raise ConfigurationError("pilot position outside the grid")
    x = np.zeros((m, n), dtype=complex)
    x[l_p, k_p] = pilot.amplitude
    return x


def rfcp_pilot_readout(r: np.ndarray, cfg: FrameConfig,
                       pilot: PilotSpec) -> ChannelModel:
    """Channel readout from a received RFCP pilot frame.

    Reassembles the full extended grid (CP rows on top of the data rows) and
    reads the taps around the pilot, whose base-grid position shifts down by
    ``L_cp`` delay rows on the extended grid.
    """
    data, cp = rfcp_receive(r, cfg)
    grid = np.vstack([cp, data])
    l_p, k_p = pilot.position
    shifted = PilotSpec(
        position=(l_p + cfg.L_cp, k_p),
        amplitude=pilot.amplitude,
        guard_delay=pilot.guard_delay,
        guard_doppler=pilot.guard_doppler,
    )
    return pilot_cir(grid, shifted)


def pilot_cir(y_dd: np.ndarray, pilot: PilotSpec,
              grid: ReferenceGrid = ReferenceGrid.FCP_GRID,
              rel_floor: float = 1e-6) -> ChannelModel:
    """Read the channel taps off a received pilot grid.

    The grid is assumed to follow the reduced-CP model on its own dimensions
    (true for RCP/RZP frames and for the RFCP extended grid): a tap
    ``(h_i, l_i, k_i)`` shows up at ``([l_p+l_i], [k_p+k_i]_N)`` with value
    ``h_i * amplitude * phase``, and the known phase is divided out.  Cells
    count as taps when they exceed ``3x`` the noise-floor estimate of the
    searched window (plus a relative floor against numerical dust).
    """
    y_dd = np.asarray(y_dd, dtype=complex)
    m, n = y_dd.shape
    l_p, k_p = pilot.position
    d_max = pilot.guard_delay if pilot.guard_delay else m - 1
    k_max = pilot.guard_doppler if pilot.guard_doppler else n // 2
    window = [
        ((l_p + dl) % m, (k_p + dk) % n, dl, dk)
        for dl in range(d_max + 1)
        for dk in range(-k_max, k_max + 1)
    ]
    mags = np.array([np.abs(y_dd[l, k]) for l, k, _, _ in window])
    floor = float(np.median(mags))
    threshold = max(3.0 * floor, rel_floor * float(mags.max()))
    taps = []
    glen = m * n
    for (l, k, dl, dk), mag in zip(window, mags):
        if mag <= threshold:
            continue
        phase = np.exp(2j * np.pi * dk * l_p / glen)
        if l < dl:  # the response wrapped around the delay axis
            phase *= np.exp(-2j * np.pi * k / n)
        h = y_dd[l, k] / (pilot.amplitude * phase)
        taps.append(ChannelTap(gain=complex(h), delay=dl, doppler=float(dk)))
    if not taps:
        raise ConfigurationError(
            "no taps found above the pilot detection threshold"
        )
    return ChannelModel(taps=tuple(taps), reference_grid=grid)
