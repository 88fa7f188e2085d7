"""Capacity, transmit power, BER accounting and Doppler-leakage measurement."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channel import ChannelModel
from .errors import ConfigurationError
from .grid import FrameConfig, PrefixKind


@dataclass(frozen=True)
class EfficiencyReport:
    """Capacity with the matching overhead factors of one configuration."""

    capacity: float
    tx_power: float
    spectral_eff_factor: float
    power_eff_factor: float

    def to_json_row(self, cfg: FrameConfig, gamma_db: float) -> str:
        return json.dumps({
            "config": cfg.kind.value,
            "M": cfg.M, "N": cfg.N, "Lcp": cfg.L_cp, "Lzs": cfg.L_zs,
            "gamma_db": gamma_db,
            "capacity": self.capacity,
            "power": self.tx_power,
        })


def spectral_efficiency_factor(cfg: FrameConfig) -> float:
    """Fraction of transmitted resources carrying data symbols."""
    m, n, l_cp, l_zs = cfg.M, cfg.N, cfg.L_cp, cfg.L_zs
    if cfg.kind in (PrefixKind.RCP, PrefixKind.RZP):
        return m * n / (m * n + l_cp)
    if cfg.kind is PrefixKind.FCP:
        return m / (m + l_cp)
    if cfg.kind is PrefixKind.FZS:
        return (m - l_zs) / m
    raise ConfigurationError(
        f"no capacity formula is defined for {cfg.kind.value}"
    )


def capacity(cfg: FrameConfig, gamma: float) -> float:
    """Capacity in bits/s/Hz at instantaneous SNR ``gamma`` (linear scale),
    discounted by the configuration's prefix/suffix overhead."""
    if gamma < 0:
        raise ConfigurationError("SNR must be non-negative")
    return spectral_efficiency_factor(cfg) * np.log2(1.0 + gamma)


def tx_power(cfg: FrameConfig, symbol_power: float = 1.0) -> float:
    """Average transmitted frame energy at per-sample power ``symbol_power``."""
    if symbol_power <= 0:
        raise ConfigurationError("symbol_power must be positive")
    m, n, l_cp = cfg.M, cfg.N, cfg.L_cp
    if cfg.kind is PrefixKind.RCP:
        return (m * n + l_cp) * symbol_power
    if cfg.kind in (PrefixKind.RZP, PrefixKind.FZS):
        return m * n * symbol_power
    if cfg.kind is PrefixKind.FCP:
        return n * (m + l_cp) * symbol_power
    if cfg.kind is PrefixKind.RFCP:
        return (n * (m + l_cp) + l_cp) * symbol_power
    raise ConfigurationError(f"unsupported frame kind {cfg.kind}")


def efficiency_report(cfg: FrameConfig, gamma: float,
                      symbol_power: float = 1.0) -> EfficiencyReport:
    return EfficiencyReport(
        capacity=capacity(cfg, gamma),
        tx_power=tx_power(cfg, symbol_power),
        spectral_eff_factor=spectral_efficiency_factor(cfg),
        power_eff_factor=symbol_power / tx_power(cfg, symbol_power),
    )


def ber(tx_bits, rx_bits):
    """Bit error rate and its binomial Monte Carlo standard error."""
    tx_bits = np.asarray(tx_bits).ravel()
    rx_bits = np.asarray(rx_bits).ravel()
    if tx_bits.size != rx_bits.size:
        raise ConfigurationError("bit streams must have equal length")
    if tx_bits.size == 0:
        raise ConfigurationError("bit streams must be non-empty")
    n = tx_bits.size
    p = float(np.count_nonzero(tx_bits != rx_bits)) / n
    return p, float(np.sqrt(p * (1.0 - p) / n))


def doppler_leakage(cir: np.ndarray, model: ChannelModel) -> float:
    """Fraction of received impulse-response energy outside the nominal
    integer (delay, Doppler) bins of the model's taps.

    ``cir`` is the received delay-Doppler grid for a unit pilot at (0, 0); a
    perfectly integer-Doppler channel leaks nothing.  Bins are assigned to
    the nearest integer, ties toward the lower index.
    """
    cir = np.asarray(cir, dtype=complex)
    m, n = cir.shape
    total = float(np.sum(np.abs(cir) ** 2))
    if total <= 0.0:
        raise ConfigurationError("impulse response has zero energy")
    mask = np.zeros((m, n), dtype=bool)
    for tap in model.taps:
        l_bin = int(np.floor(tap.delay + 0.5)) % m
        k_bin = int(np.floor(tap.doppler + 0.5)) % n
        mask[l_bin, k_bin] = True
    inside = float(np.sum(np.abs(cir[mask]) ** 2))
    return 1.0 - inside / total
