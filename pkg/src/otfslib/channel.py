"""Doubly-dispersive channel model, prefix/suffix framing and propagation.

The exact time-domain channel matrix of every prefix/suffix configuration is
available in closed form for integer Doppler bins (``build_time_channel``).
Sample-level propagation (``propagate``) supports fractional Doppler as well
and is bit-reproducible given a seed.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, FractionalDopplerError
from .grid import FrameConfig, PrefixKind

_INT_TOL = 1e-9


class ReferenceGrid(enum.Enum):
    """Which frame length the integer Doppler bins of a model index.

    Reduced-prefix frames spread ``M*N`` samples over the Doppler axis while
    full-prefix frames spread ``(M+L_cp)*N``, so the same physical Doppler
    maps to different bin values.
    """

    RCP_GRID = "RCP"
    FCP_GRID = "FCP"


@dataclass(frozen=True)
class ChannelTap:
    """One propagation path: complex gain, integer delay (samples) and Doppler
    in frame-grid bins (real-valued Doppler means a fractional bin)."""

    gain: complex
    delay: int
    doppler: float

    def __post_init__(self):
        if self.delay < 0:
            raise ConfigurationError("tap delay must be non-negative")
        if not (np.isfinite(self.gain) and np.isfinite(self.doppler)):
            raise ConfigurationError("tap gain and Doppler must be finite")

    @property
    def has_integer_doppler(self) -> bool:
        return abs(self.doppler - round(self.doppler)) <= _INT_TOL


@dataclass(frozen=True)
class ChannelModel:
    """Ordered list of taps plus the grid its Doppler bins refer to."""

    taps: tuple
    reference_grid: ReferenceGrid = ReferenceGrid.RCP_GRID
    normalized: bool = False

    def __post_init__(self):
        if len(self.taps) == 0:
            raise ConfigurationError("a channel model needs at least one tap")
        object.__setattr__(self, "taps", tuple(self.taps))

    @property
    def max_delay(self) -> int:
        return max(t.delay for t in self.taps)

    @property
    def has_integer_doppler(self) -> bool:
        return all(t.has_integer_doppler for t in self.taps)

    def to_json(self) -> str:
        doc = {
            "taps": [
                {
                    "gain_re": float(np.real(t.gain)),
                    "gain_im": float(np.imag(t.gain)),
                    "delay": int(t.delay),
                    "doppler": float(t.doppler),
                }
                for t in self.taps
            ],
            "grid": self.reference_grid.value,
            "normalized": self.normalized,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "ChannelModel":
        doc = json.loads(text)
        taps = tuple(
            ChannelTap(
                gain=complex(t["gain_re"], t["gain_im"]),
                delay=int(t["delay"]),
                doppler=float(t["doppler"]),
            )
            for t in doc["taps"]
        )
        return cls(
            taps=taps,
            reference_grid=ReferenceGrid(doc.get("grid", "RCP")),
            normalized=bool(doc.get("normalized", False)),
        )


@dataclass(frozen=True)
class NoiseSpec:
    """AWGN level as Es/N0 in dB relative to unit average symbol energy."""

    snr_db: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ConfigurationError("snr_db must be finite")

    @property
    def variance(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0) if self.enabled else 0.0


def expected_grid(cfg: FrameConfig) -> ReferenceGrid:
    """Reference grid a model must declare to be used with ``cfg``."""
    if cfg.kind in (PrefixKind.FCP, PrefixKind.RFCP):
        return ReferenceGrid.FCP_GRID
    return ReferenceGrid.RCP_GRID


def check_model(model: ChannelModel, cfg: FrameConfig):
    """Validate tap delays and the Doppler grid against a frame config."""
    if model.reference_grid is not expected_grid(cfg):
        raise ConfigurationError(
            f"model Doppler bins are on the {model.reference_grid.value} grid "
            f"but the frame is {cfg.kind.value}"
        )
    if model.max_delay >= cfg.M:
        raise ConfigurationError(
            f"tap delay {model.max_delay} >= M={cfg.M} is not supported"
        )
    guard = cfg.L_zs if cfg.kind is PrefixKind.FZS else cfg.L_cp
    if model.max_delay > guard:
        raise ConfigurationError(
            f"tap delay {model.max_delay} exceeds the guard length {guard} "
            f"of a {cfg.kind.value} frame"
        )


def per_sample_phase(tap: ChannelTap, frame_len: int) -> complex:
    """Per-sample Doppler rotation z = exp(j*2*pi*k/frame_len) of a tap."""
    if frame_len < 1:
        raise ConfigurationError("frame_len must be positive")
    return np.exp(2j * np.pi * tap.doppler / frame_len)


def model_from_physical(gains, delays, cycles_per_sample, cfg: FrameConfig,
                        normalized=False) -> ChannelModel:
    """Build a model from physical Doppler in cycles per sample.

    The bin value is ``phi * doppler_grid_len`` of the target frame, so the
    same physical channel can be re-expressed for any configuration.
    """
    taps = tuple(
        ChannelTap(gain=g, delay=int(d), doppler=phi * cfg.doppler_grid_len)
        for g, d, phi in zip(gains, delays, cycles_per_sample)
    )
    return ChannelModel(taps=taps, reference_grid=expected_grid(cfg),
                        normalized=normalized)


def random_model(rng: np.random.Generator, n_taps: int, k_max: int,
                 cfg: FrameConfig, max_delay=None,
                 fractional=False) -> ChannelModel:
    """Draw a random channel: i.i.d. CN(0, 1/L) gains, distinct delays in
    [0, guard], Doppler uniform in [-k_max, k_max] (integers unless
    ``fractional``)."""
    if max_delay is None:
        max_delay = cfg.L_zs if cfg.kind is PrefixKind.FZS else cfg.L_cp
        max_delay = min(max_delay, cfg.M - 1)
    if max_delay + 1 < n_taps:
        raise ConfigurationError(
            f"cannot draw {n_taps} distinct delays from [0, {max_delay}]"
        )
    delays = rng.choice(max_delay + 1, size=n_taps, replace=False)
    gains = (rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps))
    gains *= np.sqrt(0.5 / n_taps)
    if fractional:
        dopplers = rng.uniform(-k_max, k_max, size=n_taps)
    else:
        dopplers = rng.integers(-k_max, k_max + 1, size=n_taps).astype(float)
    taps = tuple(
        ChannelTap(gain=complex(g), delay=int(d), doppler=float(k))
        for g, d, k in zip(gains, delays, dopplers)
    )
    return ChannelModel(taps=taps, reference_grid=expected_grid(cfg),
                        normalized=True)


def build_time_channel(model: ChannelModel, cfg: FrameConfig) -> np.ndarray:
    """Exact time-domain channel matrix after framing is stripped.

    * RCP/RZP: ``sum_i h_i Pi^{l_i} Delta^{k_i}`` of size ``MN x MN``.
    * FCP: block-diagonal with N blocks of size M (CPs already discarded);
      block ``n`` has entry ``(l, [l-l_i]_M) = h_i z^(n(M+L_cp)+L_cp+l-l_i)``
      with the un-wrapped exponent ``l - l_i``.
    * FZS: block-diagonal of lower-triangular blocks (FCP blocks at L_cp=0 on
      the MN grid); columns at zero-suffix delay positions are zeroed, which
      changes nothing for valid FZS frames.
    * RFCP: RCP-style matrix on the extended ``(M+L_cp)N`` grid.

    Integer Doppler only; use ``propagate``/``pipeline_matrix`` otherwise.
    """
    check_model(model, cfg)
    if not model.has_integer_doppler:
        raise FractionalDopplerError(
            "closed-form channel matrices require integer Doppler bins; "
            "use propagate() or pipeline_matrix() instead"
        )
    m, n, l_cp = cfg.M, cfg.N, cfg.L_cp
    kind = cfg.kind

    if kind in (PrefixKind.RCP, PrefixKind.RZP, PrefixKind.RFCP):
        size = m * n if kind is not PrefixKind.RFCP else (m + l_cp) * n
        h = np.zeros((size, size), dtype=complex)
        rows = np.arange(size)
        for tap in model.taps:
            z = per_sample_phase(tap, size)
            cols = (rows - tap.delay) % size
            h[rows, cols] += tap.gain * z ** cols
        return h

    if kind is PrefixKind.FCP:
        glen = (m + l_cp) * n
        h = np.zeros((m * n, m * n), dtype=complex)
        lrow = np.arange(m)
        for blk in range(n):
            base = blk * m
            for tap in model.taps:
                z = per_sample_phase(tap, glen)
                expo = blk * (m + l_cp) + l_cp + lrow - tap.delay
                cols = (lrow - tap.delay) % m
                h[base + lrow, base + cols] += tap.gain * z ** expo
        return h

    if kind is PrefixKind.FZS:
        size = m * n
        h = np.zeros((size, size), dtype=complex)
        for blk in range(n):
            base = blk * m
            for tap in model.taps:
                z = per_sample_phase(tap, size)
                lrow = np.arange(tap.delay, m)
                cols = lrow - tap.delay
                keep = cols < m - cfg.L_zs  # zero-suffix columns carry no data
                lrow, cols = lrow[keep], cols[keep]
                h[base + lrow, base + cols] += (
                    tap.gain * z ** (blk * m + cols)
                )
        return h

    raise ConfigurationError(f"unsupported frame kind {kind}")


def add_framing(s: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Insert the prefix/suffix of ``cfg`` around the payload samples."""
    s = np.asarray(s, dtype=complex).ravel()
    m, n, l_cp = cfg.M, cfg.N, cfg.L_cp
    if s.size != m * n:
        raise ConfigurationError(f"expected {m * n} payload samples, got {s.size}")
    kind = cfg.kind
    if kind is PrefixKind.RCP:
        return np.concatenate([s[m * n - l_cp:], s])
    if kind is PrefixKind.RZP:
        return np.concatenate([s, np.zeros(l_cp, dtype=complex)])
    if kind in (PrefixKind.FCP, PrefixKind.RFCP):
        blocks = s.reshape((m, n), order="F")
        framed = np.vstack([blocks[m - l_cp:, :], blocks]).ravel(order="F")
        if kind is PrefixKind.RFCP:
            framed = np.concatenate([framed[framed.size - l_cp:], framed])
        return framed
    if kind is PrefixKind.FZS:
        return s.copy()
    raise ConfigurationError(f"unsupported frame kind {kind}")


def strip_framing(r: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    """Undo ``add_framing`` on the receive side.

    RZP folds the channel tail back onto the frame head (overlap-add); RFCP
    only drops the outer CP, leaving the ``(M+L_cp)N`` inner frame.
    """
    r = np.asarray(r, dtype=complex).ravel()
    m, n, l_cp = cfg.M, cfg.N, cfg.L_cp
    kind = cfg.kind
    if kind is PrefixKind.RCP:
        if r.size < l_cp + m * n:
            raise ConfigurationError("received frame is too short")
        return r[l_cp:l_cp + m * n].copy()
    if kind is PrefixKind.RZP:
        if r.size < m * n:
            raise ConfigurationError("received frame is too short")
        out = r[:m * n].copy()
        tail = r[m * n:]
        out[:tail.size] += tail
        return out
    if kind is PrefixKind.FCP:
        if r.size < (m + l_cp) * n:
            raise ConfigurationError("received frame is too short")
        blocks = r[:(m + l_cp) * n].reshape((m + l_cp, n), order="F")
        return blocks[l_cp:, :].ravel(order="F")
    if kind is PrefixKind.RFCP:
        if r.size < (m + l_cp) * n + l_cp:
            raise ConfigurationError("received frame is too short")
        return r[l_cp:l_cp + (m + l_cp) * n].copy()
    if kind is PrefixKind.FZS:
        if r.size < m * n:
            raise ConfigurationError("received frame is too short")
        return r[:m * n].copy()
    raise ConfigurationError(f"unsupported frame kind {kind}")


def _apply_taps(s: np.ndarray, model: ChannelModel, cfg: FrameConfig) -> np.ndarray:
    """Noiseless sample-level channel; works on a vector or on columns of a
    2-D array."""
    out = np.zeros_like(s)
    glen = cfg.doppler_grid_len
    offset = cfg.phase_offset
    idx = np.arange(s.shape[0])
    for tap in model.taps:
        li = tap.delay
        phase = np.exp(2j * np.pi * tap.doppler * (idx[li:] - offset - li) / glen)
        if s.ndim == 1:
            out[li:] += tap.gain * phase * s[:s.shape[0] - li]
        else:
            out[li:] += tap.gain * phase[:, None] * s[:s.shape[0] - li]
    return out


def propagate(s: np.ndarray, model: ChannelModel, cfg: FrameConfig,
              noise: NoiseSpec | None = None, seed: int = 0) -> np.ndarray:
    """Pass a framed signal through the channel, optionally adding AWGN.

    ``r[q] = sum_i h_i exp(j*2*pi*k_i*(q - offset - l_i)/G) s[q - l_i]`` where
    ``G`` is the configuration's Doppler grid length and ``offset`` the index
    of the first payload sample (the Doppler ramp is referenced to the payload
    start so the stripped pipeline matches the channel matrices exactly).
    Deterministic for a fixed seed.
    """
    s = np.asarray(s, dtype=complex).ravel()
    if s.size != cfg.framed_len:
        raise ConfigurationError(
            f"framed signal length {s.size} != expected {cfg.framed_len}"
        )
    check_model(model, cfg)
    r = _apply_taps(s, model, cfg)
    if noise is not None and noise.enabled:
        rng = np.random.default_rng(seed)
        sigma = np.sqrt(noise.variance / 2.0)
        r = r + sigma * (rng.standard_normal(r.size)
                         + 1j * rng.standard_normal(r.size))
    return r


def pipeline_matrix(model: ChannelModel, cfg: FrameConfig) -> np.ndarray:
    """Equivalent payload-to-payload matrix of the full noiseless pipeline
    (add framing, propagate, strip framing), derived from ``propagate``.

    Unlike ``build_time_channel`` this supports fractional Doppler; for
    integer Doppler the two agree to machine precision.
    """
    check_model(model, cfg)
    size = cfg.grid_size
    basis = np.zeros((cfg.framed_len, size), dtype=complex)
    eye = np.eye(size, dtype=complex)
    for i in range(size):
        basis[:, i] = add_framing(eye[:, i], cfg)
    received = _apply_taps(basis, model, cfg)
    out_len = strip_framing(received[:, 0], cfg).size
    h = np.empty((out_len, size), dtype=complex)
    for i in range(size):
        h[:, i] = strip_framing(received[:, i], cfg)
    return h
