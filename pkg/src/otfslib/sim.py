"""Monte Carlo BER engine with paired sampling across configurations.

Every trial derives its random state from a single master seed through a
counter-based mixer, so results are reproducible and independent of execution
order (and therefore of any worker partitioning).  Channel draws, payload bits
and noise are shared across configurations, detectors and SNR points of the
same block, which removes most of the between-curve Monte Carlo variance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, ChannelTap, expected_grid
from .detect import (Constellation, MpConfig, _mp_posteriors, demap_symbols,
                     map_bits, qam_constellation)
from .effective import effective_numeric, heff_closed_form
from .errors import ConfigurationError
from .grid import FrameConfig, PrefixKind
from .metrics import doppler_leakage

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

DETECTOR_NAMES = ("zf", "mmse", "mp")


def _mix64(x: int) -> int:
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(master_seed: int, *indices: int) -> int:
    """Derive a per-trial 64-bit seed from the master seed and a tuple of
    counters (stream id, block index, ...).

    Uses the SplitMix64 finalizer on a golden-ratio-stepped state, so nearby
    counters produce statistically independent seeds and the mapping is stable
    across platforms and process boundaries.
    """
    x = _mix64(master_seed ^ _GOLDEN)
    for idx in indices:
        x = _mix64(x + (_GOLDEN * (idx + 1)) & _MASK64)
    return x


@dataclass(frozen=True)
class SweepSpec:
    """One BER experiment: which frames, detectors and SNR points to run."""

    configs: tuple
    snrs_db: tuple
    detectors: tuple = DETECTOR_NAMES
    n_frames: int = 1000
    frames_per_channel: int = 10
    n_taps: int = 4
    k_max: int = 4
    max_delay: int | None = None
    qam_order: int = 4
    doppler_cycles_pool: tuple | None = None
    detector_csi: str = "exact"
    mp: MpConfig = field(default_factory=MpConfig)

    def __post_init__(self):
        if self.n_frames < self.frames_per_channel:
            raise ConfigurationError("n_frames < frames_per_channel")
        if self.detector_csi not in ("exact", "nominal"):
            raise ConfigurationError(
                "detector_csi must be 'exact' or 'nominal'"
            )
        for d in self.detectors:
            if d not in DETECTOR_NAMES:
                raise ConfigurationError(f"unknown detector '{d}'")
        dims = {(c.M, c.N) for c in self.configs}
        if len(dims) != 1:
            raise ConfigurationError(
                "all configs of a sweep must share the grid dimensions"
            )


@dataclass(frozen=True)
class BerPoint:
    """One point of a BER sweep with its Monte Carlo standard error."""

    config: str
    M: int
    N: int
    Lcp: int
    Lzs: int
    detector: str
    snr_db: float
    ber: float
    ber_stderr: float
    trials: int
    seed: int


def _draw_block_channel(rng: np.random.Generator, spec: SweepSpec,
                        guard: int):
    """Shared physical draw for one channel block: distinct delays, CN(0, 1/L)
    gains and Doppler in cycles per sample."""
    n_taps = spec.n_taps
    if guard + 1 < n_taps:
        raise ConfigurationError(
            f"cannot draw {n_taps} distinct delays from [0, {guard}]"
        )
    delays = rng.choice(guard + 1, size=n_taps, replace=False)
    gains = (rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps))
    gains *= np.sqrt(0.5 / n_taps)
    if spec.doppler_cycles_pool is not None:
        pool = np.asarray(spec.doppler_cycles_pool, dtype=float)
        cycles = rng.choice(pool, size=n_taps, replace=True)
        cycles *= rng.choice([-1.0, 1.0], size=n_taps)
    else:
        cycles = None  # integer bins drawn per config below
    bins = rng.integers(-spec.k_max, spec.k_max + 1, size=n_taps)
    return delays, gains, cycles, bins


def _block_model(cfg: FrameConfig, delays, gains, cycles, bins) -> ChannelModel:
    """Express the shared block draw as a model for one configuration.

    With a physical cycles draw the Doppler bin is rescaled to the frame's
    grid (and may turn fractional); otherwise the shared integer bins are used
    directly on each frame's native grid.
    """
    if cycles is not None:
        dopplers = cycles * cfg.doppler_grid_len
    else:
        dopplers = bins.astype(float)
    taps = tuple(
        ChannelTap(gain=complex(g), delay=int(d), doppler=float(k))
        for g, d, k in zip(gains, delays, dopplers)
    )
    return ChannelModel(taps=taps, reference_grid=expected_grid(cfg),
                        normalized=True)


def _effective_matrix(model: ChannelModel, cfg: FrameConfig) -> np.ndarray:
    if model.has_integer_doppler:
        return heff_closed_form(model, cfg).matrix
    return effective_numeric(model, cfg).matrix


def _data_mask(cfg: FrameConfig) -> np.ndarray:
    """Data-carrying delay-Doppler bins (False on FZS zero-suffix rows)."""
    mask = np.ones(cfg.grid_size, dtype=bool)
    if cfg.kind is PrefixKind.FZS and cfg.L_zs > 0:
        mask[(np.arange(cfg.grid_size) % cfg.M) >= cfg.M - cfg.L_zs] = False
    return mask


def _nominal_model(model: ChannelModel) -> ChannelModel:
    """On-grid channel estimate: Doppler rounded to the nearest integer bin
    (the channel a practical receiver reads off a delay-Doppler pilot)."""
    taps = tuple(
        ChannelTap(gain=t.gain, delay=t.delay,
                   doppler=float(np.floor(t.doppler + 0.5)))
        for t in model.taps
    )
    return ChannelModel(taps=taps, reference_grid=model.reference_grid,
                        normalized=model.normalized)


def _config_system(cfg: FrameConfig, delays, gains, cycles, bins, csi):
    """True channel, detection channel and data mask for one configuration.

    FZS frames are run through their exact equivalence: the same received
    signal as a reduced-CP frame whose zero-suffix symbols are zero, detected
    on the square reduced-CP channel (the wrapped entries multiply zeros).
    Detectors then process every configuration through a square system of the
    same size, and bit errors are counted on the data bins only.

    With ``csi='nominal'`` the detectors get the on-grid rounded channel while
    the received signal still comes from the true (possibly fractional) one.
    """
    if cfg.kind is PrefixKind.RFCP:
        raise ConfigurationError("BER sweeps cover the four base configs; "
                                 "run RFCP frames through the rfcp module")
    if cfg.kind is PrefixKind.FZS:
        base = FrameConfig(PrefixKind.RCP, cfg.M, cfg.N, L_cp=cfg.L_zs)
        model = _block_model(base, delays, gains, cycles, bins)
        h_true = _effective_matrix(model, base)
        h_det = h_true if csi == "exact" or model.has_integer_doppler \
            else _effective_matrix(_nominal_model(model), base)
        return h_true, h_det, _data_mask(cfg)
    model = _block_model(cfg, delays, gains, cycles, bins)
    h_true = _effective_matrix(model, cfg)
    h_det = h_true if csi == "exact" or model.has_integer_doppler \
        else _effective_matrix(_nominal_model(model), cfg)
    return h_true, h_det, _data_mask(cfg)


def _linear_filter(h: np.ndarray, sigma2: float) -> np.ndarray:
    """Regularized inversion ``(H^H H + sigma2 I)^-1 H^H`` (works for tall
    matrices; sigma2 = 0 gives the least-squares zero-forcing filter)."""
    gram = h.conj().T @ h + sigma2 * np.eye(h.shape[1])
    try:
        return np.linalg.solve(gram, h.conj().T)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(gram) @ h.conj().T


def _sweep_guard(spec: SweepSpec) -> int:
    if spec.max_delay is not None:
        return spec.max_delay
    guard = min(
        (c.L_zs if c.kind is PrefixKind.FZS else c.L_cp)
        for c in spec.configs
    )
    return min(guard, spec.configs[0].M - 1)


def _sweep_blocks(spec: SweepSpec, seed: int, blocks) -> dict:
    """Bit-error counts of the given channel blocks.

    Returns ``{(config_index, detector, snr_index): errors_per_block}``.  Each
    block's randomness depends only on the master seed and the block index, so
    any partition of the block range reproduces the same counts.
    """
    constellation = qam_constellation(spec.qam_order)
    bps = constellation.bits_per_symbol
    grid_size = spec.configs[0].grid_size
    fpc = spec.frames_per_channel
    sigma2s = [10.0 ** (-s / 10.0) for s in spec.snrs_db]
    guard = _sweep_guard(spec)
    blocks = list(blocks)

    err = {
        (ci, det, si): np.zeros(len(blocks))
        for ci in range(len(spec.configs))
        for det in spec.detectors
        for si in range(len(sigma2s))
    }

    for bi, b in enumerate(blocks):
        ch_rng = np.random.default_rng(trial_seed(seed, 0, b))
        delays, gains, cycles, bins = _draw_block_channel(ch_rng, spec, guard)
        fr_rng = np.random.default_rng(trial_seed(seed, 1, b))
        bits = fr_rng.integers(0, 2, size=(fpc, grid_size * bps))
        x_all = map_bits(bits.ravel(), constellation).reshape(fpc, grid_size)
        noise_unit = (fr_rng.standard_normal((fpc, grid_size))
                      + 1j * fr_rng.standard_normal((fpc, grid_size)))
        noise_unit *= np.sqrt(0.5)

        for ci, cfg in enumerate(spec.configs):
            h, h_det, data = _config_system(cfg, delays, gains, cycles, bins,
                                            spec.detector_csi)
            x = x_all.copy()
            x[:, ~data] = 0.0
            tx_bits = bits.reshape(fpc, grid_size, bps)[:, data, :]
            y0 = x @ h.T
            zf_filter = None

            for si, sigma2 in enumerate(sigma2s):
                y = y0 + np.sqrt(sigma2) * noise_unit
                for det in spec.detectors:
                    if det == "zf":
                        if zf_filter is None:
                            zf_filter = _linear_filter(h_det, 0.0)
                        xhat = (y @ zf_filter.T)[:, data]
                    elif det == "mmse":
                        xhat = (y @ _linear_filter(h_det, sigma2).T)[:, data]
                    else:
                        # the graph covers data variables only (known zeros
                        # are not unknowns)
                        beliefs = _mp_posteriors(
                            h_det[:, data], y, constellation.points, sigma2,
                            spec.mp,
                        )
                        labels = np.argmax(beliefs, axis=2)
                        xhat = constellation.points[labels]
                    rx_bits = demap_symbols(
                        xhat.ravel(), constellation
                    ).reshape(tx_bits.shape)
                    err[(ci, det, si)][bi] = np.count_nonzero(
                        rx_bits != tx_bits
                    )
    return err


def run_sweep(spec: SweepSpec, seed: int = 0, threads: int = 1) -> list:
    """Run a full BER sweep; returns one ``BerPoint`` per (config, detector,
    SNR) combination.

    Frames are processed in blocks of ``frames_per_channel`` sharing one
    channel realization; the standard error is the spread of the per-block
    BERs, which correctly accounts for the within-block correlation.  With
    ``threads > 1`` blocks are partitioned over worker processes; the result
    is identical for any worker count.
    """
    n_blocks = spec.n_frames // spec.frames_per_channel
    fpc = spec.frames_per_channel
    bps = qam_constellation(spec.qam_order).bits_per_symbol

    if threads > 1 and n_blocks > 1:
        import concurrent.futures

        chunks = [list(range(n_blocks))[w::threads] for w in range(threads)]
        chunks = [c for c in chunks if c]
        with concurrent.futures.ProcessPoolExecutor(len(chunks)) as pool:
            partials = list(pool.map(
                _sweep_blocks, [spec] * len(chunks),
                [seed] * len(chunks), chunks,
            ))
        err_blocks = {}
        for key in partials[0]:
            merged = np.zeros(n_blocks)
            for chunk, part in zip(chunks, partials):
                merged[chunk] = part[key]
            err_blocks[key] = merged
    else:
        err_blocks = _sweep_blocks(spec, seed, range(n_blocks))

    points = []
    for ci, cfg in enumerate(spec.configs):
        bits_per_block = int(_data_mask(cfg).sum()) * bps * fpc
        for det in spec.detectors:
            for si, snr in enumerate(spec.snrs_db):
                block_ber = err_blocks[(ci, det, si)] / bits_per_block
                p = float(np.mean(block_ber))
                se = float(np.std(block_ber, ddof=1) / np.sqrt(n_blocks)) \
                    if n_blocks > 1 else 0.0
                points.append(BerPoint(
                    config=cfg.kind.value, M=cfg.M, N=cfg.N,
                    Lcp=cfg.L_cp, Lzs=cfg.L_zs,
                    detector=det, snr_db=float(snr),
                    ber=p, ber_stderr=se,
                    trials=n_blocks * fpc, seed=seed,
                ))
    return points


def pilot_leakage(model: ChannelModel, cfg: FrameConfig) -> float:
    """Doppler leakage of one channel under a configuration: energy of the
    unit-pilot response outside the nominal integer bins."""
    if cfg.kind is PrefixKind.RFCP:
        raise ConfigurationError("use the base FCP config for leakage studies")
    heff = _effective_matrix(model, cfg)
    cir = heff[:, 0].reshape((cfg.M, cfg.N), order="F")
    return doppler_leakage(cir, model)


def run_equivalence(cfg: FrameConfig, n_models: int, seed: int = 0,
                    n_taps: int = 4, k_max: int = 8) -> float:
    """Maximum entrywise difference between the sparse closed-form effective
    channel and the one obtained numerically from the propagation pipeline,
    over random integer-Doppler channels."""
    from .channel import random_model

    worst = 0.0
    for i in range(n_models):
        rng = np.random.default_rng(trial_seed(seed, 7, i))
        guard = cfg.L_zs if cfg.kind is PrefixKind.FZS else cfg.L_cp
        model = random_model(rng, min(n_taps, guard + 1), k_max, cfg)
        a = heff_closed_form(model, cfg).matrix
        b = effective_numeric(model, cfg).matrix
        worst = max(worst, float(np.max(np.abs(a - b))))
    return worst
