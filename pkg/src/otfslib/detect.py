"""Symbol detection in the delay-Doppler domain: ZF, MMSE and message
passing, plus Gray-coded QAM mapping."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DetectionError, SingularMatrixError

_RANK_TOL = 1e-10


@dataclass(frozen=True)
class Constellation:
    """Unit-energy symbol set with Gray bit labeling.

    ``points[v]`` is the symbol whose bit label is the integer ``v`` (first
    half of the bits selects the in-phase level, second half the quadrature
    level).
    """

    points: np.ndarray
    bits_per_symbol: int

    @property
    def order(self) -> int:
        return self.points.size


def qam_constellation(order: int = 4) -> Constellation:
    """Gray-coded square QAM normalized to unit average symbol energy."""
    bps = int(np.log2(order))
    if 2 ** bps != order or bps % 2 != 0:
        raise ConfigurationError("QAM order must be an even power of two")
    half = bps // 2
    k = 2 ** half
    levels = 2.0 * np.arange(k) - (k - 1)
    # pam[g] = spatial level whose Gray label is g
    g = np.arange(k)
    pam = np.empty(k)
    pam[g ^ (g >> 1)] = levels
    labels = np.arange(order)
    i_bits = labels >> half
    q_bits = labels & (k - 1)
    points = pam[i_bits] + 1j * pam[q_bits]
    points /= np.sqrt(np.mean(np.abs(points) ** 2))
    points.setflags(write=False)
    return Constellation(points=points, bits_per_symbol=bps)


def map_bits(bits, constellation: Constellation) -> np.ndarray:
    """Map a bit array to symbols (most significant bit of each label first)."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    bps = constellation.bits_per_symbol
    if bits.size % bps != 0:
        raise ConfigurationError(
            f"bit count {bits.size} is not a multiple of {bps}"
        )
    weights = 1 << np.arange(bps - 1, -1, -1)
    labels = bits.reshape(-1, bps) @ weights
    return constellation.points[labels]


def demap_symbols(symbols, constellation: Constellation) -> np.ndarray:
    """Minimum-distance slicing back to bits (inverse of map_bits for clean
    symbols)."""
    symbols = np.asarray(symbols, dtype=complex).ravel()
    labels = np.argmin(
        np.abs(symbols[:, None] - constellation.points[None, :]) ** 2, axis=1
    )
    bps = constellation.bits_per_symbol
    shifts = np.arange(bps - 1, -1, -1)
    return ((labels[:, None] >> shifts[None, :]) & 1).ravel()


def _as_matrix(h) -> np.ndarray:
    if hasattr(h, "matrix"):
        h = h.matrix
    return np.asarray(h, dtype=complex)


def zf_detect(h_eff, y: np.ndarray) -> np.ndarray:
    """Zero-forcing estimate ``H^H (H H^H)^-1 y`` (minimum-norm least
    squares).  Raises ``SingularMatrixError`` for rank-deficient channels."""
    h = _as_matrix(h_eff)
    y = np.asarray(y, dtype=complex).ravel()
    sv = np.linalg.svd(h, compute_uv=False)
    if sv[-1] < _RANK_TOL * max(sv[0], 1.0):
        raise SingularMatrixError("effective channel is rank deficient")
    gram = h @ h.conj().T
    return h.conj().T @ np.linalg.solve(gram, y)


def mmse_detect(h_eff, y: np.ndarray, sigma2: float) -> np.ndarray:
    """MMSE estimate ``H^H (H H^H + sigma^2 I)^-1 y``."""
    if sigma2 <= 0:
        raise ConfigurationError("sigma2 must be positive")
    h = _as_matrix(h_eff)
    y = np.asarray(y, dtype=complex).ravel()
    gram = h @ h.conj().T + sigma2 * np.eye(h.shape[0])
    return h.conj().T @ np.linalg.solve(gram, y)


@dataclass(frozen=True)
class MpConfig:
    """Message-passing settings: Gaussian interference approximation with
    damped probability updates."""

    max_iterations: int = 30
    damping: float = 0.6
    convergence_tol: float = 1e-4

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be positive")
        if not (0.0 < self.damping <= 1.0):
            raise ConfigurationError("damping must be in (0, 1]")
        if self.convergence_tol <= 0:
            raise ConfigurationError("convergence_tol must be positive")


class _MpGraph:
    """Edge lists and segment-sum machinery for the sparse factor graph."""

    def __init__(self, h: np.ndarray):
        rows, cols = np.nonzero(np.abs(h) > 0)
        if rows.size == 0:
            raise ConfigurationError("channel matrix has no non-zero entries")
        self.rows, self.cols = rows, cols
        self.hv = h[rows, cols]
        self.n_rows, self.n_cols = h.shape
        self.r_unique, self.r_start = np.unique(rows, return_index=True)
        order = np.argsort(cols, kind="stable")
        self.c_order = order
        self.c_unique, self.c_start = np.unique(cols[order], return_index=True)

    def sum_rows(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros((v.shape[0], self.n_rows) + v.shape[2:], dtype=v.dtype)
        out[:, self.r_unique] = np.add.reduceat(v, self.r_start, axis=1)
        return out

    def sum_cols(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros((v.shape[0], self.n_cols) + v.shape[2:], dtype=v.dtype)
        out[:, self.c_unique] = np.add.reduceat(
            v[:, self.c_order], self.c_start, axis=1
        )
        return out


def _mp_posteriors(h: np.ndarray, ys: np.ndarray, points: np.ndarray,
                   noise_var: float, cfg: MpConfig) -> np.ndarray:
    """Symbol posteriors, batched over frames sharing the channel.

    ``ys`` has shape (batch, n_rows); returns (batch, n_cols, order).
    Messages are tracked in single precision, which is ample for symbol
    posteriors and roughly halves the memory traffic of the hot loop.
    """
    graph = _MpGraph(h)
    b = ys.shape[0]
    e = graph.hv.size
    q = points.size
    hv = graph.hv.astype(np.complex64)
    pts = points.astype(np.complex64)
    abs2_h = (hv.real ** 2 + hv.imag ** 2)
    es = (pts.real ** 2 + pts.imag ** 2)
    hp = hv[:, None] * pts[None, :]                    # (e, q)
    probs = np.full((b, e, q), 1.0 / q, dtype=np.float32)
    y_edge = ys[:, graph.rows].astype(np.complex64)
    nv = np.float32(noise_var)
    col_llh = None
    for iteration in range(cfg.max_iterations):
        mean_sym = probs @ pts                         # (b, e)
        pow_sym = probs @ es
        var_sym = pow_sym - (mean_sym.real ** 2 + mean_sym.imag ** 2)
        row_mean = graph.sum_rows(hv * mean_sym)
        row_var = graph.sum_rows(abs2_h * var_sym)
        c = y_edge - (row_mean[:, graph.rows] - hv * mean_sym)
        s2 = row_var[:, graph.rows] - abs2_h * var_sym + nv
        resid = c[..., None] - hp[None, :, :]
        xi = -(resid.real ** 2 + resid.imag ** 2) / s2[..., None]
        xi -= xi.max(axis=2, keepdims=True)
        col_llh = graph.sum_cols(xi)                   # (b, n_cols, q)
        msg = col_llh[:, graph.cols] - xi
        msg -= msg.max(axis=2, keepdims=True)
        new = np.exp(msg)
        new /= new.sum(axis=2, keepdims=True)
        if not np.isfinite(new).all():
            raise DetectionError(
                "non-finite message probabilities", iteration=iteration
            )
        new *= cfg.damping
        new += (1.0 - cfg.damping) * probs
        delta = np.max(np.abs(new - probs))
        probs = new
        if delta < cfg.convergence_tol:
            break
    shifted = col_llh - col_llh.max(axis=2, keepdims=True)
    beliefs = np.exp(shifted)
    beliefs /= beliefs.sum(axis=2, keepdims=True)
    return beliefs.astype(np.float64)


def mp_detect(h_eff, y: np.ndarray, constellation: Constellation,
              noise_var: float, config: MpConfig | None = None) -> np.ndarray:
    """Message-passing detection on the sparse effective channel.

    Interference at each observation node is treated as Gaussian; returns
    hard symbol decisions after convergence or ``max_iterations``.
    """
    if config is None:
        config = MpConfig()
    h = _as_matrix(h_eff)
    y = np.asarray(y, dtype=complex).ravel()
    beliefs = _mp_posteriors(h, y[None, :], constellation.points,
                             float(noise_var), config)
    labels = np.argmax(beliefs[0], axis=1)
    return constellation.points[labels]
