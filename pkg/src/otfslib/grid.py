"""Frame geometry and the unitary transforms between the OTFS signal domains.

Conventions used throughout the library:

* delay-Doppler grids are ``M x N`` complex arrays, delay index ``l`` down the
  rows, Doppler index ``k`` across the columns;
* vectorization is column-major (delay fastest), so vector index ``= k*M + l``;
* DFT matrices are unitary with kernel ``exp(-j*2*pi*a*b/n) / sqrt(n)``.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


class PrefixKind(enum.Enum):
    """Prefix/suffix layout of an OTFS frame."""

    RCP = "RCP"    # one cyclic prefix in front of the whole frame
    RZP = "RZP"    # zero padding after the whole frame, overlap-add at rx
    FCP = "FCP"    # one cyclic prefix per sub-symbol block, OFDM style
    FZS = "FZS"    # zero suffix carried inside the delay grid
    RFCP = "RFCP"  # FCP frame with an additional outer reduced CP


@dataclass(frozen=True)
class FrameConfig:
    """Frame dimensions plus the prefix/suffix layout.

    ``L_cp`` is the cyclic-prefix length in samples (used by RCP, RZP, FCP and
    RFCP), ``L_zs`` the zero-suffix length in delay bins (used by FZS).
    """

    kind: PrefixKind
    M: int
    N: int
    L_cp: int = 0
    L_zs: int = 0

    def __post_init__(self):
        if self.M < 1 or self.N < 1:
            raise ConfigurationError("M and N must be positive integers")
        if self.L_cp < 0 or self.L_zs < 0:
            raise ConfigurationError("prefix/suffix lengths must be non-negative")
        if self.kind is PrefixKind.FZS and self.L_zs >= self.M:
            raise ConfigurationError("FZS requires L_zs < M")

    @property
    def grid_size(self) -> int:
        """Number of delay-Doppler bins in the base frame."""
        return self.M * self.N

    @property
    def doppler_grid_len(self) -> int:
        """Number of samples that integer Doppler bins divide.

        ``z_i = exp(j*2*pi*k_i / doppler_grid_len)`` is the per-sample phase of
        a tap with Doppler bin ``k_i``.  Full-prefix frames are longer, so
        their Doppler bins are finer.
        """
        if self.kind in (PrefixKind.FCP, PrefixKind.RFCP):
            return (self.M + self.L_cp) * self.N
        return self.M * self.N

    @property
    def framed_len(self) -> int:
        """Number of time samples actually transmitted."""
        if self.kind in (PrefixKind.RCP, PrefixKind.RZP):
            return self.M * self.N + self.L_cp
        if self.kind is PrefixKind.FCP:
            return (self.M + self.L_cp) * self.N
        if self.kind is PrefixKind.RFCP:
            return (self.M + self.L_cp) * self.N + self.L_cp
        return self.M * self.N  # FZS: the zeros live inside the grid

    @property
    def phase_offset(self) -> int:
        """Sample index of the first payload sample in the framed signal.

        The Doppler phase ramp is referenced to this sample so that the
        framed/stripped pipeline matches the unframed channel matrices.
        """
        if self.kind in (PrefixKind.RCP, PrefixKind.RFCP):
            return self.L_cp
        return 0


@functools.lru_cache(maxsize=None)
def _dft_cached(n: int) -> np.ndarray:
    a = np.arange(n)
    f = np.exp(-2j * np.pi * np.outer(a, a) / n) / np.sqrt(n)
    f.setflags(write=False)
    return f


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n x n DFT matrix, entry (a, b) = exp(-j*2*pi*a*b/n)/sqrt(n)."""
    if n < 1:
        raise ConfigurationError("DFT size must be a positive integer")
    return _dft_cached(n)


def _check_grid(x, name="grid"):
    x = np.asarray(x, dtype=complex)
    if x.ndim != 2:
        raise ConfigurationError(f"{name} must be a 2-D array, got shape {x.shape}")
    return x


def isfft(x_dd: np.ndarray) -> np.ndarray:
    """Inverse SFFT: delay-Doppler grid -> time-frequency grid.

    Returns ``F_M @ X_DD @ F_N^H`` with rows indexing frequency and columns
    indexing time.  Unitary, so frame energy is preserved.
    """
    x_dd = _check_grid(x_dd, "X_DD")
    m, n = x_dd.shape
    return dft_matrix(m) @ x_dd @ dft_matrix(n).conj().T


def sfft(y_tf: np.ndarray) -> np.ndarray:
    """SFFT: time-frequency grid -> delay-Doppler grid (inverse of isfft)."""
    y_tf = _check_grid(y_tf, "Y_TF")
    m, n = y_tf.shape
    return dft_matrix(m).conj().T @ y_tf @ dft_matrix(n)


def otfs_modulate(x_dd: np.ndarray) -> np.ndarray:
    """Map a delay-Doppler grid to its time-domain samples (no framing).

    With rectangular pulses the Heisenberg transform collapses to
    ``s = (F_N^H kron I_M) vec(X_DD)``, i.e. column-wise stacking of
    ``X_DD @ F_N^H``.
    """
    x_dd = _check_grid(x_dd, "X_DD")
    n = x_dd.shape[1]
    s = x_dd @ dft_matrix(n).conj().T
    return s.ravel(order="F")


def otfs_demodulate(r: np.ndarray, m: int, n: int) -> np.ndarray:
    """Map ``m*n`` received time samples (prefixes already stripped) to an
    ``m x n`` delay-Doppler grid via ``(F_N kron I_M) r``."""
    r = np.asarray(r, dtype=complex).ravel()
    if r.size != m * n:
        raise ConfigurationError(
            f"expected {m * n} samples for an {m}x{n} grid, got {r.size}"
        )
    return r.reshape((m, n), order="F") @ dft_matrix(n)
