"""Walk through the signal domains of an OTFS frame.

Places QAM symbols on a delay-Doppler grid, moves them to time-frequency and
to time samples, and shows that every hop is unitary and invertible.
"""
import numpy as np

from otfslib import (isfft, map_bits, otfs_demodulate, otfs_modulate,
                     qam_constellation, sfft)

M, N = 8, 4  # delay bins x Doppler bins

rng = np.random.default_rng(0)
const = qam_constellation(4)
bits = rng.integers(0, 2, size=M * N * const.bits_per_symbol)
x_dd = map_bits(bits, const).reshape((M, N), order="F")

print(f"delay-Doppler grid: {x_dd.shape}, "
      f"energy {np.sum(np.abs(x_dd) ** 2):.3f}")

x_tf = isfft(x_dd)
print(f"time-frequency grid: {x_tf.shape}, "
      f"energy {np.sum(np.abs(x_tf) ** 2):.3f} (unitary, unchanged)")

s = otfs_modulate(x_dd)
print(f"time samples: {s.shape[0]}, energy {np.sum(np.abs(s) ** 2):.3f}")

# both inverse paths lead back to the same grid
back_via_tf = sfft(x_tf)
back_via_time = otfs_demodulate(s, M, N)
print(f"round trip via TF grid:   max error "
      f"{np.max(np.abs(back_via_tf - x_dd)):.2e}")
print(f"round trip via time:      max error "
      f"{np.max(np.abs(back_via_time - x_dd)):.2e}")
