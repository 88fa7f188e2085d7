"""Small BER comparison of the three detectors across frame layouts.

Runs a paired Monte Carlo sweep (same channels, bits and noise for every
configuration) and prints a table. Scale n_frames up for smoother curves;
results are reproducible for a fixed seed.
"""
from otfslib import FrameConfig, PrefixKind, SweepSpec, run_sweep

spec = SweepSpec(
    configs=(
        FrameConfig(PrefixKind.RCP, 16, 16, L_cp=4),
        FrameConfig(PrefixKind.RZP, 16, 16, L_cp=4),
        FrameConfig(PrefixKind.FCP, 16, 16, L_cp=4),
        FrameConfig(PrefixKind.FZS, 16, 16, L_zs=4),
    ),
    snrs_db=(8.0, 12.0),
    detectors=("zf", "mmse", "mp"),
    n_frames=1000,
    frames_per_channel=10,
    n_taps=4,
    k_max=4,
)

points = run_sweep(spec, seed=1)

print(f"{'config':<6} {'detector':<8} {'SNR dB':>6} {'BER':>10} {'+/-':>9}")
for p in points:
    print(f"{p.config:<6} {p.detector:<8} {p.snr_db:>6.1f} "
          f"{p.ber:>10.5f} {p.ber_stderr:>9.5f}")

print("\nnotes: RZP equals RCP bit for bit (same effective channel);")
print("MP <= MMSE <= ZF per configuration; ZF differs across layouts")
print("because their noise-enhancement spectra genuinely differ.")
