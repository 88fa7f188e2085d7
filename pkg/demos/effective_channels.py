"""The same two-tap channel seen through every prefix/suffix configuration.

Reproduces the classic M = N = 2 worked example: tap h0 = 1 at (delay 0,
Doppler 0) and tap h1 = 0.5 at (delay 1, Doppler 1), then prints the
time-domain and delay-Doppler channel matrices of each frame layout.
"""
import numpy as np

from otfslib import (ChannelModel, ChannelTap, FrameConfig, PrefixKind,
                     build_time_channel, expected_grid, heff_closed_form)


def show(name, mat):
    print(f"\n{name}:")
    with np.printoptions(precision=3, suppress=True, linewidth=120):
        print(mat)


configs = [
    FrameConfig(PrefixKind.RCP, 2, 2, L_cp=1),
    FrameConfig(PrefixKind.RZP, 2, 2, L_cp=1),
    FrameConfig(PrefixKind.FCP, 2, 2, L_cp=2),
    FrameConfig(PrefixKind.FZS, 2, 2, L_zs=1),
    FrameConfig(PrefixKind.RFCP, 2, 2, L_cp=2),
]

for cfg in configs:
    model = ChannelModel(
        taps=(ChannelTap(1.0, 0, 0.0), ChannelTap(0.5, 1, 1.0)),
        reference_grid=expected_grid(cfg),
    )
    h = build_time_channel(model, cfg)
    heff = heff_closed_form(model, cfg).matrix
    label = cfg.kind.value
    show(f"{label} time-domain channel ({h.shape[0]}x{h.shape[1]})", h)
    show(f"{label} effective delay-Doppler channel", heff)
    nnz = np.count_nonzero(np.abs(heff) > 1e-12)
    print(f"{label}: {nnz} non-zeros = {nnz / heff.shape[0]:.1f} per row "
          f"(one per tap on data rows)")
