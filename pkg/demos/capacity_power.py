"""Capacity and transmit-power overheads of the frame layouts.

The prefix/suffix samples carry no data, so each layout trades capacity
against transmit power differently. Prints both tables over a range of CP
lengths at a fixed SNR.
"""
from otfslib import FrameConfig, PrefixKind, capacity, tx_power

M = N = 32
GAMMA = 3.0  # linear SNR, ~4.77 dB

print(f"capacity (bits/s/Hz) at linear SNR {GAMMA}, M = N = {M}")
print(f"{'Lcp':>4} {'RCP':>8} {'RZP':>8} {'FCP':>8} {'FZS':>8}")
for l_cp in (4, 8, 16, 24):
    row = [
        capacity(FrameConfig(PrefixKind.RCP, M, N, L_cp=l_cp), GAMMA),
        capacity(FrameConfig(PrefixKind.RZP, M, N, L_cp=l_cp), GAMMA),
        capacity(FrameConfig(PrefixKind.FCP, M, N, L_cp=l_cp), GAMMA),
        capacity(FrameConfig(PrefixKind.FZS, M, N, L_zs=l_cp), GAMMA),
    ]
    print(f"{l_cp:>4} " + " ".join(f"{c:>8.4f}" for c in row))

print("\ntransmit energy per frame (unit symbol power)")
print(f"{'Lcp':>4} {'RCP':>8} {'RZP':>8} {'FCP':>8} {'FZS':>8} {'RFCP':>8}")
for l_cp in (4, 8, 16, 24):
    row = [
        tx_power(FrameConfig(PrefixKind.RCP, M, N, L_cp=l_cp)),
        tx_power(FrameConfig(PrefixKind.RZP, M, N, L_cp=l_cp)),
        tx_power(FrameConfig(PrefixKind.FCP, M, N, L_cp=l_cp)),
        tx_power(FrameConfig(PrefixKind.FZS, M, N, L_zs=l_cp)),
        tx_power(FrameConfig(PrefixKind.RFCP, M, N, L_cp=l_cp)),
    ]
    print(f"{l_cp:>4} " + " ".join(f"{p:>8.0f}" for p in row))

print("\nRCP/RZP pay one CP for the whole frame; FCP pays one per subsymbol")
print("block (highest power); zero-padded layouts spend no extra energy but")
print("give up grid cells instead.")
