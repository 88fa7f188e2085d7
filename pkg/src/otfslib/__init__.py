"""OTFS modulation with reduced/full prefix and suffix frame layouts.

Exact time-domain and delay-Doppler channel matrices for five frame
configurations, linear and message-passing detection, capacity and power
accounting, fractional-Doppler leakage tools and a pilot-readable
reduced-full-CP frame format.
"""

__version__ = "0.1.0"

from .channel import (ChannelModel, ChannelTap, NoiseSpec, ReferenceGrid,
                      add_framing, build_time_channel, check_model,
                      expected_grid, model_from_physical, per_sample_phase,
                      pipeline_matrix, propagate, random_model, strip_framing)
from .detect import (Constellation, MpConfig, demap_symbols, map_bits,
                     mmse_detect, mp_detect, qam_constellation, zf_detect)
from .effective import (EffectiveChannel, block_diagonalize,
                        doubly_block_circulant, effective_from_time,
                        effective_numeric, gamma, heff_closed_form,
                        io_response, sfft_diagonalize, static_equalize)
from .errors import (ConfigurationError, DetectionError,
                     FractionalDopplerError, SingularChannelError,
                     SingularMatrixError, StructureError)
from .grid import (FrameConfig, PrefixKind, dft_matrix, isfft, otfs_demodulate,
                   otfs_modulate, sfft)
from .metrics import (EfficiencyReport, ber, capacity, doppler_leakage,
                      efficiency_report, spectral_efficiency_factor, tx_power)
from .rfcp import (PilotSpec, build_rfcp, extend_grid, pilot_cir, pilot_frame,
                   rfcp_pilot_readout, rfcp_receive)
from .sim import (BerPoint, SweepSpec, pilot_leakage, run_equivalence,
                  run_sweep, trial_seed)
