"""Compressive estimation of doubly-selective channels in large-scale MIMO-OFDM."""
__version__ = "0.1.0"

from .bem import (
    BemCoefficients,
    ChannelRealization,
    bem_fit,
    bem_reconstruct,
    cebem_basis,
    dft_matrix,
    freq_channel_matrix,
)
from .channel import (
    add_noise,
    apply_channel_time,
    generate_ds_channel,
    generate_support,
    ofdm_demodulate,
    ofdm_modulate,
)
from .config import SystemConfig
from .exceptions import ParameterError, RecoveryError
from .harness import SweepSpec, run_sweep, run_trial
from .metrics import nmse_db
from .pilots import PilotPlan, assemble_frame, index_sets, make_pilot_plan
from .recovery import (
    DcsChannelEstimator,
    SimultaneousOMP,
    build_measurement_matrix,
    estimate_channel,
    mutual_coherence,
    somp,
)
from .smoothing import LinearSmoother, linear_smooth

__all__ = [
    "BemCoefficients", "ChannelRealization", "bem_fit", "bem_reconstruct", "cebem_basis", "dft_matrix",
    "freq_channel_matrix", "add_noise", "apply_channel_time", "generate_ds_channel", "generate_support",
    "ofdm_demodulate", "ofdm_modulate", "SystemConfig", "ParameterError", "RecoveryError", "SweepSpec",
    "run_sweep", "run_trial", "nmse_db", "PilotPlan", "assemble_frame", "index_sets", "make_pilot_plan",
    "DcsChannelEstimator", "SimultaneousOMP", "build_measurement_matrix", "estimate_channel",
    "mutual_coherence", "somp", "LinearSmoother", "linear_smooth",
]
