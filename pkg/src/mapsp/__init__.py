"""Multi-group adjustable phase-shift pilots for massive MIMO-OFDM channel
acquisition: pilot construction, interference analysis, MMSE estimation and
prediction, pilot scheduling and Monte Carlo sweeps."""

from .transforms import SystemDims, ad_to_sf, sf_to_ad
from .zc import (Adpcm, BasicPilot, PilotAssignment, adpcm_brute, adpcm_fast,
                 adpcm_zc_closed_form, basic_adpcm, interference_score, zc_sequence)
from .channel import (ArgumentModel, ChannelParams, bessel_j0, evolve_channel,
                      generate_power_matrix, realize_channel, tcf)
from .uplink import UplinkScene, UtLink, ls_decorrelate, synthesize_received
from .estimation import (InterferenceProfile, aggregate_interference_power,
                         mmse_error_lower_bound, mmse_error_theoretical, mmse_estimate,
                         predict_channel, prediction_error_theoretical, preprocess)
from .scheduler import schedule, schedule_greedy_exhaustive
from .harness import ExperimentConfig, emit_csv, run_mse_sweep, run_prediction_sweep

__version__ = "0.1.0"

__all__ = [
    "SystemDims", "ad_to_sf", "sf_to_ad",
    "Adpcm", "BasicPilot", "PilotAssignment", "adpcm_brute", "adpcm_fast",
    "adpcm_zc_closed_form", "basic_adpcm", "interference_score", "zc_sequence",
    "ArgumentModel", "ChannelParams", "bessel_j0", "evolve_channel",
    "generate_power_matrix", "realize_channel", "tcf",
    "UplinkScene", "UtLink", "ls_decorrelate", "synthesize_received",
    "InterferenceProfile", "aggregate_interference_power", "mmse_error_lower_bound",
    "mmse_error_theoretical", "mmse_estimate", "predict_channel",
    "prediction_error_theoretical", "preprocess",
    "schedule", "schedule_greedy_exhaustive",
    "ExperimentConfig", "emit_csv", "run_mse_sweep", "run_prediction_sweep",
]
