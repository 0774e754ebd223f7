"""Rate-adaptive multi-stage channel estimation for single-path mmWave MIMO links."""

from .array_channel import (AngleGrid, ChannelRealization, NoiseModel, channel_matrix,
                            physical_to_spatial, sample_channel, steering_vector)
from .codebook import (BeamVector, Codebook, StagePlan, SubRange, build_codebook, design_beam,
                       enumerate_subranges)
from .engine import BACKEND
from .ml_estimator import (Hypothesis, PosteriorDistribution, conditional_covariance,
                           estimate_alpha, indicator_vector, log_likelihood, map_estimate,
                           posterior)
from .schemes import (EstimationOutcome, RaceConfig, SwitchTable, calibrate_switch_table,
                      run_fixed, run_race, select_scheme)
from .sounding import (MeasurementSlot, SoundingLog, StageContext, append_measurement,
                       initial_scan, measure)

__version__ = "0.1.0"
