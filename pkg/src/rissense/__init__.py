"""RIS-aided sensing toolkit for structural health monitoring.

Geometric channel modeling, closed-form Fisher information and position
error bounds, spatiotemporal cooperation, signal-level estimation, and
deformation detection, plus runners for the headline parameter sweeps.
"""

__version__ = "0.1.0"

from .channel import (
    ChannelParams,
    DifferentialSnapshot,
    RisPhaseProfile,
    Waveform,
    beta_factor,
    conjugate_beamformer,
    differential_signal,
    gamma_factor,
    optimal_phase_pair,
    profile_delta,
    received_snr,
    ris_channel,
)
from .constants import SPEED_OF_LIGHT
from .cooperation import (
    CooperationPlan,
    crlb_sandwich,
    efim_network,
    efim_plan,
    efim_time,
    efim_with_self_error,
)
from .detection import (
    DetectionConfig,
    DetectionOutcome,
    StructureState,
    calibrate_threshold,
    detection_probability,
    posterior,
    wald_statistic,
)
from .estimation import (
    EstimationResult,
    GridSpec,
    ml_single_path,
    position_from_measurements,
    rmse_sweep,
)
from .fisher import (
    InfoEllipsoid,
    SingularFimError,
    crlb,
    efim_position,
    fim_channel_closed_form,
    fim_channel_numeric,
    peb,
    position_fim,
)
from .geometry import (
    Orientation,
    PathGeometry,
    Pose,
    UpaGeometry,
    position_jacobian,
    rotation_matrix,
    solve_path_geometry,
    steering_vector,
    to_local_frame,
    wave_vector,
)
from .scenario import ConfigError, ReceiverNode, Scenario, link_state, load_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
