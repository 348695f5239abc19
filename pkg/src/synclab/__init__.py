"""synclab: multiplayer motion-coordination platform.

A session server routes 1-D position streams among human and virtual
players according to a configurable directed visibility topology; virtual
players are driven by oscillator models with coupling controllers; an
analysis toolkit computes dyadic and group synchronization metrics; and a
headless harness reproduces every experiment type deterministically.
"""

from .core import (GAME_AREA_DM, GAME_CENTER_DM, MotionKind, MotorSignature,
                   PhaseSeries, Role, Topology, Trajectory, TrialType,
                   ValidationError, complete_topology, neighbors_of,
                   path_topology, resample_cubic, ring_topology,
                   star_topology, validate_topology, wrap_angle)
from .config import TrialConfig, parse_trial_config, serialize_trial_config
from .dynamics import (ControllerKind, ControllerParams, CouplingInput,
                       DynamicsModel, DynamicsParams, SignaturePlayer,
                       VirtualPlayerConfig, VpState, aggregate_neighbors,
                       control_adaptive_follower, control_adaptive_leader,
                       control_pd, inner_dynamics, step_vp)
from .metrics import (DyadReport, GroupReport, analytic_phase, analyze_trial,
                      cluster_phase, dyadic_sync_index, group_sync_series,
                      relative_phase, relative_phase_pdf, rms_position_error)
from .records import TrialRecord, trial_filename
from .session import SessionCore, SessionPhase, SignatureStore, route_frame
from .harness import (CoupledHkbSource, ScriptedPlayer, SignatureSource,
                      SinusoidSource, run_headless, sweep)

__version__ = "0.1.0"
