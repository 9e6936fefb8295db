"""Active probing and influence planning for driver interaction simulation."""

__version__ = "0.1.0"

from .model import (
    AllZeroWeights,
    Belief,
    Control,
    GridKind,
    HypothesisGrid,
    IndexOutOfRange,
    JointState,
    VehicleState,
    grid_value,
    headway_grid,
    normalize,
    velocity_grid,
)
from .dynamics import DynamicsConfig, IdmParams, NonPositiveGap, idm_accel, joint_step
from .divergence import GridMismatch, jsd, kl_to_mixture
from .inference import (
    EstimateMode,
    HumanUtilityModel,
    belief_update,
    boltzmann_likelihood,
    estimate_phi,
    human_utility,
)
from .planning import (
    BACKEND,
    HorizonTooLarge,
    PlanObjective,
    PlanResult,
    PlannerConfig,
    TrackingObjective,
    best_response,
    influence_plan,
    probe_plan,
)
from .scenario import (
    CollisionDetected,
    CutoffNotMet,
    Mode,
    NoBackgroundVehicles,
    Phase,
    RunLog,
    ScenarioConfig,
    ScenarioKind,
    VehicleClass,
    default_config,
    human_lane_change_check,
    influence_objectives,
    metric_cumulative_abs_control,
    metric_velocity_deviation,
    run_scenario,
    widest_gap,
)
