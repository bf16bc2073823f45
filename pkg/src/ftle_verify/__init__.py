"""ftle_verify: dynamical-systems verification of deterministic policies.

A policy coupled with its environment is a discrete-time autonomous
system. This package computes its finite-time Lyapunov exponent fields,
approximates attractors via final-state density maps, scores safety and
robustness with the MBR / ASAS / TASAS metrics, and derives local
(delta, epsilon) stability certificates from the exponent field.
"""

from .attractors import (
    DensityMap,
    Peak,
    TrajectoryEnsemble,
    detect_local_peaks,
    final_state_histogram,
    simulate_ensemble,
)
from .certificate import (
    Box,
    Disc,
    DivergenceValidation,
    StabilityCertificate,
    certify_delta,
    make_certificate,
    region_max_ftle,
    validate_divergence_bound,
)
from .continuous import (
    AffineEnv,
    AnalysisSlice,
    MountainCar,
    MountainCarParams,
    Pendulum,
    PendulumParams,
    SlicedSystem,
    mountain_car_step,
    pendulum_step,
    slice_to_grid,
    wrap_angle,
)
from .dynamics import (
    ContinuousSystem,
    FlowMapField,
    GridSystem,
    compute_flow_map_field,
    iterate,
    step,
)
from .errors import (
    ConfigError,
    DegenerateStencilError,
    FtleVerifyError,
    InvalidStateError,
    InvariantError,
    LayoutError,
    RegionError,
    ShapeMismatchError,
)
from .ftle import (
    FtleField,
    cauchy_green,
    compute_ftle_field,
    finite_difference_jacobian,
    ftle_value,
    max_eigenvalue_symmetric,
)
from .gridworld import (
    ACTION_NAMES,
    ACTIONS,
    GridWorld,
    RewardSpec,
    build_scattered_blocks,
    build_simple_wall,
    build_u_shape_trap,
    bundled_layout,
    format_layout,
    load_layout_file,
    parse_layout,
)
from .heatmap import HeatmapImage, render_heatmap, write_pnm
from .metrics import (
    AsasResult,
    MetricReport,
    PeakStats,
    TasasResult,
    asas,
    build_metric_report,
    escape_ratio,
    mbr,
    obstacle_boundary,
    tasas,
)
from .policies import (
    ConstantPolicy,
    EnergyPumpPolicy,
    GreedyTowardGoalPolicy,
    MlpPolicy,
    MlpPolicyWeights,
    QLearningConfig,
    ShortestPathPolicy,
    TabularPolicy,
    TrapCyclePolicy,
    TrainingRun,
    evaluate_mlp,
    greedy_action,
    make_scripted,
    train_tabular_q,
)

__version__ = "0.1.0"
