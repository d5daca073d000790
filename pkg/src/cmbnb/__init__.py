"""Globally optimal contrast maximisation for rotational motion from event streams."""

from .bounds import (
    DiscSet,
    DominantColumns,
    Intersections,
    SearchCube,
    UncertaintyDisc,
    contrast_upper,
    dominant_columns,
    intersections,
    iqp_exact,
    mean_lower_continuous,
    mean_lower_discrete,
    pixel_upper_continuous,
    pixel_upper_discrete,
    project_cone,
    project_cones,
    rotation_uncertainty,
    sos_upper_continuous,
    sos_upper_discrete,
)
from .events import (
    CameraIntrinsics,
    Event,
    EventFormatError,
    EventWindow,
    GroundTruthTrack,
    parse_events,
    random_scene,
    split_windows,
    synthesize,
)
from .image import EventImage, KernelSpec, contrast, render_continuous, render_discrete, reward
from .solvers import SolveResult, SolverConfig, error_metrics, grid_oracle, solve_bnb, solve_local
from .warp import BehindCameraError, exp_map, warp_event, warp_ray

__version__ = "0.1.0"
