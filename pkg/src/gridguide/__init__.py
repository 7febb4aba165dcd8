"""Buckling-avoiding, time-synchronized deployment guidance for elastic gridshells.

Pipeline: collapse a deployed grid with a discrete-rod simulation, trace the
deployment paths of selected nodes, optimally linearize them over one shared
knot vector, audit the schedule for member compression, and export it as
FEA-ready displacement boundary conditions.
"""

from .errors import (
    ConvergenceError,
    GridGuideError,
    InvalidInputError,
    ProvenanceError,
    SchemaError,
    SingularConfigurationError,
    StalledCollapseError,
)
from .geometry import (
    PlanarArcCurve,
    Polyline3,
    TimedPath,
    involute,
    max_deviation,
    point_segment_distance,
    polyline_hausdorff,
    resample_arclength,
)
from .rod import (
    Anchor,
    CrossSection,
    GridModel,
    Member,
    RodState,
    SlidingJoint,
    anchor_energy,
    bend_energy,
    initial_state,
    joint_energy,
    stretch_energy,
    total_energy,
    twist_energy,
)
from .collapse import (
    CollapseSchedule,
    TraceSet,
    collapse,
    relax,
    reverse_for_deployment,
)
from .reparam import (
    DeviationReport,
    GAConfig,
    LinearizedPathSet,
    ParamVector,
    eval_E_ass,
    eval_E_dev,
    ga_minimize,
    linearize,
    optimize_single,
    optimize_synchronized,
    select_n,
)
from .feasibility import CompressionReport, check_compression
from .io import export_schedule, load_model, load_trace, save_model, save_trace

__version__ = "0.1.0"
