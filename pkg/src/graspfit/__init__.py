"""Grasp planning for customized grippers by iterative surface fitting.

The package fits a gripper's finger contact patches to an object point
cloud (palm pose plus jaw width) and searches for collision-free grasp
poses with regret-guided sampling over k-means seed regions.
"""

from .correspondence import (CorrespondencePair, CorrespondenceSet,
                             adaptive_threshold, filter_pairs, match)
from .errors import (AllFiltered, DegenerateNeighborhood, EmptyResult,
                     GraspFitError, IndeterminateWidth,
                     IndeterminateWidthWarning, NoFeasibleGrasp, ParseError,
                     SampleAbandoned, SingularSystem, ValidationError)
from .estimators import GraspPlanner, SurfaceFitter
from .geometry import (RigidMotion, SpatialIndex, SurfaceCloud, apply_motion,
                       downsample, estimate_normals, exp_map, random_rotation)
from .gripper import CollisionBox, GripperModel, collide
from .ipfo import (IpfoProblem, IpfoSolution, finger_optimum, fitting_error,
                   palm_increment, run_ipfo, solve_finger, solve_palm)
from .isf import IsfConfig, IsfResult, TraceRecord, run_isf, write_trace_csv
from .planner import (GraspCandidate, PlanResult, SampleRecord, kmeans_centers,
                      plan, replay_regret, write_plan_log_csv)

__version__ = "0.1.0"

__all__ = [
    "AllFiltered", "CollisionBox", "CorrespondencePair", "CorrespondenceSet",
    "DegenerateNeighborhood", "EmptyResult", "GraspCandidate", "GraspFitError",
    "GraspPlanner", "GripperModel", "IndeterminateWidth",
    "IndeterminateWidthWarning", "IpfoProblem", "IpfoSolution", "IsfConfig",
    "IsfResult", "NoFeasibleGrasp", "ParseError", "PlanResult", "RigidMotion",
    "SampleAbandoned", "SampleRecord", "SingularSystem", "SpatialIndex",
    "SurfaceCloud", "SurfaceFitter", "TraceRecord", "ValidationError",
    "adaptive_threshold", "apply_motion", "collide", "downsample",
    "estimate_normals", "exp_map", "filter_pairs", "finger_optimum",
    "fitting_error", "kmeans_centers", "match", "palm_increment", "plan",
    "random_rotation", "replay_regret", "run_ipfo", "run_isf", "solve_finger",
    "solve_palm", "write_plan_log_csv", "write_trace_csv",
]
