"""Estimator-style wrappers so the fitting algorithms compose with
scikit-learn pipelines and tooling.

Both estimators consume an object cloud as an (n, 3) array of points or
an (n, 6) array of points and normals; bare points get normals estimated
first. Fitted state lives in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .geometry import RigidMotion, SurfaceCloud, estimate_normals
from .gripper import GripperModel
from .isf import IsfConfig, run_isf
from .planner import plan


def _as_cloud(X, normals_k: int) -> SurfaceCloud:
    X = check_array(X, dtype=np.float64, ensure_min_samples=4)
    if X.shape[1] == 3:
        return estimate_normals(X, k=min(normals_k, len(X) - 1))
    if X.shape[1] == 6:
        return SurfaceCloud(X[:, :3], X[:, 3:])
    raise ValueError(f"expected (n, 3) points or (n, 6) points+normals, "
                     f"got shape {X.shape}")


def _resolve_gripper(gripper) -> GripperModel:
    if isinstance(gripper, GripperModel):
        return gripper
    if isinstance(gripper, (str, bytes)) or hasattr(gripper, "__fspath__"):
        from .io import load_gripper
        return load_gripper(gripper)
    raise ValueError("gripper must be a GripperModel or a model file path")


class SurfaceFitter(BaseEstimator):
    """Fit a gripper's contact patches to an object cloud from a seed pose.

    Parameters mirror the fitting-loop configuration; ``initial_motion``
    (default identity) and ``initial_width`` (default: the gripper's home
    width) set the seed state.

    Attributes after fit: ``motion_``, ``width_``, ``error_``,
    ``converged_``, ``result_``.
    """

    def __init__(self, gripper=None, initial_motion=None, initial_width=None,
                 levels=4, max_iterations=200, tolerance=0.008,
                 normal_weight=0.01, convergence_delta=1e-5,
                 outlier_floor=0.005, outlier_scale=2.5, normals_k=10):
        self.gripper = gripper
        self.initial_motion = initial_motion
        self.initial_width = initial_width
        self.levels = levels
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.normal_weight = normal_weight
        self.convergence_delta = convergence_delta
        self.outlier_floor = outlier_floor
        self.outlier_scale = outlier_scale
        self.normals_k = normals_k

    def _config(self) -> IsfConfig:
        return IsfConfig(levels=self.levels,
                         base_max_iterations=self.max_iterations,
                         base_tolerance=self.tolerance,
                         normal_weight=self.normal_weight,
                         convergence_delta=self.convergence_delta,
                         outlier_floor=self.outlier_floor,
                         outlier_scale=self.outlier_scale)

    def fit(self, X, y=None):
        gripper = _resolve_gripper(self.gripper)
        cloud = _as_cloud(X, self.normals_k)
        start = self.initial_motion if self.initial_motion is not None \
            else RigidMotion.identity()
        width = self.initial_width if self.initial_width is not None \
            else gripper.width_home
        result = run_isf(start, width, cloud, gripper, self._config())
        self.result_ = result
        self.motion_ = result.motion
        self.width_ = result.width
        self.error_ = result.fitting_error
        self.converged_ = result.converged
        return self

    def transform(self, X):
        """Carry gripper-frame points to the fitted pose."""
        check_is_fitted(self, "motion_")
        X = check_array(X, dtype=np.float64)
        return self.motion_.transform_points(X)

    def inverse_transform(self, X):
        check_is_fitted(self, "motion_")
        X = check_array(X, dtype=np.float64)
        return self.motion_.inverse().transform_points(X)

    def score(self, X=None, y=None) -> float:
        """Negative fitting error (higher is better)."""
        check_is_fitted(self, "error_")
        return -self.error_


class GraspPlanner(BaseEstimator):
    """Plan collision-free grasps on an object cloud.

    ``fit`` runs the full sampling loop; candidates land in
    ``candidates_`` (collision-free first, then by fitting error) and the
    best collision-free grasp in ``best_``.
    """

    def __init__(self, gripper=None, n_centers=6, n_samples=60,
                 collision_penalty=0.2, penetration=1e-3, levels=4,
                 max_iterations=200, tolerance=0.008, normal_weight=0.01,
                 convergence_delta=1e-5, outlier_floor=0.005,
                 outlier_scale=2.5, batch_size=1, approach_cone=None,
                 normals_k=10, random_state=0):
        self.gripper = gripper
        self.n_centers = n_centers
        self.n_samples = n_samples
        self.collision_penalty = collision_penalty
        self.penetration = penetration
        self.levels = levels
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.normal_weight = normal_weight
        self.convergence_delta = convergence_delta
        self.outlier_floor = outlier_floor
        self.outlier_scale = outlier_scale
        self.batch_size = batch_size
        self.approach_cone = approach_cone
        self.normals_k = normals_k
        self.random_state = random_state

    def fit(self, X, y=None):
        gripper = _resolve_gripper(self.gripper)
        cloud = _as_cloud(X, self.normals_k)
        seed = self.random_state
        if seed is None:
            seed = int(np.random.SeedSequence().generate_state(1)[0])
        cfg = IsfConfig(levels=self.levels,
                        base_max_iterations=self.max_iterations,
                        base_tolerance=self.tolerance,
                        normal_weight=self.normal_weight,
                        convergence_delta=self.convergence_delta,
                        outlier_floor=self.outlier_floor,
                        outlier_scale=self.outlier_scale)
        result = plan(cloud, gripper, n_centers=self.n_centers,
                      n_samples=self.n_samples,
                      collision_penalty=self.collision_penalty, cfg=cfg,
                      seed=seed, penetration=self.penetration,
                      batch_size=self.batch_size,
                      approach_cone=self.approach_cone)
        self.result_ = result
        self.candidates_ = result.candidates
        self.centers_ = result.centers
        self.regret_ = np.array(result.regret)
        self.trial_ = np.array(result.trial)
        self.feasible_ = result.feasible
        self.best_ = result.best
        return self

    def score(self, X=None, y=None) -> float:
        """Negative fitting error of the best collision-free grasp
        (-inf when none was found)."""
        check_is_fitted(self, "candidates_")
        return -self.best_.fitting_error if self.best_ is not None else -np.inf
