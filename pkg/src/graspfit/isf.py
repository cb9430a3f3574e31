"""Multi-resolution surface fitting loop.

Starting from a seed pose, the gripper's contact patches are fitted to
the object surface over a pyramid of sample resolutions. Each level
repeats match / filter / palm-finger solve / transform until the
cumulative displacement of the sampled points stabilizes, then moves to
the next finer level.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .correspondence import adaptive_threshold, filter_pairs, match
from .errors import AllFiltered, SampleAbandoned, SingularSystem
from .geometry import RigidMotion, SpatialIndex, SurfaceCloud
from .gripper import GripperModel
from .ipfo import IpfoProblem, run_ipfo


@dataclass(frozen=True)
class IsfConfig:
    """Pyramid and solver settings.

    Level l (coarsest = levels - 1) downsamples the contact surface by
    2**l, runs at most base_max_iterations // 2**l iterations and uses a
    stationarity window of +/- 2**l * base_tolerance around 1.
    """

    levels: int = 4
    base_max_iterations: int = 200
    base_tolerance: float = 0.008
    normal_weight: float = 0.01
    convergence_delta: float = 1e-5
    outlier_floor: float = 0.005
    outlier_scale: float = 2.5
    outlier_ceiling: float = 0.05
    stationary_displacement: float = 1e-6
    ipfo_max_iterations: int = 100

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("levels must be >= 1")
        if self.base_max_iterations < 2 ** (self.levels - 1):
            raise ValueError("base_max_iterations too small for the pyramid depth")
        if self.base_tolerance <= 0.0:
            raise ValueError("base_tolerance must be positive")
        if self.convergence_delta <= 0.0:
            raise ValueError("convergence_delta must be positive")
        if self.outlier_floor <= 0.0 or self.outlier_scale <= 0.0:
            raise ValueError("outlier threshold parameters must be positive")
        if self.outlier_ceiling < self.outlier_floor:
            raise ValueError("outlier_ceiling must be >= outlier_floor")
        if self.stationary_displacement < 0.0:
            raise ValueError("stationary_displacement must be >= 0")

    def level_iterations(self, level: int) -> int:
        return max(1, self.base_max_iterations // 2 ** level)

    def level_tolerance(self, level: int) -> float:
        return 2 ** level * self.base_tolerance


class TraceRecord(NamedTuple):
    iteration: int
    level: int
    error: float
    width_change: float


@dataclass(frozen=True)
class IsfResult:
    """Outcome of one surface-fitting run.

    ``fitting_error`` is the final error divided by the surviving pair
    count, so values are comparable across sample densities. ``converged``
    reports whether the finest level exited through the stationarity
    window rather than its iteration cap.
    """

    motion: RigidMotion
    width: float
    fitting_error: float
    trace: tuple[TraceRecord, ...]
    converged: bool

    @property
    def error_trace(self) -> np.ndarray:
        return np.array([rec.error for rec in self.trace])


def write_trace_csv(trace, path) -> None:
    """Write trace records as CSV (iteration, level, error, width_change)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "level", "error", "width_change"])
        for rec in trace:
            writer.writerow([rec.iteration, rec.level,
                             repr(rec.error), repr(rec.width_change)])


def run_isf(initial: RigidMotion, width: float, obj: SurfaceCloud,
            gripper: GripperModel, cfg: IsfConfig | None = None,
            *, index: SpatialIndex | None = None) -> IsfResult:
    """Fit the gripper contact surface to the object from a seed pose.

    Runs the resolution pyramid from coarsest to finest. Within a level,
    iterations stop when eta, the ratio of successive cumulative RMS
    displacements of the sampled points since the level start, falls
    inside [1 - eps_l, 1 + eps_l], or at the level's iteration cap; a
    cumulative displacement under ``stationary_displacement`` counts as
    converged outright (the ratio of two sub-micron values carries no
    signal).

    Raises SampleAbandoned when every correspondence is filtered out or
    the palm system degenerates, so the caller can record the seed as a
    failure.
    """
    if cfg is None:
        cfg = IsfConfig()
    if index is None:
        index = SpatialIndex(obj)
    if not gripper.width_min <= width <= gripper.width_max:
        raise ValueError(
            f"start width {width} outside [{gripper.width_min}, {gripper.width_max}]")

    contact = gripper.contact_cloud()
    home_points = contact.points
    home_normals = contact.normals
    labels = contact.labels
    signs = np.where(labels == 1, -1.0, 1.0)
    axis = gripper.opening_axis

    def world_points(points, point_signs, current_width, motion):
        shifted = points + (0.5 * (current_width - gripper.width_home)) \
            * point_signs[:, np.newaxis] * axis
        return motion.transform_points(shifted)

    motion = initial
    current_width = float(width)
    trace: list[TraceRecord] = []
    iteration = 0
    converged = False

    for level in range(cfg.levels - 1, -1, -1):
        stride = 2 ** level
        pts = home_points[::stride]
        nrm = home_normals[::stride]
        lab = labels[::stride]
        sgn = signs[::stride]
        level_start = world_points(pts, sgn, current_width, motion)
        eps = cfg.level_tolerance(level)
        previous_disp = np.inf
        converged = False

        for _ in range(cfg.level_iterations(level)):
            sample = SurfaceCloud(world_points(pts, sgn, current_width, motion),
                                  motion.rotate_vectors(nrm), lab)
            try:
                pairs = match(sample, index)
                kept = filter_pairs(pairs, adaptive_threshold(
                    pairs, cfg.outlier_floor, cfg.outlier_scale,
                    cfg.outlier_ceiling))
                problem = IpfoProblem(
                    pairs=kept,
                    opening_axis=motion.rotate_vectors(axis[np.newaxis, :])[0],
                    width=current_width,
                    width_min=gripper.width_min,
                    width_max=gripper.width_max,
                    normal_weight=cfg.normal_weight,
                    convergence_delta=cfg.convergence_delta,
                    max_iterations=cfg.ipfo_max_iterations)
                solution = run_ipfo(problem)
            except (AllFiltered, SingularSystem) as exc:
                raise SampleAbandoned(
                    f"fitting aborted at level {level}: {exc}") from exc

            motion = solution.motion.compose(motion)
            current_width = solution.width
            iteration += 1
            trace.append(TraceRecord(iteration, level,
                                     solution.error / len(kept),
                                     solution.width_change))

            moved = world_points(pts, sgn, current_width, motion)
            displacement = float(np.sqrt(
                np.mean(np.sum((moved - level_start) ** 2, axis=1))))
            # below the stationarity floor the pose has stopped moving and
            # the displacement ratio is pure floating-point noise
            if displacement <= cfg.stationary_displacement:
                converged = True
                break
            if previous_disp == 0.0:
                eta = np.inf
            else:
                eta = displacement / previous_disp
            previous_disp = displacement
            if 1.0 - eps <= eta <= 1.0 + eps:
                converged = True
                break

    return IsfResult(motion=motion, width=current_width,
                     fitting_error=trace[-1].error, trace=tuple(trace),
                     converged=converged)
