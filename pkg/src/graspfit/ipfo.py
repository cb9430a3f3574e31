"""Alternating closed-form solver for palm pose and jaw width.

Given a fixed set of correspondences, the palm step solves an augmented
point-to-plane least-squares system for a rigid motion increment, and the
finger step solves a clamped one-dimensional quadratic program for the
jaw-width change. The two steps alternate until the combined fitting
error stops decreasing.

The fitting error is

    E(R, t, dd) = sum_i ((pbar_i - q_i) . nq_i)^2
                  + alpha^2 * sum_i ((R np_i) . nq_i + 1)^2

with pbar_i = R p_i + t + 0.5 * (-1)^j * R v * dd for a point on finger j.
The point term measures distance to the target tangent planes; the normal
term drives the gripper's inward normals anti-parallel to the object's
outward normals.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .correspondence import CorrespondenceSet
from .errors import IndeterminateWidth, IndeterminateWidthWarning, SingularSystem
from .geometry import RigidMotion

_CONDITION_LIMIT = 1e12
_WIDTH_SENSITIVITY_FLOOR = 1e-15


@dataclass(frozen=True)
class IpfoProblem:
    """One palm-finger optimization instance over fixed correspondences.

    ``width`` is the jaw width at which the source points were sampled;
    width changes are expressed relative to it. ``opening_axis`` points
    from finger 1 to finger 2 in the same frame as the source points.
    """

    pairs: CorrespondenceSet
    opening_axis: np.ndarray
    width: float
    width_min: float
    width_max: float
    normal_weight: float = 0.01
    convergence_delta: float = 1e-5
    max_iterations: int = 100

    def __post_init__(self):
        if len(self.pairs) == 0:
            raise ValueError("problem needs at least one correspondence pair")
        if not np.isin(self.pairs.finger, (1, 2)).all():
            raise ValueError("finger labels must be 1 or 2")
        v = np.asarray(self.opening_axis, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise ValueError("opening axis must be nonzero")
        v = v / norm
        v.flags.writeable = False
        object.__setattr__(self, "opening_axis", v)
        if not self.width_min <= self.width <= self.width_max:
            raise ValueError(
                f"width {self.width} outside [{self.width_min}, {self.width_max}]")
        if self.normal_weight < 0.0:
            raise ValueError("normal weight must be >= 0")
        if self.convergence_delta <= 0.0:
            raise ValueError("convergence delta must be positive")

    def finger_signs(self) -> np.ndarray:
        """(-1)^j per pair: -1 on finger 1, +1 on finger 2."""
        return np.where(self.pairs.finger == 1, -1.0, 1.0)


@dataclass(frozen=True)
class IpfoSolution:
    """Solver outcome. ``error_trace`` holds the error at the start and
    after every full palm+finger pass; its last entry equals ``error``."""

    motion: RigidMotion
    width: float
    width_change: float
    error: float
    iterations: int
    error_trace: tuple = ()
    width_indeterminate: bool = False


def fitting_error(prob: IpfoProblem, m: RigidMotion, width_change: float) -> float:
    """Combined point-to-plane and normal-alignment error at (m, width_change)."""
    c = prob.pairs
    shifted = c.source_points + (0.5 * width_change) * np.outer(
        prob.finger_signs(), prob.opening_axis)
    moved = m.transform_points(shifted)
    point_res = np.einsum("ij,ij->i", moved - c.target_points, c.target_normals)
    normal_res = np.einsum(
        "ij,ij->i", m.rotate_vectors(c.source_normals), c.target_normals) + 1.0
    alpha = prob.normal_weight
    return float(point_res @ point_res + alpha * alpha * (normal_res @ normal_res))


def _palm_system(prob: IpfoProblem, width_change: float, base: RigidMotion):
    """Rows of the linearized palm least-squares problem around ``base``.

    Point rows: a = [(p x nq), nq], b = (q - p) . nq with p the
    width-shifted source point carried to the current pose. Normal rows:
    a = [alpha * (np x nq), 0], b = -alpha * (np . nq) - alpha.
    """
    c = prob.pairs
    shifted = c.source_points + (0.5 * width_change) * np.outer(
        prob.finger_signs(), prob.opening_axis)
    p = base.transform_points(shifted)
    np_cur = base.rotate_vectors(c.source_normals)
    nq = c.target_normals

    m = len(c)
    a = np.empty((2 * m, 6))
    b = np.empty(2 * m)
    a[:m, :3] = np.cross(p, nq)
    a[:m, 3:] = nq
    b[:m] = np.einsum("ij,ij->i", c.target_points - p, nq)
    alpha = prob.normal_weight
    a[m:, :3] = alpha * np.cross(np_cur, nq)
    a[m:, 3:] = 0.0
    b[m:] = -alpha * np.einsum("ij,ij->i", np_cur, nq) - alpha
    return a, b


def palm_increment(prob: IpfoProblem, width_change: float = 0.0,
                   base: RigidMotion | None = None) -> np.ndarray:
    """Solve the linearized palm problem; returns x = [r, t] (6 values).

    Solves the normal equations through a symmetric eigendecomposition.
    Near-null directions (benign rank deficiency, e.g. a flat target that
    leaves in-plane sliding unobservable) are truncated, giving the
    minimum-norm solution. Raises SingularSystem when fewer than three
    directions are observable, which is hopeless geometry such as
    collinear points with parallel normals.
    """
    if base is None:
        base = RigidMotion.identity()
    a, b = _palm_system(prob, width_change, base)
    h = a.T @ a
    g = a.T @ b
    evals, evecs = np.linalg.eigh(h)
    largest = evals[-1]
    if largest <= 0.0:
        raise SingularSystem("palm system has no observable direction")
    keep = evals > largest / _CONDITION_LIMIT
    if keep.sum() < 3:
        raise SingularSystem(
            f"palm system rank {int(keep.sum())} < 3 (degenerate geometry)")
    coeff = (evecs.T @ g)[keep] / evals[keep]
    return evecs[:, keep] @ coeff


def solve_palm(prob: IpfoProblem, width_change: float = 0.0,
               base: RigidMotion | None = None) -> RigidMotion:
    """Palm motion increment minimizing the linearized error at fixed width.

    The axis-angle part of the solution is realized exactly through the
    exponential map, so the result always satisfies the rotation
    invariants.
    """
    x = palm_increment(prob, width_change, base)
    return RigidMotion.from_increment(x[:3], x[3:])


def _finger_coefficients(prob: IpfoProblem, m: RigidMotion):
    """Per-pair (a, b) of the width quadratic sum((b - a*dd)^2)."""
    c = prob.pairs
    axis = m.rotate_vectors(prob.opening_axis[np.newaxis, :])[0]
    a = -0.5 * prob.finger_signs() * (c.target_normals @ axis)
    b = np.einsum("ij,ij->i",
                  m.transform_points(c.source_points) - c.target_points,
                  c.target_normals)
    return a, b


def finger_optimum(prob: IpfoProblem, m: RigidMotion) -> float:
    """Unconstrained width change minimizing the point error at fixed pose.

    Raises IndeterminateWidth when the opening axis is orthogonal to every
    target normal, in which case width does not affect the cost.
    """
    a, b = _finger_coefficients(prob, m)
    denom = float(a @ a)
    if denom < _WIDTH_SENSITIVITY_FLOOR:
        raise IndeterminateWidth(
            f"width sensitivity {denom:.3g} below {_WIDTH_SENSITIVITY_FLOOR:.0e}")
    return float(a @ b) / denom


def _clamp_width(prob: IpfoProblem, optimum: float) -> float:
    """Width reached by applying ``optimum``, clamped to the jaw limits.

    Clamping is done on the absolute width so the limits are hit exactly.
    """
    return float(min(max(prob.width + optimum, prob.width_min), prob.width_max))


def solve_finger(prob: IpfoProblem, m: RigidMotion) -> float:
    """Clamped optimal width change at fixed pose.

    Falls back to zero (with an IndeterminateWidthWarning) when width does
    not affect the cost; a width-insensitive configuration is still a
    valid palm fit.
    """
    try:
        optimum = finger_optimum(prob, m)
    except IndeterminateWidth as exc:
        warnings.warn(str(exc), IndeterminateWidthWarning, stacklevel=2)
        return 0.0
    return _clamp_width(prob, optimum) - prob.width


def run_ipfo(prob: IpfoProblem) -> IpfoSolution:
    """Alternate palm and finger solves until the error stops decreasing.

    Each palm increment is composed onto a running motion and residuals
    are re-evaluated from the original source points, so no floating-point
    drift accumulates in the point arrays. Terminates when the error
    decrease drops to ``convergence_delta`` or at ``max_iterations``. A
    pass whose linearization overshoots (raising the true error) is rolled
    back, so the returned trace is never increasing.
    """
    motion = RigidMotion.identity()
    width = float(prob.width)
    indeterminate = False
    error = fitting_error(prob, motion, 0.0)
    trace = [error]
    previous = np.inf
    iterations = 0
    while previous - error > prob.convergence_delta and iterations < prob.max_iterations:
        previous = error
        saved = (motion, width)
        x = palm_increment(prob, width - prob.width, base=motion)
        motion = RigidMotion.from_increment(x[:3], x[3:]).compose(motion)
        try:
            width = _clamp_width(prob, finger_optimum(prob, motion))
        except IndeterminateWidth as exc:
            if not indeterminate:
                warnings.warn(str(exc), IndeterminateWidthWarning, stacklevel=2)
            indeterminate = True
            width = float(prob.width)
        error = fitting_error(prob, motion, width - prob.width)
        if error > previous:
            motion, width = saved
            error = previous
            break
        trace.append(error)
        iterations += 1
    return IpfoSolution(motion=motion, width=width, width_change=width - prob.width,
                        error=error, iterations=iterations,
                        error_trace=tuple(trace),
                        width_indeterminate=indeterminate)
