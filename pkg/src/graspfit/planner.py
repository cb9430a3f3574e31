"""Top-level grasp planning: seeded, regret-guided sampling of fitting runs.

The object is partitioned by k-means; each cluster center is a candidate
start position, treated as an arm of a bandit. Every sample picks the
arm with the lowest average regret, draws a random orientation, runs the
surface-fitting loop and a collision check, and folds the observed error
(inflated for collisions) back into that arm's regret.
"""

from __future__ import annotations

import csv
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from sklearn.cluster import KMeans

from .errors import NoFeasibleGrasp, SampleAbandoned
from .geometry import (RigidMotion, SpatialIndex, SurfaceCloud, random_rotation,
                       rotation_to_quaternion)
from .gripper import GripperModel, collide
from .isf import IsfConfig, IsfResult, run_isf

_ABANDONED_ERROR_FACTOR = 10.0
_ABANDONED_ERROR_DEFAULT = 1.0


def kmeans_centers(obj: SurfaceCloud, n_centers: int, seed: int) -> np.ndarray:
    """Cluster centers of the object points (Lloyd with k-means++ seeding).

    Deterministic for a fixed seed; iterates to the assignment fixpoint
    or 100 rounds.
    """
    if not 1 <= n_centers <= len(obj):
        raise ValueError(
            f"need 1 <= n_centers <= {len(obj)} points, got {n_centers}")
    km = KMeans(n_clusters=n_centers, init="k-means++", n_init=1, max_iter=100,
                tol=0.0, random_state=_kmeans_seed(seed))
    km.fit(obj.points)
    return km.cluster_centers_.astype(np.float64)


def _kmeans_seed(seed: int) -> int:
    # independent 32-bit stream so clustering does not consume the
    # orientation generator
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


class GraspCandidate(NamedTuple):
    motion: RigidMotion
    width: float
    fitting_error: float
    collision_free: bool
    center_index: int
    sample_index: int


class SampleRecord(NamedTuple):
    """One planning-loop sample, for audit and regret replay."""
    sample_index: int
    center_index: int
    seed_rotation: np.ndarray      # quaternion (w, x, y, z)
    seed_translation: np.ndarray
    error: float
    collision: bool
    abandoned: bool
    regret: tuple                  # regret vector after the update
    trace: tuple = ()


@dataclass(frozen=True)
class PlanResult:
    """All candidates plus the planner state needed to audit the run."""

    candidates: tuple
    records: tuple
    centers: np.ndarray
    regret: tuple
    trial: tuple
    seed: int
    elapsed: float

    @property
    def feasible(self) -> bool:
        return any(c.collision_free for c in self.candidates)

    @property
    def collision_free(self) -> tuple:
        return tuple(c for c in self.candidates if c.collision_free)

    @property
    def best(self) -> GraspCandidate | None:
        free = self.collision_free
        return free[0] if free else None


def _worker_count(batch_size: int) -> int:
    cap = os.environ.get("GRASPFIT_THREADS")
    limit = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(batch_size, limit))


def _sample_rotation(rng, gripper, approach_cone):
    """Uniform rotation, optionally rejection-sampled into an approach cone."""
    if approach_cone is None:
        return random_rotation(rng)
    if gripper.approach_axis is None:
        raise ValueError("approach cone requires a gripper approach axis")
    direction, max_angle = approach_cone
    direction = np.asarray(direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)
    cos_limit = np.cos(max_angle)
    for _ in range(10000):
        rot = random_rotation(rng)
        if (rot @ gripper.approach_axis) @ direction >= cos_limit:
            return rot
    raise ValueError("approach cone too narrow to sample")


def plan(obj: SurfaceCloud, gripper: GripperModel, *, n_centers: int = 6,
         n_samples: int = 60, collision_penalty: float = 0.2,
         cfg: IsfConfig | None = None, seed: int = 0,
         penetration: float = 1e-3, batch_size: int = 1,
         approach_cone=None, require_feasible: bool = False) -> PlanResult:
    """Search for grasps by regret-guided sampling of fitting runs.

    Each of ``n_samples`` iterations starts the fitting loop at the
    argmin-regret cluster center (ties to the lowest index) with a random
    orientation, then updates that center's average regret with the
    observed per-pair fitting error, multiplied by
    (1 + collision_penalty) when the final pose collides. Abandoned runs
    feed a large finite error instead, so hopeless regions lose priority
    without breaking comparability.

    Candidates are sorted collision-free first, then by fitting error.
    With ``batch_size`` > 1, batches share a regret snapshot and run
    concurrently (worker count capped by GRASPFIT_THREADS); updates are
    applied in sample order, so results stay deterministic per
    (seed, batch_size).

    With ``require_feasible`` the run raises NoFeasibleGrasp (carrying
    the result) when no collision-free candidate was found.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError(f"seed must be a non-negative integer, got {seed!r}")
    if cfg is None:
        cfg = IsfConfig()

    started = time.perf_counter()
    centers = kmeans_centers(obj, n_centers, seed)
    index = SpatialIndex(obj)
    rng = np.random.default_rng(seed)

    regret = [0.0] * n_centers
    trial = [0] * n_centers
    worst_error = None
    candidates: list[GraspCandidate] = []
    records: list[SampleRecord] = []

    def evaluate(rotation, center) -> tuple[IsfResult | None, bool]:
        start = RigidMotion(rotation, center)
        try:
            fit = run_isf(start, gripper.width_home, obj, gripper, cfg, index=index)
        except SampleAbandoned:
            return None, False
        hit = collide(gripper, fit.motion, fit.width, obj, penetration)
        return fit, hit

    sample_index = 0
    while sample_index < n_samples:
        batch = min(batch_size, n_samples - sample_index)
        # arms and orientations are fixed from the snapshot before any
        # evaluation, which keeps batch mode deterministic
        chosen = [int(np.argmin(regret)) for _ in range(batch)]
        rotations = [_sample_rotation(rng, gripper, approach_cone) for _ in range(batch)]

        if batch == 1:
            outcomes = [evaluate(rotations[0], centers[chosen[0]])]
        else:
            with ThreadPoolExecutor(max_workers=_worker_count(batch)) as pool:
                outcomes = list(pool.map(
                    lambda args: evaluate(*args),
                    [(rot, centers[k]) for rot, k in zip(rotations, chosen)]))

        for rot, k, (fit, hit) in zip(rotations, chosen, outcomes):
            if fit is None:
                error = (_ABANDONED_ERROR_FACTOR * worst_error
                         if worst_error is not None else _ABANDONED_ERROR_DEFAULT)
            else:
                error = fit.fitting_error
                worst_error = error if worst_error is None else max(worst_error, error)
                candidates.append(GraspCandidate(
                    motion=fit.motion, width=fit.width,
                    fitting_error=fit.fitting_error, collision_free=not hit,
                    center_index=k, sample_index=sample_index))
            regret[k] = (regret[k] * trial[k] + error) / (trial[k] + 1)
            regret[k] = (1.0 + collision_penalty * hit) * regret[k]
            trial[k] += 1
            records.append(SampleRecord(
                sample_index=sample_index, center_index=k,
                seed_rotation=rotation_to_quaternion(rot),
                seed_translation=centers[k].copy(),
                error=error, collision=hit, abandoned=fit is None,
                regret=tuple(regret),
                trace=fit.trace if fit is not None else ()))
            sample_index += 1

    candidates.sort(key=lambda c: (not c.collision_free, c.fitting_error))
    result = PlanResult(candidates=tuple(candidates), records=tuple(records),
                        centers=centers, regret=tuple(regret), trial=tuple(trial),
                        seed=seed, elapsed=time.perf_counter() - started)
    if require_feasible and not result.feasible:
        raise NoFeasibleGrasp(
            f"no collision-free grasp in {n_samples} samples", result)
    return result


def write_plan_log_csv(result: PlanResult, path) -> None:
    """Planning log as CSV: one row per sample with the regret vector after
    its update. Floats are written with repr so the log replays bit-exactly.
    """
    k = len(result.regret)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample", "center", "qw", "qx", "qy", "qz",
                         "tx", "ty", "tz", "error", "collision", "abandoned"]
                        + [f"regret_{i}" for i in range(k)])
        for rec in result.records:
            writer.writerow([rec.sample_index, rec.center_index]
                            + [repr(float(x)) for x in rec.seed_rotation]
                            + [repr(float(x)) for x in rec.seed_translation]
                            + [repr(rec.error), int(rec.collision),
                               int(rec.abandoned)]
                            + [repr(float(r)) for r in rec.regret])


def replay_regret(records, n_centers: int, collision_penalty: float):
    """Recompute the regret/trial trajectory from logged samples.

    Returns (selections_ok, regret_history) where selections_ok confirms
    every logged center was the argmin of the regret vector at selection
    time (lowest index on ties), and regret_history holds the regret
    vector after each update, for bit-exact comparison with the log.
    """
    regret = [0.0] * n_centers
    trial = [0] * n_centers
    selections_ok = True
    history = []
    for rec in records:
        expected = int(np.argmin(regret))
        if rec.center_index != expected:
            selections_ok = False
        k = rec.center_index
        regret[k] = (regret[k] * trial[k] + rec.error) / (trial[k] + 1)
        regret[k] = (1.0 + collision_penalty * rec.collision) * regret[k]
        trial[k] += 1
        history.append(tuple(regret))
    return selections_ok, history
