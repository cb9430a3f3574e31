"""Spatial core: rotations, rigid motions, surface clouds, nearest-neighbor index.

All positions are in meters. Clouds store points together with unit
normals; rigid motions act on both. Types are immutable after
construction, so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateNeighborhood, EmptyResult

_UNIT_TOL = 1e-9


def _as_points(a, name="points"):
    """Validate and return an (n, 3) float64 array."""
    out = np.asarray(a, dtype=np.float64)
    if out.ndim == 1 and out.shape == (3,):
        out = out[np.newaxis, :]
    if out.ndim != 2 or out.shape[1] != 3:
        raise ValueError(f"{name} must have shape (n, 3), got {out.shape}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contain non-finite values")
    return out


def skew(v) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector, so that skew(v) @ w == cross(v, w)."""
    x, y, z = np.asarray(v, dtype=np.float64)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def exp_map(r) -> np.ndarray:
    """Rotation matrix with axis r/|r| and angle |r| (Rodrigues formula).

    exp_map(0) is the identity. The output is an exact element of SO(3)
    up to floating point, which keeps long chains of solver increments
    from drifting off the manifold.
    """
    r = np.asarray(r, dtype=np.float64).reshape(3)
    theta = np.linalg.norm(r)
    k = skew(r)
    if theta < 1e-10:
        # second-order series; orthonormality error is O(theta^4)
        return np.eye(3) + k + 0.5 * (k @ k)
    return np.eye(3) + (np.sin(theta) / theta) * k + ((1.0 - np.cos(theta)) / theta**2) * (k @ k)


def project_rotation(m) -> np.ndarray:
    """Nearest rotation matrix (Frobenius) to an almost-orthonormal 3x3 matrix."""
    u, _, vt = np.linalg.svd(np.asarray(m, dtype=np.float64))
    if np.linalg.det(u @ vt) < 0.0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
    return u @ vt


def is_rotation(m, tol=_UNIT_TOL) -> bool:
    """True if m is orthonormal with determinant +1 within tol per entry."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (3, 3):
        return False
    return (
        np.abs(m.T @ m - np.eye(3)).max() <= tol
        and abs(np.linalg.det(m) - 1.0) <= tol
    )


def rotation_to_quaternion(m) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix, sign fixed to w >= 0."""
    m = np.asarray(m, dtype=np.float64)
    t = np.trace(m)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s, (m[2, 1] - m[1, 2]) / s,
                      (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s])
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(m[i, i] - m[j, j] - m[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    q /= np.linalg.norm(q)
    # canonical sign: first nonzero component positive (w >= 0 in the common case)
    for c in q:
        if c != 0.0:
            if c < 0.0:
                q = -q
            break
    return q


def quaternion_to_rotation(q) -> np.ndarray:
    """Rotation matrix of a quaternion (w, x, y, z); normalizes the input."""
    w, x, y, z = np.asarray(q, dtype=np.float64) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Rotation drawn uniformly from SO(3) via the uniform-quaternion construction."""
    u1, u2, u3 = rng.random(3)
    a, b = np.sqrt(1.0 - u1), np.sqrt(u1)
    q = np.array([a * np.sin(2 * np.pi * u2), a * np.cos(2 * np.pi * u2),
                  b * np.sin(2 * np.pi * u3), b * np.cos(2 * np.pi * u3)])
    return quaternion_to_rotation(q)


@dataclass(frozen=True)
class RigidMotion:
    """Rigid transform p -> rotation @ p + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rot = np.asarray(self.rotation, dtype=np.float64)
        tr = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not is_rotation(rot, tol=1e-7):
            raise ValueError("rotation is not orthonormal with det +1")
        rot = rot.copy()
        tr = tr.copy()
        rot.flags.writeable = False
        tr.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls) -> "RigidMotion":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_increment(cls, axis_angle, translation) -> "RigidMotion":
        """Motion built from a solver increment [r, t] with rotation exp_map(r)."""
        return cls(exp_map(axis_angle), translation)

    def compose(self, other: "RigidMotion") -> "RigidMotion":
        """Motion equal to applying ``other`` first, then ``self``.

        The composed rotation is re-projected onto SO(3) so that long
        chains of increments keep the rotation invariants.
        """
        rot = project_rotation(self.rotation @ other.rotation)
        return RigidMotion(rot, self.rotation @ other.translation + self.translation)

    def __matmul__(self, other: "RigidMotion") -> "RigidMotion":
        return self.compose(other)

    def inverse(self) -> "RigidMotion":
        rt = self.rotation.T
        return RigidMotion(rt.copy(), -(rt @ self.translation))

    def transform_points(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def rotate_vectors(self, vectors) -> np.ndarray:
        return np.asarray(vectors, dtype=np.float64) @ self.rotation.T


@dataclass(frozen=True)
class SurfaceCloud:
    """Points plus unit normals, with optional per-point finger labels.

    Represents both object surfaces and gripper contact patches. Arrays
    are copied and frozen on construction.
    """

    points: np.ndarray
    normals: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = _as_points(self.points)
        nrm = _as_points(self.normals, "normals")
        if len(pts) == 0:
            raise EmptyResult("cloud must contain at least one point")
        if len(pts) != len(nrm):
            raise ValueError(f"{len(pts)} points but {len(nrm)} normals")
        lengths = np.linalg.norm(nrm, axis=1)
        worst = np.abs(lengths - 1.0).max()
        if worst > 1e-6:
            raise ValueError("normals must be unit length")
        if worst > 1e-12:
            # tolerate slightly sloppy input but store exact unit vectors
            nrm = nrm / lengths[:, np.newaxis]
        lab = self.labels
        if lab is not None:
            lab = np.asarray(lab, dtype=np.intp).copy()
            if lab.shape != (len(pts),):
                raise ValueError("labels must be one integer per point")
            lab.flags.writeable = False
        pts = pts.copy()
        nrm = nrm.copy()
        pts.flags.writeable = False
        nrm.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def merge(cls, clouds, labels=None) -> "SurfaceCloud":
        """Concatenate clouds, optionally assigning one label per input cloud."""
        pts = np.vstack([c.points for c in clouds])
        nrm = np.vstack([c.normals for c in clouds])
        lab = None
        if labels is not None:
            lab = np.concatenate([np.full(len(c), l, dtype=np.intp)
                                  for c, l in zip(clouds, labels)])
        return cls(pts, nrm, lab)


def apply_motion(cloud: SurfaceCloud, m: RigidMotion) -> SurfaceCloud:
    """Transform a cloud rigidly: points get rotated and translated, normals rotated."""
    return SurfaceCloud(m.transform_points(cloud.points),
                        m.rotate_vectors(cloud.normals), cloud.labels)


def downsample(cloud: SurfaceCloud, factor: int) -> SurfaceCloud:
    """Keep every factor-th point (deterministic stride, stable order).

    Index 0 is always kept, so strides compose: factor 2 twice selects the
    same points as factor 4 once.
    """
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be an integer >= 1, got {factor}")
    factor = int(factor)
    if factor == 1:
        return cloud
    pts = cloud.points[::factor]
    if len(pts) == 0:
        raise EmptyResult("downsampling left no points")
    lab = None if cloud.labels is None else cloud.labels[::factor]
    return SurfaceCloud(pts, cloud.normals[::factor], lab)


class SpatialIndex:
    """KD-tree over a cloud's points with deterministic tie-breaking.

    Queries return the exact Euclidean nearest neighbor; among equidistant
    points the lowest index wins. Read-only after construction, so safe
    for concurrent queries.
    """

    def __init__(self, cloud: SurfaceCloud):
        self.cloud = cloud
        self._tree = cKDTree(cloud.points)

    def __len__(self) -> int:
        return len(self.cloud)

    def nearest_indices(self, queries) -> np.ndarray:
        """Index of the nearest stored point for each query point."""
        q = _as_points(queries, "queries")
        n = len(self.cloud)
        if n == 1:
            return np.zeros(len(q), dtype=np.intp)
        dist, idx = self._tree.query(q, k=2)
        idx = idx[:, 0].astype(np.intp)
        # near-ties are re-resolved exactly so the lowest index always wins
        close = dist[:, 1] - dist[:, 0] <= 1e-9 * dist[:, 0] + 1e-15
        for row in np.nonzero(close)[0]:
            radius = dist[row, 0] * (1.0 + 1e-9) + 1e-15
            cand = np.asarray(self._tree.query_ball_point(q[row], radius), dtype=np.intp)
            d2 = np.sum((self.cloud.points[cand] - q[row]) ** 2, axis=1)
            best = d2.min()
            idx[row] = cand[d2 <= best].min()
        return idx

    def nearest(self, p):
        """Nearest stored point to p: returns (point, normal, distance)."""
        i = int(self.nearest_indices(np.asarray(p, dtype=np.float64)[np.newaxis, :])[0])
        point = self.cloud.points[i]
        d = float(np.sqrt(np.sum((point - np.asarray(p, dtype=np.float64)) ** 2)))
        return point, self.cloud.normals[i], d


def estimate_normals(points, k: int = 10, viewpoint=None) -> SurfaceCloud:
    """Per-point normals from the smallest eigenvector of the k-NN covariance.

    Normals are oriented so that normal . (viewpoint - point) > 0; the
    default viewpoint is the centroid raised by one meter in z, which
    orients the upper side of desk-scale scans consistently.

    Raises DegenerateNeighborhood when any neighborhood is collinear
    (covariance rank < 2).
    """
    pts = _as_points(points)
    if k < 3:
        raise ValueError(f"k must be >= 3, got {k}")
    if len(pts) <= k:
        raise ValueError(f"need more than k={k} points, got {len(pts)}")
    if viewpoint is None:
        viewpoint = pts.mean(axis=0) + np.array([0.0, 0.0, 1.0])
    viewpoint = np.asarray(viewpoint, dtype=np.float64).reshape(3)

    tree = cKDTree(pts)
    _, nbr = tree.query(pts, k=k)
    hood = pts[nbr]                                   # (n, k, 3)
    centered = hood - hood.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    evals, evecs = np.linalg.eigh(cov)                # ascending eigenvalues
    degenerate = evals[:, 1] <= 1e-9 * np.maximum(evals[:, 2], 1e-30) + 1e-18
    if degenerate.any():
        raise DegenerateNeighborhood(
            f"{int(degenerate.sum())} of {len(pts)} neighborhoods are collinear")
    normals = evecs[:, :, 0]
    flip = np.einsum("ni,ni->n", normals, viewpoint - pts) < 0.0
    normals[flip] = -normals[flip]
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    return SurfaceCloud(pts, normals)
