"""Gripper model: contact patches, jaw limits, collision geometry.

The two contact patches are authored in the gripper frame at the home
jaw width, with normals pointing inward (toward the grasped volume). The
jaw opens along ``opening_axis``; both fingers move symmetrically, so a
width change d - home shifts finger j by 0.5 * (-1)^j * (d - home) along
the axis. Collision geometry is a set of oriented boxes, optionally
coupled to the width so finger bodies travel with their finger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geometry import RigidMotion, SurfaceCloud


@dataclass(frozen=True)
class CollisionBox:
    """Oriented box in the gripper frame.

    ``axes`` rows are the box's unit axes; ``width_coupling`` shifts the
    center along the opening axis by coupling * (width - home), e.g.
    +0.5 for a body attached to finger 2.
    """

    center: np.ndarray
    axes: np.ndarray
    half_extents: np.ndarray
    width_coupling: float = 0.0

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64).reshape(3).copy()
        axes = np.asarray(self.axes, dtype=np.float64).reshape(3, 3).copy()
        half = np.asarray(self.half_extents, dtype=np.float64).reshape(3).copy()
        if np.abs(axes @ axes.T - np.eye(3)).max() > 1e-6:
            raise ValidationError("box axes must be orthonormal")
        if (half <= 0.0).any():
            raise ValidationError("box half extents must be positive")
        for arr in (center, axes, half):
            arr.flags.writeable = False
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "half_extents", half)


@dataclass(frozen=True)
class GripperModel:
    """Two-finger gripper with one opening degree of freedom."""

    finger1: SurfaceCloud
    finger2: SurfaceCloud
    opening_axis: np.ndarray
    width_min: float
    width_max: float
    width_home: float
    boxes: tuple[CollisionBox, ...] = ()
    approach_axis: np.ndarray | None = None
    name: str = "gripper"
    version: int = 1

    def __post_init__(self):
        v = np.asarray(self.opening_axis, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(v)
        if norm < 1e-12:
            raise ValidationError("opening axis must be nonzero")
        v = v / norm
        v.flags.writeable = False
        object.__setattr__(self, "opening_axis", v)
        if not self.width_min < self.width_max:
            raise ValidationError(
                f"width_min {self.width_min} must be < width_max {self.width_max}")
        if self.width_min <= 0.0:
            raise ValidationError("width_min must be positive")
        if not self.width_min <= self.width_home <= self.width_max:
            raise ValidationError(
                f"home width {self.width_home} outside "
                f"[{self.width_min}, {self.width_max}]")
        object.__setattr__(self, "boxes", tuple(self.boxes))
        if self.approach_axis is not None:
            a = np.asarray(self.approach_axis, dtype=np.float64).reshape(3)
            norm = np.linalg.norm(a)
            if norm < 1e-12:
                raise ValidationError("approach axis must be nonzero")
            a = a / norm
            a.flags.writeable = False
            object.__setattr__(self, "approach_axis", a)

    def contact_cloud(self, width: float | None = None) -> SurfaceCloud:
        """Both contact patches merged, labeled 1 and 2, at the given width."""
        cloud = SurfaceCloud.merge([self.finger1, self.finger2], labels=[1, 2])
        if width is None or width == self.width_home:
            return cloud
        if not self.width_min <= width <= self.width_max:
            raise ValidationError(
                f"width {width} outside [{self.width_min}, {self.width_max}]")
        signs = np.where(cloud.labels == 1, -1.0, 1.0)
        shift = (0.5 * (width - self.width_home)) * signs[:, np.newaxis] \
            * self.opening_axis
        return SurfaceCloud(cloud.points + shift, cloud.normals, cloud.labels)

    def posed_boxes(self, pose: RigidMotion, width: float):
        """World-frame (center, axes-rows, half_extents) of every box."""
        out = []
        for box in self.boxes:
            center = box.center + (box.width_coupling * (width - self.width_home)) \
                * self.opening_axis
            out.append((pose.transform_points(center[np.newaxis, :])[0],
                        box.axes @ pose.rotation.T,
                        box.half_extents))
        return out


def collide(gripper: GripperModel, pose: RigidMotion, width: float,
            obj, penetration: float = 1e-3) -> bool:
    """True if any object point penetrates a posed collision box beyond
    ``penetration``.

    Penetration depth is the distance to the nearest box face, so a point
    exactly ``penetration`` inside a face does not collide. The tolerance
    absorbs the surface-grazing contact that a well-fitted gripper
    necessarily makes.
    """
    if penetration < 0.0:
        raise ValueError("penetration tolerance must be >= 0")
    points = obj.points if isinstance(obj, SurfaceCloud) else np.asarray(obj, dtype=np.float64)
    for center, axes, half in gripper.posed_boxes(pose, width):
        local = np.abs((points - center) @ axes.T)
        if np.any(np.all(local < half - penetration, axis=1)):
            return True
    return False
