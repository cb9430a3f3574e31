"""Analytic point-cloud fixtures with exact normals, for tests and demos.

All fixtures are desk scale (centimeters) and deterministic. The default
gripper is a parallel jaw with curved fingertips whose contact patches
exactly cup a 1 cm radius cylinder at the home width.
"""

from __future__ import annotations

import numpy as np

from .geometry import SurfaceCloud
from .gripper import CollisionBox, GripperModel


def cylinder(radius: float = 0.01, height: float = 0.06,
             n_points: int = 2000, center=(0.0, 0.0, 0.0)) -> SurfaceCloud:
    """Lateral surface of a z-aligned cylinder, outward radial normals.

    Points form a staggered ring grid with near-isotropic spacing.
    """
    n_rings = max(2, int(round(np.sqrt(n_points * height / (2 * np.pi * radius)))))
    n_phi = max(3, int(round(n_points / n_rings)))
    zs = np.linspace(-height / 2, height / 2, n_rings)
    pts = []
    nrm = []
    for i, z in enumerate(zs):
        phi = (np.arange(n_phi) + 0.5 * (i % 2)) * (2 * np.pi / n_phi)
        ring = np.column_stack([radius * np.cos(phi), radius * np.sin(phi),
                                np.full(n_phi, z)])
        pts.append(ring)
        nrm.append(np.column_stack([np.cos(phi), np.sin(phi), np.zeros(n_phi)]))
    points = np.vstack(pts) + np.asarray(center, dtype=np.float64)
    return SurfaceCloud(points, np.vstack(nrm))


def sphere(radius: float = 0.02, n_points: int = 1500,
           center=(0.0, 0.0, 0.0)) -> SurfaceCloud:
    """Fibonacci-spiral sampling of a sphere, outward radial normals."""
    i = np.arange(n_points)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    z = 1.0 - 2.0 * (i + 0.5) / n_points
    r_xy = np.sqrt(1.0 - z * z)
    phi = golden * i
    normals = np.column_stack([r_xy * np.cos(phi), r_xy * np.sin(phi), z])
    points = radius * normals + np.asarray(center, dtype=np.float64)
    return SurfaceCloud(points, normals)


def plane_pair(gap: float = 0.02, size: float = 0.02, n_side: int = 15) -> SurfaceCloud:
    """Two parallel square patches facing away from each other.

    Models the two faces of a slab of thickness ``gap`` normal to x:
    the +x face has normal +x, the -x face normal -x.
    """
    grid = np.linspace(-size / 2, size / 2, n_side)
    yy, zz = np.meshgrid(grid, grid, indexing="ij")
    flat = np.column_stack([np.zeros(yy.size), yy.ravel(), zz.ravel()])
    plus = flat + np.array([gap / 2, 0.0, 0.0])
    minus = flat - np.array([gap / 2, 0.0, 0.0])
    points = np.vstack([plus, minus])
    normals = np.vstack([np.tile([1.0, 0.0, 0.0], (len(plus), 1)),
                         np.tile([-1.0, 0.0, 0.0], (len(minus), 1))])
    return SurfaceCloud(points, normals)


def blob_scene(n_points_each: int = 700) -> SurfaceCloud:
    """Three cylinders placed closely together, merged into one unsegmented
    cloud (a clutter analog)."""
    parts = [
        cylinder(n_points=n_points_each, center=(0.0, 0.0, 0.0)),
        cylinder(n_points=n_points_each, center=(0.035, 0.0, 0.0)),
        cylinder(n_points=n_points_each, center=(0.018, 0.032, 0.0), height=0.05),
    ]
    return SurfaceCloud.merge(parts)


def _arc_patch(radius, half_angle, patch_height, n_arc, n_axial, azimuth):
    """Cylindrical arc patch centered at the given azimuth, inward normals."""
    phi = azimuth + np.linspace(-half_angle, half_angle, n_arc)
    z = np.linspace(-patch_height / 2, patch_height / 2, n_axial)
    pp, zz = np.meshgrid(phi, z, indexing="ij")
    points = np.column_stack([radius * np.cos(pp).ravel(),
                              radius * np.sin(pp).ravel(), zz.ravel()])
    normals = np.column_stack([-np.cos(pp).ravel(), -np.sin(pp).ravel(),
                               np.zeros(pp.size)])
    return SurfaceCloud(points, normals)


def default_gripper(fit_radius: float = 0.01, half_angle: float = np.pi / 8,
                    patch_height: float = 0.015, n_arc: int = 10,
                    n_axial: int = 14) -> GripperModel:
    """Parallel jaw with curved fingertips matching a cylinder of
    ``fit_radius`` at the 2 cm home width.

    The gripper frame origin is the grasp center; the jaw opens along x
    (finger 1 at -x, finger 2 at +x) and the body approaches along +y
    (palm behind at -y). Jaw limits are [1, 3] cm. Collision boxes cover
    the finger bodies behind the patch chords and the palm bridge; the
    patch arcs' sagitta (~0.8 mm) stays within the default 1 mm
    penetration tolerance, so a perfect fit is collision-free.
    """
    finger2 = _arc_patch(fit_radius, half_angle, patch_height, n_arc, n_axial, 0.0)
    finger1 = _arc_patch(fit_radius, half_angle, patch_height, n_arc, n_axial, np.pi)
    chord = fit_radius * np.cos(half_angle)
    finger_half = np.array([0.004, 0.008, patch_height / 2])
    boxes = (
        CollisionBox(center=[chord + finger_half[0], -0.004, 0.0],
                     axes=np.eye(3), half_extents=finger_half, width_coupling=0.5),
        CollisionBox(center=[-chord - finger_half[0], -0.004, 0.0],
                     axes=np.eye(3), half_extents=finger_half, width_coupling=-0.5),
        CollisionBox(center=[0.0, -0.016, 0.0], axes=np.eye(3),
                     half_extents=[0.023, 0.004, patch_height / 2]),
    )
    return GripperModel(finger1=finger1, finger2=finger2,
                        opening_axis=[1.0, 0.0, 0.0],
                        width_min=0.01, width_max=0.03, width_home=0.02,
                        boxes=boxes, approach_axis=[0.0, 1.0, 0.0],
                        name="curved-jaw", version=1)
