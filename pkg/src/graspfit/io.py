"""File formats: ASCII PLY/OBJ clouds, gripper model files, result files.

All numerics are SI meters. Gripper models and results are JSON with a
versioned schema (documented in the README); PLY is ASCII with x y z and
optional nx ny nz properties, unknown properties ignored. Floats are
written with repr so every file round-trips losslessly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ParseError, ValidationError
from .geometry import (RigidMotion, SurfaceCloud, apply_motion,
                       estimate_normals, quaternion_to_rotation,
                       rotation_to_quaternion)
from .gripper import CollisionBox, GripperModel
from .planner import PlanResult

GRIPPER_SCHEMA_VERSION = 1
RESULT_SCHEMA_VERSION = 1

_PLY_VALUE_TYPES = {"char", "uchar", "short", "ushort", "int", "uint",
                    "int8", "uint8", "int16", "uint16", "int32", "uint32",
                    "float", "float32", "double", "float64"}


def load_ply(path):
    """Parse an ASCII PLY file; returns (points, normals-or-None).

    Reads the x/y/z vertex properties and nx/ny/nz when present; other
    properties and other elements (faces included) are skipped.
    """
    with open(path, "r") as fh:
        lines = iter(fh.read().splitlines())
    try:
        if next(lines).strip() != "ply":
            raise ParseError(f"{path}: missing 'ply' magic line")
    except StopIteration:
        raise ParseError(f"{path}: empty file") from None

    elements = []          # (name, count, [property names in column order])
    fmt = None
    for raw in lines:
        line = raw.strip()
        if not line or line.startswith("comment") or line.startswith("obj_info"):
            continue
        if line == "end_header":
            break
        parts = line.split()
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            if len(parts) != 3 or not parts[2].isdigit():
                raise ParseError(f"{path}: bad element line {line!r}")
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise ParseError(f"{path}: property before any element")
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[-1]))
            else:
                if parts[1] not in _PLY_VALUE_TYPES:
                    raise ParseError(f"{path}: unknown property type {parts[1]!r}")
                elements[-1][2].append((parts[1], parts[2]))
    else:
        raise ParseError(f"{path}: missing end_header")
    if fmt != "ascii":
        raise ParseError(f"{path}: only ASCII PLY is supported, got {fmt!r}")

    points = normals = None
    for name, count, props in elements:
        rows = []
        for i in range(count):
            try:
                rows.append(next(lines).split())
            except StopIteration:
                raise ParseError(
                    f"{path}: expected {count} rows for element {name!r}, "
                    f"got {i}") from None
        if name != "vertex":
            continue
        columns = [p[1] for p in props]
        if any(p[0] == "list" for p in props):
            raise ParseError(f"{path}: list property on vertex element")
        for axis in "xyz":
            if axis not in columns:
                raise ParseError(f"{path}: vertex element lacks property {axis!r}")
        if any(len(row) != len(columns) for row in rows):
            raise ParseError(f"{path}: vertex rows do not match property count")
        try:
            data = np.array([[float(v) for v in row] for row in rows])
        except ValueError as exc:
            raise ParseError(f"{path}: non-numeric vertex data ({exc})") from None
        data = data.reshape(count, len(columns))
        points = data[:, [columns.index(a) for a in "xyz"]]
        if all(f"n{a}" in columns for a in "xyz"):
            normals = data[:, [columns.index(f"n{a}") for a in "xyz"]]
    if points is None:
        raise ParseError(f"{path}: no vertex element")
    return points, normals


def save_ply(path, cloud: SurfaceCloud) -> None:
    """Write a cloud as ASCII PLY with positions and normals."""
    with open(path, "w") as fh:
        fh.write("ply\nformat ascii 1.0\n")
        fh.write(f"element vertex {len(cloud)}\n")
        for name in ("x", "y", "z", "nx", "ny", "nz"):
            fh.write(f"property double {name}\n")
        fh.write("end_header\n")
        for p, n in zip(cloud.points, cloud.normals):
            fh.write(" ".join(repr(float(v)) for v in (*p, *n)) + "\n")


def load_obj(path):
    """Parse OBJ v/vn records; returns (points, normals-or-None).

    Normals are used only when there is exactly one vn per v (faces are
    not interpreted, so no index remapping is possible).
    """
    vs, vns = [], []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, 1):
            parts = raw.split()
            if not parts:
                continue
            try:
                if parts[0] == "v":
                    vs.append([float(x) for x in parts[1:4]])
                elif parts[0] == "vn":
                    vns.append([float(x) for x in parts[1:4]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not vs:
        raise ParseError(f"{path}: no vertex records")
    points = np.asarray(vs, dtype=np.float64)
    normals = np.asarray(vns, dtype=np.float64) if len(vns) == len(vs) else None
    return points, normals


def load_object(path, normals_k: int = 10, viewpoint=None) -> SurfaceCloud:
    """Load an object cloud from PLY or OBJ, estimating normals if absent.

    File normals are re-normalized; zero-length ones are rejected.
    """
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".ply":
        points, normals = load_ply(path)
    elif ext == ".obj":
        points, normals = load_obj(path)
    else:
        raise ParseError(f"{path}: unsupported extension {ext!r} (use .ply or .obj)")
    if normals is None:
        return estimate_normals(points, k=normals_k, viewpoint=viewpoint)
    lengths = np.linalg.norm(normals, axis=1)
    if (lengths < 1e-12).any():
        raise ParseError(f"{path}: zero-length normals")
    return SurfaceCloud(points, normals / lengths[:, np.newaxis])


def _require(doc: dict, key: str, path) -> object:
    if key not in doc:
        raise ParseError(f"{path}: missing field {key!r}")
    return doc[key]


def load_gripper(path) -> GripperModel:
    """Load and validate a gripper model file (JSON).

    Patch files are resolved relative to the model file. The per-finger
    ``normals`` flag says whether the stored normals point "inward"
    (toward the grasped volume, the internal convention) or "outward"
    (flipped on load).
    """
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None

    base = os.path.dirname(os.path.abspath(str(path)))
    fingers = _require(doc, "fingers", path)
    if not isinstance(fingers, list) or len(fingers) != 2:
        raise ParseError(f"{path}: 'fingers' must list exactly two patches")
    patches = []
    for spec in fingers:
        patch_path = os.path.join(base, _require(spec, "patch", path))
        if not os.path.exists(patch_path):
            raise ParseError(f"{path}: patch file not found: {patch_path}")
        points, normals = load_ply(patch_path)
        if normals is None:
            raise ParseError(f"{patch_path}: contact patch needs stored normals")
        lengths = np.linalg.norm(normals, axis=1)
        if (lengths < 1e-12).any():
            raise ParseError(f"{patch_path}: zero-length normals")
        normals = normals / lengths[:, np.newaxis]
        convention = spec.get("normals", "inward")
        if convention == "outward":
            normals = -normals
        elif convention != "inward":
            raise ParseError(f"{path}: normals flag must be 'inward' or 'outward'")
        patches.append(SurfaceCloud(points, normals))

    width = _require(doc, "width", path)
    boxes = []
    for b in doc.get("collision_boxes", []):
        boxes.append(CollisionBox(center=_require(b, "center", path),
                                  axes=_require(b, "axes", path),
                                  half_extents=_require(b, "half_extents", path),
                                  width_coupling=b.get("width_coupling", 0.0)))
    try:
        return GripperModel(
            finger1=patches[0], finger2=patches[1],
            opening_axis=_require(doc, "opening_axis", path),
            width_min=float(_require(width, "min", path)),
            width_max=float(_require(width, "max", path)),
            width_home=float(_require(width, "home", path)),
            boxes=tuple(boxes),
            approach_axis=doc.get("approach_axis"),
            name=doc.get("name", "gripper"),
            version=int(doc.get("version", GRIPPER_SCHEMA_VERSION)))
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None


def save_gripper(gripper: GripperModel, directory,
                 stem: str | None = None) -> str:
    """Write a gripper as <stem>.json plus two patch PLY files.

    Returns the model file path; the written bundle loads back through
    load_gripper.
    """
    os.makedirs(directory, exist_ok=True)
    stem = stem or gripper.name
    f1 = f"{stem}_finger1.ply"
    f2 = f"{stem}_finger2.ply"
    save_ply(os.path.join(directory, f1), gripper.finger1)
    save_ply(os.path.join(directory, f2), gripper.finger2)
    doc = {
        "name": gripper.name,
        "version": gripper.version,
        "units": "m",
        "opening_axis": [float(v) for v in gripper.opening_axis],
        "width": {"min": gripper.width_min,
                  "max": gripper.width_max,
                  "home": gripper.width_home},
        "fingers": [{"patch": f1, "normals": "inward"},
                    {"patch": f2, "normals": "inward"}],
        "collision_boxes": [{
            "center": [float(v) for v in b.center],
            "axes": [[float(v) for v in row] for row in b.axes],
            "half_extents": [float(v) for v in b.half_extents],
            "width_coupling": b.width_coupling,
        } for b in gripper.boxes],
    }
    if gripper.approach_axis is not None:
        doc["approach_axis"] = [float(v) for v in gripper.approach_axis]
    model_path = os.path.join(directory, f"{stem}.json")
    with open(model_path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return model_path


def _candidate_doc(c, include_matrices: bool) -> dict:
    doc = {
        "rotation_wxyz": [float(v) for v in rotation_to_quaternion(c.motion.rotation)],
        "translation": [float(v) for v in c.motion.translation],
        "width": float(c.width),
        "fitting_error": float(c.fitting_error),
        "collision_free": bool(c.collision_free),
        "seed_center": int(c.center_index),
        "sample": int(c.sample_index),
    }
    if include_matrices:
        doc["rotation_matrix"] = [[float(v) for v in row]
                                  for row in c.motion.rotation]
    return doc


def save_result(result: PlanResult, path, config: dict | None = None,
                include_timing: bool = False,
                include_matrices: bool = False) -> None:
    """Write a plan result as JSON.

    Timing is opt-in because it varies run to run; without it, identical
    plans produce byte-identical files.
    """
    doc = {
        "schema_version": RESULT_SCHEMA_VERSION,
        "units": "m",
        "seed": result.seed,
        "config": config or {},
        "n_samples": len(result.records),
        "n_candidates": len(result.candidates),
        "n_collision_free": len(result.collision_free),
        "candidates": [_candidate_doc(c, include_matrices)
                       for c in result.candidates],
    }
    if include_timing:
        doc["timing"] = {"elapsed_s": result.elapsed,
                         "per_sample_s": result.elapsed / max(1, len(result.records))}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_result(path) -> dict:
    """Read a result file back, attaching a ``motion`` RigidMotion to each
    candidate dict after checking its quaternion is unit length."""
    with open(path, "r") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != RESULT_SCHEMA_VERSION:
        raise ParseError(f"{path}: unsupported schema {doc.get('schema_version')!r}")
    for c in doc["candidates"]:
        quat = np.asarray(c["rotation_wxyz"], dtype=np.float64)
        if abs(np.linalg.norm(quat) - 1.0) > 1e-9:
            raise ParseError(f"{path}: non-unit quaternion {quat}")
        c["motion"] = RigidMotion(quaternion_to_rotation(quat),
                                  np.asarray(c["translation"], dtype=np.float64))
    return doc


def export_pose_plys(result: PlanResult, gripper: GripperModel, directory,
                     top: int = 5) -> list:
    """Write the posed contact surface of the top collision-free grasps,
    one PLY per grasp. Returns the written paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    for rank, c in enumerate(result.collision_free[:top]):
        posed = apply_motion(gripper.contact_cloud(c.width), c.motion)
        out = os.path.join(directory, f"grasp_{rank:02d}.ply")
        save_ply(out, posed)
        paths.append(out)
    return paths
