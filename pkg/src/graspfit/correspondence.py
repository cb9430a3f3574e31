"""Correspondence matching and outlier/duplicate filtering.

Pairs each transformed gripper contact point with its nearest object
point, then rejects pairs that are too far apart and, where several
sources share one target, keeps only the closest. The contact surfaces
overlap the object only partially, so this filtering is what keeps the
fit from being dragged by spurious matches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import AllFiltered
from .geometry import SpatialIndex, SurfaceCloud


class CorrespondencePair(NamedTuple):
    source: np.ndarray
    source_normal: np.ndarray
    target: np.ndarray
    target_normal: np.ndarray
    finger: int
    distance: float


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched pairs in struct-of-arrays form.

    ``finger`` holds the source finger label (1 or 2); ``target_index``
    the matched object point index, used by duplicate filtering.
    """

    source_points: np.ndarray
    source_normals: np.ndarray
    target_points: np.ndarray
    target_normals: np.ndarray
    finger: np.ndarray
    target_index: np.ndarray
    distance: np.ndarray

    def __len__(self) -> int:
        return len(self.source_points)

    def __getitem__(self, i: int) -> CorrespondencePair:
        return CorrespondencePair(
            self.source_points[i], self.source_normals[i],
            self.target_points[i], self.target_normals[i],
            int(self.finger[i]), float(self.distance[i]))

    def take(self, idx) -> "CorrespondenceSet":
        return CorrespondenceSet(
            self.source_points[idx], self.source_normals[idx],
            self.target_points[idx], self.target_normals[idx],
            self.finger[idx], self.target_index[idx], self.distance[idx])


def match(gripper_sample: SurfaceCloud, object_index: SpatialIndex) -> CorrespondenceSet:
    """Pair every sampled contact point with its nearest object point.

    The sample must carry finger labels; the result is unfiltered (one
    pair per source point).
    """
    if gripper_sample.labels is None:
        raise ValueError("gripper sample must carry finger labels")
    src = gripper_sample.points
    idx = object_index.nearest_indices(src)
    tgt = object_index.cloud.points[idx]
    dist = np.sqrt(np.sum((tgt - src) ** 2, axis=1))
    return CorrespondenceSet(
        source_points=src,
        source_normals=gripper_sample.normals,
        target_points=tgt,
        target_normals=object_index.cloud.normals[idx],
        finger=gripper_sample.labels,
        target_index=idx,
        distance=dist)


def filter_pairs(pairs: CorrespondenceSet, max_distance: float) -> CorrespondenceSet:
    """Drop over-distance pairs and duplicate matches to the same target.

    Among pairs sharing a target point only the minimum-distance pair
    survives (ties go to the lowest source index). Output keeps the
    original source order. Raises AllFiltered when nothing survives.
    """
    if max_distance <= 0.0:
        raise ValueError(f"max_distance must be positive, got {max_distance}")
    keep = np.nonzero(pairs.distance <= max_distance)[0]
    if len(keep) > 0:
        # sort by (target, distance, source order); first row per target wins
        order = np.lexsort((keep, pairs.distance[keep], pairs.target_index[keep]))
        sorted_keep = keep[order]
        _, first = np.unique(pairs.target_index[sorted_keep], return_index=True)
        keep = np.sort(sorted_keep[first])
    if len(keep) == 0:
        raise AllFiltered(
            f"no pair within {max_distance:.6g} m of {len(pairs)} matches")
    return pairs.take(keep)


def adaptive_threshold(pairs: CorrespondenceSet, floor: float, scale: float,
                       ceiling: float | None = None) -> float:
    """Outlier cutoff for the current match: max(floor, scale * median distance).

    Scale-adaptive so it tolerates bad early alignment and tightens as the
    fit improves. The optional ceiling caps the cutoff at an absolute
    distance beyond which matches are meaningless regardless of the
    median, letting a hopeless start empty the pair set.
    """
    tau = max(floor, scale * float(np.median(pairs.distance)))
    if ceiling is not None:
        if ceiling < floor:
            raise ValueError(f"ceiling {ceiling} below floor {floor}")
        tau = min(tau, ceiling)
    return tau
