"""Tests for correspondence matching and outlier/duplicate filtering."""

import numpy as np
import pytest

from graspfit import (AllFiltered, SpatialIndex, SurfaceCloud,
                      adaptive_threshold, filter_pairs, match)

UP = [0.0, 0.0, 1.0]


def make_cloud(points, labels=None):
    points = np.asarray(points, dtype=np.float64)
    return SurfaceCloud(points, np.tile(UP, (len(points), 1)), labels)


def make_set(sources, targets, target_index=None, fingers=None):
    """Correspondence set straight from arrays, one pair per source."""
    sources = np.asarray(sources, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n = len(sources)
    from graspfit import CorrespondenceSet
    return CorrespondenceSet(
        source_points=sources,
        source_normals=np.tile(UP, (n, 1)),
        target_points=targets,
        target_normals=np.tile(UP, (n, 1)),
        finger=np.ones(n, dtype=np.intp) if fingers is None else np.asarray(fingers),
        target_index=np.arange(n) if target_index is None else np.asarray(target_index),
        distance=np.sqrt(np.sum((targets - sources) ** 2, axis=1)))


class TestMatch:
    def test_coincident_points_have_zero_distance(self, rng):
        pts = rng.uniform(-0.05, 0.05, size=(50, 3))
        obj = make_cloud(pts)
        sample = make_cloud(pts, labels=np.r_[np.ones(25, dtype=int),
                                              np.full(25, 2)])
        pairs = match(sample, SpatialIndex(obj))
        np.testing.assert_array_equal(pairs.distance, np.zeros(50))
        np.testing.assert_array_equal(pairs.target_index, np.arange(50))

    def test_single_source_matches_linear_scan(self):
        targets = np.array([[0.0, 0.0, 0.0], [0.01, 0.0, 0.0], [0.0, 0.02, 0.0]])
        source = np.array([[0.008, 0.001, 0.0]])
        pairs = match(make_cloud(source, labels=[1]),
                      SpatialIndex(make_cloud(targets)))
        d2 = np.sum((targets - source) ** 2, axis=1)
        assert pairs.target_index[0] == np.argmin(d2)

    def test_finger_labels_pass_through(self, gripper, cylinder_index):
        sample = gripper.contact_cloud()
        pairs = match(sample, cylinder_index)
        np.testing.assert_array_equal(pairs.finger, sample.labels)

    def test_requires_labels(self, cylinder_cloud, cylinder_index):
        with pytest.raises(ValueError):
            match(cylinder_cloud, cylinder_index)


class TestFilterPairs:
    def test_clean_set_unchanged(self):
        pairs = make_set([[0.0, 0.0, 0.0], [0.01, 0.0, 0.0]],
                         [[0.0, 0.0, 0.001], [0.01, 0.0, 0.002]])
        kept = filter_pairs(pairs, 0.005)
        assert len(kept) == 2
        np.testing.assert_array_equal(kept.source_points, pairs.source_points)

    def test_duplicate_target_keeps_minimum_distance(self):
        # two sources share target 0, at 2 mm and 5 mm
        pairs = make_set([[0.0, 0.0, 0.002], [0.0, 0.0, 0.005]],
                         [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
                         target_index=[0, 0])
        kept = filter_pairs(pairs, 1.0)
        assert len(kept) == 1
        assert kept.distance[0] == pytest.approx(0.002)

    def test_duplicate_tie_keeps_lowest_source(self):
        pairs = make_set([[0.0, 0.0, 0.002], [0.0, 0.002, 0.0]],
                         [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
                         target_index=[0, 0])
        kept = filter_pairs(pairs, 1.0)
        assert len(kept) == 1
        np.testing.assert_array_equal(kept.source_points[0], [0.0, 0.0, 0.002])

    def test_all_over_distance_raises(self):
        pairs = make_set([[0.0, 0.0, 0.1]], [[0.0, 0.0, 0.0]])
        with pytest.raises(AllFiltered):
            filter_pairs(pairs, 0.005)

    def test_idempotent(self, rng):
        n = 200
        sources = rng.uniform(-0.05, 0.05, size=(n, 3))
        targets = sources + rng.normal(scale=0.004, size=(n, 3))
        pairs = make_set(sources, targets,
                         target_index=rng.integers(0, 60, size=n))
        once = filter_pairs(pairs, 0.006)
        twice = filter_pairs(once, 0.006)
        np.testing.assert_array_equal(once.source_points, twice.source_points)
        np.testing.assert_array_equal(once.target_index, twice.target_index)

    def test_survivor_count_and_distance_bounds(self, rng):
        n = 300
        sources = rng.uniform(-0.05, 0.05, size=(n, 3))
        targets = sources + rng.normal(scale=0.004, size=(n, 3))
        target_index = rng.integers(0, 40, size=n)
        pairs = make_set(sources, targets, target_index=target_index)
        tau = 0.006
        kept = filter_pairs(pairs, tau)
        assert len(kept) <= min(n, len(np.unique(target_index)))
        assert kept.distance.max() <= tau
        # every discarded same-target competitor is no closer than its survivor
        best = {int(t): d for t, d in zip(kept.target_index, kept.distance)}
        for t, d in zip(pairs.target_index, pairs.distance):
            if d <= tau:
                assert d >= best[int(t)] or d == best[int(t)]

    def test_output_keeps_source_order(self, rng):
        n = 100
        sources = rng.uniform(-0.05, 0.05, size=(n, 3))
        targets = sources + rng.normal(scale=0.002, size=(n, 3))
        pairs = make_set(sources, targets, target_index=rng.integers(0, 30, size=n))
        kept = filter_pairs(pairs, 0.01)
        order = [np.flatnonzero((pairs.source_points == s).all(axis=1))[0]
                 for s in kept.source_points]
        assert order == sorted(order)

    def test_rejects_bad_threshold(self):
        pairs = make_set([[0.0, 0.0, 0.0]], [[0.0, 0.0, 0.0]])
        with pytest.raises(ValueError):
            filter_pairs(pairs, 0.0)


class TestAdaptiveThreshold:
    def test_floor_applies_when_close(self):
        pairs = make_set([[0.0, 0.0, 0.0]], [[0.0, 0.0, 1e-5]])
        assert adaptive_threshold(pairs, 0.005, 2.5) == 0.005

    def test_scales_with_median(self):
        pairs = make_set([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
                         [[0.0, 0.0, 0.004], [0.0, 0.0, 0.01], [0.0, 0.0, 0.02]])
        assert adaptive_threshold(pairs, 0.005, 2.5) == pytest.approx(0.025)
