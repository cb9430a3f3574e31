"""Tests for the scikit-learn style estimator wrappers."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from graspfit import (GraspPlanner, RigidMotion, SurfaceFitter, fixtures, plan,
                      run_isf)

from test_isf import ten_mm_start


@pytest.fixture(scope="module")
def object_matrix():
    cloud = fixtures.cylinder()
    return np.hstack([cloud.points, cloud.normals]), cloud


class TestSurfaceFitter:
    def test_fit_matches_functional_core(self, object_matrix, gripper):
        X, cloud = object_matrix
        est = SurfaceFitter(gripper=gripper, initial_motion=ten_mm_start())
        est.fit(X)
        direct = run_isf(ten_mm_start(), gripper.width_home, cloud, gripper)
        np.testing.assert_array_equal(est.motion_.rotation,
                                      direct.motion.rotation)
        np.testing.assert_array_equal(est.motion_.translation,
                                      direct.motion.translation)
        assert est.width_ == direct.width
        assert est.error_ == direct.fitting_error
        assert est.converged_ == direct.converged

    def test_transform_applies_fitted_pose(self, object_matrix, gripper):
        X, _ = object_matrix
        est = SurfaceFitter(gripper=gripper).fit(X)
        pts = gripper.contact_cloud().points[:5]
        np.testing.assert_allclose(est.transform(pts),
                                   est.motion_.transform_points(pts))
        np.testing.assert_allclose(est.inverse_transform(est.transform(pts)),
                                   pts, atol=1e-12)

    def test_score_is_negative_error(self, object_matrix, gripper):
        X, _ = object_matrix
        est = SurfaceFitter(gripper=gripper).fit(X)
        assert est.score() == -est.error_

    def test_unfitted_raises(self, gripper):
        est = SurfaceFitter(gripper=gripper)
        with pytest.raises(NotFittedError):
            est.transform(np.zeros((1, 3)))

    def test_clone_round_trip(self, gripper):
        est = SurfaceFitter(gripper=gripper, levels=3, tolerance=0.01)
        cloned = clone(est)
        assert cloned.get_params()["levels"] == 3
        assert cloned.get_params()["tolerance"] == 0.01

    def test_points_only_input_estimates_normals(self, gripper):
        cloud = fixtures.cylinder(n_points=600)
        est = SurfaceFitter(gripper=gripper, initial_motion=RigidMotion.identity())
        est.fit(cloud.points)
        assert np.isfinite(est.error_)

    def test_rejects_bad_shapes(self, gripper):
        est = SurfaceFitter(gripper=gripper)
        with pytest.raises(ValueError):
            est.fit(np.zeros((10, 4)))

    def test_gripper_path_accepted(self, tmp_path, object_matrix):
        from graspfit.io import save_gripper
        X, _ = object_matrix
        path = save_gripper(fixtures.default_gripper(), tmp_path)
        est = SurfaceFitter(gripper=path).fit(X)
        assert np.isfinite(est.error_)


class TestGraspPlanner:
    def test_fit_matches_functional_core(self, object_matrix, gripper):
        X, cloud = object_matrix
        est = GraspPlanner(gripper=gripper, n_samples=8, random_state=3).fit(X)
        direct = plan(cloud, gripper, n_samples=8, seed=3)
        assert est.regret_.tolist() == list(direct.regret)
        assert est.trial_.tolist() == list(direct.trial)
        assert len(est.candidates_) == len(direct.candidates)
        np.testing.assert_array_equal(est.centers_, direct.centers)

    def test_fit_attributes(self, object_matrix, gripper):
        X, _ = object_matrix
        est = GraspPlanner(gripper=gripper, n_samples=10, random_state=0).fit(X)
        assert est.feasible_
        assert est.best_ is not None
        assert est.best_.collision_free
        assert est.score() == -est.best_.fitting_error

    def test_unfitted_raises(self, gripper):
        with pytest.raises(NotFittedError):
            GraspPlanner(gripper=gripper).score()

    def test_clone_keeps_params(self, gripper):
        est = GraspPlanner(gripper=gripper, n_samples=12, collision_penalty=0.5)
        params = clone(est).get_params()
        assert params["n_samples"] == 12
        assert params["collision_penalty"] == 0.5

    def test_infeasible_sets_flag(self, object_matrix, gripper, monkeypatch):
        import graspfit.planner as planner_mod
        monkeypatch.setattr(planner_mod, "collide", lambda *a, **k: True)
        X, _ = object_matrix
        est = GraspPlanner(gripper=gripper, n_samples=4, random_state=0).fit(X)
        assert not est.feasible_
        assert est.best_ is None
        assert est.score() == -np.inf
