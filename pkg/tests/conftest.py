import numpy as np
import pytest

from graspfit import RigidMotion, SpatialIndex, exp_map, fixtures


@pytest.fixture(scope="session")
def cylinder_cloud():
    return fixtures.cylinder()


@pytest.fixture(scope="session")
def cylinder_index(cylinder_cloud):
    return SpatialIndex(cylinder_cloud)


@pytest.fixture(scope="session")
def gripper():
    return fixtures.default_gripper()


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def perturbed_start(angle_deg, translation, seed=7):
    """Seed pose near the cylinder fit: a rotation of the given angle about
    a generic axis plus the given translation."""
    gen = np.random.default_rng(seed)
    axis = gen.normal(size=3)
    axis /= np.linalg.norm(axis)
    return RigidMotion(exp_map(axis * np.deg2rad(angle_deg)),
                       np.asarray(translation, dtype=np.float64))
