import numpy as np
import pytest

from teleokit import kinematics as kin
from teleokit import models


@pytest.fixture(scope="session")
def planar_arm():
    return kin.load_model(models.builtin_text("planar_2link"))


@pytest.fixture(scope="session")
def arm7():
    return kin.load_model(models.builtin_text("arm7"))


@pytest.fixture(scope="session")
def fourbar_hand():
    return kin.load_model(models.builtin_text("fourbar_hand"))


@pytest.fixture(scope="session")
def dual_arm():
    return kin.load_model(models.builtin_text("dual_arm7"))


@pytest.fixture(scope="session")
def compact_dual():
    return kin.load_model(models.builtin_text("compact_dual"))


def random_active_q(model, rng, margin=0.02):
    """Uniform sample strictly inside the active joint limits."""
    lo, hi = model.active_lower(), model.active_upper()
    span = hi - lo
    return lo + span * (margin + (1 - 2 * margin) * rng.random(model.k))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
