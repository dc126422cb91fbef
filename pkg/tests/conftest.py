import numpy as np
import pytest

from pacal.geometry.gallery import build_kind
from pacal.schemas import parse_run_config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def flat():
    return build_kind("flat", 2)


@pytest.fixture
def rotation():
    return build_kind("rotation2d", 2, omega=[1.0, 0.5])


@pytest.fixture
def scaling():
    return build_kind("scaling", 2)


@pytest.fixture
def mixed():
    return build_kind("mixed_exp2d", 2)


@pytest.fixture
def poly():
    return build_kind("polynomial", 2, degree=2, scale=0.05, seed=3)


@pytest.fixture
def kink():
    return build_kind("kink", 2)


@pytest.fixture
def make_config(tmp_path):
    def make(kind="flat", dim=2, **overrides):
        data = {"space": {"kind": kind, "dim": dim}, "output": {"format": "both", "path": str(tmp_path / "out")}}
        data.update(overrides)
        return parse_run_config(data)

    return make


def interior_points(sys, rng, count, margin=0.2):
    return [sys.domain.sample(rng, margin) for _ in range(count)]
