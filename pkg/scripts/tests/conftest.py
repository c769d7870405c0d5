# Author: LU, Rīgas Meži, SunGIS
# Created: 2025
# License: EUPL License

# Dependencies: environment.yml
# Python Version: 3.12+

import math

import pytest

from hill import potential
from hill.config import HillConfig
from hill.potential import PotentialSpec


@pytest.fixture
def zero() -> PotentialSpec:
    return potential.builtin("zero")


@pytest.fixture
def mathieu() -> PotentialSpec:
    return potential.builtin("mathieu", {"c": 1.0})


@pytest.fixture
def delta_comb() -> PotentialSpec:
    return potential.builtin("delta_comb", {"s": 1.0, "x0": math.pi / 2, "F": 16})


@pytest.fixture
def gasymov() -> PotentialSpec:
    return potential.builtin("gasymov", {"s": 1.0, "r": 0.5, "F": 16})


@pytest.fixture
def config(tmp_path) -> HillConfig:  # noqa: ANN001
    return HillConfig(config={"PRINT_PROGRESS_BAR": False, "THREADS": 1, "OUTPUT_PATH": str(tmp_path)})
