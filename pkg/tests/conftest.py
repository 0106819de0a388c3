import math

import numpy as np
import pytest

from adaptmag.model import MeasurementModel


@pytest.fixture
def ideal_model():
    return MeasurementModel(f0=1.0, f1=1.0, t2_star=math.inf, tau_min=20e-9)


@pytest.fixture
def paper_model():
    return MeasurementModel()  # F0=0.88, F1=0.98, T2*=96us, tau_min=20ns


def random_model(rng: np.random.Generator) -> MeasurementModel:
    f0 = rng.choice([0.75, 0.88, 1.0])
    f1 = rng.choice([0.98, 0.993, 1.0])
    t2 = rng.choice([5e-6, 96e-6, math.inf])
    return MeasurementModel(f0=float(f0), f1=float(f1), t2_star=float(t2), tau_min=20e-9)
