import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fclife import SynthSpec
from fclife.synth import signal_range

# 3-regime family used across the fitting tests: boundaries at logf 2 and 5
# on a [0, 7] axis, cubics with clear jumps at the switches
TEST_REGIMES = (
    (0.01, -0.02, 0.004, 0.0006),
    (0.14, -0.09, 0.014, -0.0009),
    (-0.8, 0.35, -0.05, 0.0024),
)
TEST_FREQ_RANGE = (1.0, math.exp(7.0))
TEST_BOUNDARIES = (2.0, 5.0)


def make_spec(seed=0, noise_frac=0.01, n_points=50, **kw) -> SynthSpec:
    base = SynthSpec(
        n_points=n_points,
        freq_range_hz=TEST_FREQ_RANGE,
        boundaries_logf=TEST_BOUNDARIES,
        regimes=TEST_REGIMES,
        noise_sigma=0.0,
        seed=seed,
        **kw,
    )
    if noise_frac == 0.0:
        return base
    sigma = noise_frac * signal_range(base)
    return SynthSpec(
        n_points=n_points,
        freq_range_hz=TEST_FREQ_RANGE,
        boundaries_logf=TEST_BOUNDARIES,
        regimes=TEST_REGIMES,
        noise_sigma=sigma,
        seed=seed,
        **kw,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
