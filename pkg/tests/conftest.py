import numpy as np
import pytest

from causal_text.data import DataRow
from causal_text.rng import derive_stream
from causal_text.synthgen import SynthParams, sample_coefficients


# Figure-style four-row tables used across modules
FIG_CONFOUNDING_ROWS = [
    DataRow(a=1, r_a=1, c=1, y=0),
    DataRow(a=0, r_a=1, c=1, y=1),
    DataRow(a=0, r_a=1, c=0, y=1),
    DataRow(a=1, r_a=1, c=0, y=1),
]

FIG_MISSING_ROWS = [
    DataRow(a=1, r_a=1, c=1, y=0),
    DataRow(a=None, r_a=0, c=1, y=1),
    DataRow(a=0, r_a=1, c=0, y=1),
    DataRow(a=None, r_a=0, c=0, y=1),
]

# (proxy, true) pairs of the mismeasurement table
FIG_MISMEASUREMENT_PAIRS = [(1, 1), (0, 1), (0, 0), (1, 1)]


@pytest.fixture(scope="session")
def small_synth():
    """Small-vocabulary coefficients for fast generator-based tests."""
    params = SynthParams(vocab_size=24, seed=123)
    coeffs = sample_coefficients(params, derive_stream(123, "coeffs"))
    return params, coeffs


def rng_for(*tags) -> np.random.Generator:
    return derive_stream(987, *tags)
