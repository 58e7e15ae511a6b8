import numpy as np
import pytest

from pepr.models import cnot_model, hadamard_model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def hadamard():
    return hadamard_model()


@pytest.fixture
def cnot():
    return cnot_model()


# exact sine-mode realization of the Hadamard gate with two modes per channel,
# found by least squares against the Bloch map of the target; state infidelity
# is at the integrator floor (~4e-15 at steps_pow2=14)
HADAMARD_EXACT_COEFFS = np.array([
    [-2.3717141090990363, -2.0327904901384355],
    [-1.1824754350336455, 0.9297171362138792],
])
