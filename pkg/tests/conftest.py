import numpy as np
import pytest

from gaussadapt import SynthSpec, generate


def unit_rows(rng, shape):
    """Random unit-norm rows."""
    m = rng.normal(size=shape)
    return m / np.linalg.norm(m, axis=-1, keepdims=True)


@pytest.fixture(scope="session")
def default_synth():
    """One draw of the default synthetic benchmark (N=2000, K=10, d=32)."""
    return generate(SynthSpec(seed=0))


@pytest.fixture(scope="session")
def small_synth():
    """A small draw for streaming tests (N=400)."""
    return generate(SynthSpec(n_per_class=40, seed=7))
