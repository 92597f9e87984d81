import numpy as np
import pytest

from pblab.poles import demo_state, integrate_poles


@pytest.fixture(scope="session")
def k2_traj():
    # one dense kappa=2 trajectory shared by the pole and Lax tests;
    # span covers every evaluation time used below
    return integrate_poles(demo_state(2), 3.5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(7)
