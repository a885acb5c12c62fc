import numpy as np
import pytest

from diffcsi.capacity import CapacityConfig
from diffcsi.channel import ChannelParams


@pytest.fixture
def params():
    """Reference configuration: 2x2, unit channel variance, noisy estimate."""
    return ChannelParams(n_t=2, n_r=2, sigma_h2=1.0, sigma_hhat2=1.2,
                         f_d=9.26, t_block=1e-3)


@pytest.fixture
def params_perfect():
    """Perfect estimation (sigma_hhat2 == sigma_h2)."""
    return ChannelParams(n_t=2, n_r=2, sigma_h2=1.0, sigma_hhat2=1.0,
                         f_d=9.26, t_block=1e-3)


@pytest.fixture
def cap_cfg(params):
    return CapacityConfig(params=params, snr_db=0.0, l_block=100)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
