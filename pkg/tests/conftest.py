import numpy as np
import pytest

from crspec.model import ChannelSet


def cscg(rng, shape, var=1.0):
    return np.sqrt(var / 2) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def random_cs(seed, M_ts=4, M_rs=2, K=1, M_k=1, P_t=10.0, gamma=0.1, var_G=0.1):
    rng = np.random.default_rng(seed)
    H = cscg(rng, (M_rs, M_ts))
    G = tuple(cscg(rng, (M_k, M_ts), var_G) for _ in range(K))
    return ChannelSet(H, G, P_t, (gamma,) * K)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
