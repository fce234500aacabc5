import numpy as np
import pytest

from crspec.model import ChannelSet, Covariance, achievable_rate, expand_per_antenna, interference_power
from conftest import cscg, random_cs


def test_channelset_validation(rng):
    H = cscg(rng, (2, 3))
    with pytest.raises(ValueError):
        ChannelSet(H, (cscg(rng, (1, 2)),), 1.0, (0.1,))
    with pytest.raises(ValueError):
        ChannelSet(H, (cscg(rng, (1, 3)),), 1.0, ())
    with pytest.raises(ValueError):
        ChannelSet(H, (), -1.0, ())
    with pytest.raises(ValueError):
        ChannelSet(np.ones((2, 3)), (), 1.0, ())  # rank one


def test_channelset_is_immutable_and_miso_row():
    cs = random_cs(0, M_rs=1)
    assert cs.H.shape == (1, 4)
    with pytest.raises(ValueError):
        cs.H[0, 0] = 1.0
    assert ChannelSet(np.array([1.0, 2.0])).H.shape == (1, 2)


def test_covariance_roundtrip_and_psd_check(rng):
    X = cscg(rng, (3, 2))
    S = X @ X.conj().T
    c = Covariance.from_matrix(S)
    assert c.rank == 2
    assert np.isclose(c.trace, np.trace(S).real)
    assert np.allclose(Covariance.from_factors(c.V, c.sigma).S, S)
    with pytest.raises(ValueError):
        Covariance.from_matrix(np.diag([1.0, -1.0]))
    assert c.scaled(0).rank == 0
    assert np.isclose(c.scaled(2).trace, 2 * c.trace)


def test_siso_rate_and_interference():
    assert np.isclose(achievable_rate([[3.0]], [[1.0]]), 2.0)
    assert np.isclose(interference_power(np.eye(2), [[1.0, 1.0j]]), 2.0)


def test_expand_per_antenna():
    cs = random_cs(1, K=2, M_k=2)
    ex = expand_per_antenna(cs, [0.1, 0.2])
    assert ex.K == 4 and ex.Gamma == (0.1, 0.1, 0.2, 0.2)
    assert np.allclose(ex.G_stacked, cs.G_stacked)
