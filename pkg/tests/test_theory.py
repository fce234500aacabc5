import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crspec.mimo import dsvd, psvd, solve_p1
from crspec.theory import PrimaryLink, capacity_loss_actual, capacity_loss_bound, multiplexing_slope
from conftest import cscg, random_cs


def test_capacity_loss_bound_value():
    assert capacity_loss_bound(2, 3, 3.0, 1.0) == 4.0
    assert capacity_loss_bound(1, 1, 0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        capacity_loss_bound(0, 1, 1.0, 1.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), M_k=st.integers(1, 3), N_k=st.integers(1, 3), Gamma=st.floats(0.0, 5.0))
def test_actual_loss_never_exceeds_bound(seed, M_k, N_k, Gamma):
    rng = np.random.default_rng(seed)
    H_k, G_k = cscg(rng, (M_k, N_k)), cscg(rng, (M_k, 3), 0.1)
    X = cscg(rng, (N_k, N_k))
    S_k = X @ X.conj().T * 10
    Y = cscg(rng, (3, 3))
    S = Y @ Y.conj().T
    used = np.trace(G_k @ S @ G_k.conj().T).real
    S = S * (Gamma / used)  # the interference cap holds with equality
    p = PrimaryLink(H_k, S_k, 1.0, G_k, S)
    assert capacity_loss_actual(p) <= capacity_loss_bound(M_k, N_k, Gamma, 1.0) + 1e-9


def test_no_interference_no_loss(rng):
    p = PrimaryLink(cscg(rng, (2, 2)), np.eye(2), 1.0, cscg(rng, (2, 3)), np.zeros((3, 3)))
    assert capacity_loss_actual(p) == 0.0


def test_primary_link_validation(rng):
    with pytest.raises(ValueError):
        PrimaryLink(cscg(rng, (2, 2)), np.eye(3), 1.0, cscg(rng, (2, 3)), np.eye(3))
    with pytest.raises(ValueError):
        PrimaryLink(cscg(rng, (2, 2)), np.eye(2), 0.0, cscg(rng, (2, 3)), np.eye(3))


def test_slope_of_exact_log_curve():
    P = np.logspace(2, 5, 7)
    assert np.isclose(multiplexing_slope(lambda p: 2 * np.log2(p) + 1, P), 2.0)
    assert np.isclose(multiplexing_slope(np.full(7, 3.0), P), 0.0)
    with pytest.raises(ValueError):
        multiplexing_slope(np.ones(2), [1.0, 10.0])


@pytest.mark.parametrize("seed", range(3))
def test_high_power_slopes(seed):
    cs = random_cs(seed, M_ts=2, M_rs=2, K=1, gamma=0.1)
    P = [1e3, 1e4, 1e5]
    rate = lambda fn: (lambda p: fn(cs.replace(P_t=p)).rate)  # noqa: E731
    assert 0.9 <= multiplexing_slope(rate(solve_p1), P) <= 1.1
    assert 0.9 <= multiplexing_slope(rate(psvd), P) <= 1.1
    assert multiplexing_slope(rate(dsvd), P) <= 0.05
