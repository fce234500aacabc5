import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crspec._kernels import available_backends
from crspec.acceptance import grid_a1
from crspec.waterfill import multilevel_wf, price_wf, price_wf_batch, solve_a1, solve_multi_mu, standard_wf

BACKENDS = available_backends()
gains = st.lists(st.floats(0.01, 100.0), min_size=1, max_size=6)


def _rate(lam, sigma):
    return float(np.sum(np.log2(1 + np.asarray(lam) * sigma)))


def test_standard_wf_examples():
    assert np.allclose(standard_wf([1.0, 1.0], 2.0).sigma, [1.0, 1.0])
    a = standard_wf([4.0, 1.0], 0.5)
    assert np.allclose(a.sigma, [0.5, 0.0])
    assert np.isclose(standard_wf([2.0], 3.0).sigma[0], 3.0)
    with pytest.raises(ValueError):
        standard_wf([1.0, 0.0], 1.0)


@settings(max_examples=80, deadline=None)
@given(lam=gains, P=st.floats(0.0, 50.0))
def test_standard_wf_kkt(lam, P):
    a = standard_wf(lam, P)
    lam = np.asarray(lam)
    assert np.isclose(a.power, P, rtol=1e-10, atol=1e-12)
    assert np.all(a.sigma >= 0)
    # active channels sit on the common water level, inactive ones above it
    level = a.sigma + 1 / lam
    on = a.sigma > 1e-12 * max(P, 1)
    if P > 0:
        assert np.allclose(level[on], 1 / a.nu, rtol=1e-9)
        assert np.all(1 / lam[~on] >= 1 / a.nu * (1 - 1e-9))


def test_multilevel_wf_formula():
    # levels 1/(nu + alpha*mu) minus 1/lam, clipped at zero
    s = multilevel_wf([2.0, 1.0], [[1.0, 0.0]], 0.5, [0.5])
    assert np.allclose(s, [1.0 - 0.5, 2.0 - 1.0])
    assert np.allclose(multilevel_wf([2.0, 1.0], [1.0, 0.0], 0.5, 2.0), [0.0, 1.0])


def test_solve_a1_matches_grid_oracle_on_reference_instance():
    lam, alpha = np.array([4.0, 1.0]), np.array([1.0, 0.1])
    a = solve_a1(lam, alpha, 2.0, 0.3)
    assert np.isclose(alpha @ a.sigma, 0.3, rtol=1e-9)
    assert a.power <= 2.0 * (1 + 1e-12)
    assert abs(_rate(lam, a.sigma) - grid_a1(lam, alpha, 2.0, 0.3)) <= 1e-3
    assert _rate(lam, a.sigma) >= grid_a1(lam, alpha, 2.0, 0.3) - 1e-9


def test_solve_a1_slack_cap_is_plain_waterfilling():
    a = solve_a1([4.0, 1.0], [0.01, 0.01], 2.0, 1.0)
    assert a.mu[0] == 0
    assert np.allclose(a.sigma, standard_wf([4.0, 1.0], 2.0).sigma)


def test_solve_a1_zero_cap_nulls_coupled_channels():
    a = solve_a1([4.0, 1.0], [1.0, 0.0], 2.0, 0.0)
    assert np.allclose(a.sigma, [0.0, 2.0])


@settings(max_examples=60, deadline=None)
@given(
    lam=st.lists(st.floats(0.05, 20.0), min_size=2, max_size=5),
    data=st.data(),
    P=st.floats(0.1, 20.0),
    gamma=st.floats(1e-3, 2.0),
)
def test_solve_a1_feasible_and_not_beaten_by_scaled_waterfilling(lam, data, P, gamma):
    alpha = np.array(data.draw(st.lists(st.floats(0.0, 1.0), min_size=len(lam), max_size=len(lam))))
    a = solve_a1(lam, alpha, P, gamma)
    assert a.power <= P * (1 + 1e-9)
    assert alpha @ a.sigma <= gamma * (1 + 1e-9) + 1e-12
    wf = standard_wf(lam, P).sigma
    used = alpha @ wf
    scaled = wf * min(1.0, gamma / used) if used > 0 else wf
    assert _rate(lam, a.sigma) >= _rate(lam, scaled) - 1e-9


@pytest.mark.parametrize("seed", range(10))
def test_solve_multi_mu_single_cap_agrees_with_solve_a1(seed):
    rng = np.random.default_rng(seed)
    lam, alpha = rng.exponential(size=3) + 0.05, rng.exponential(0.3, size=3)
    a = solve_a1(lam, alpha, 5.0, 0.2)
    b = solve_multi_mu(lam, alpha[None, :], 5.0, [0.2])
    assert abs(_rate(lam, a.sigma) - _rate(lam, b.sigma)) <= 1e-8


@pytest.mark.parametrize("seed", range(10))
def test_solve_multi_mu_feasible(seed):
    rng = np.random.default_rng(100 + seed)
    lam, A = rng.exponential(size=4) + 0.05, rng.exponential(0.3, size=(3, 4))
    Gam = np.array([0.1, 0.3, 0.05])
    b = solve_multi_mu(lam, A, 10.0, Gam)
    assert b.power <= 10.0 * (1 + 1e-9)
    assert np.all(A @ b.sigma <= Gam * (1 + 1e-9) + 1e-12)


def test_price_wf_batch_matches_rowwise():
    rng = np.random.default_rng(7)
    lam, alpha = rng.exponential(size=(6, 2)) + 0.1, rng.exponential(0.2, size=(6, 2))
    sig, mu = price_wf_batch(lam, alpha, 0.4, 0.1)
    for n in range(6):
        row = price_wf(lam[n], alpha[n], 0.4, 0.1)
        assert np.allclose(sig[n], row.sigma, atol=1e-12)
        assert np.isclose(mu[n], row.mu[0], rtol=1e-9, atol=1e-14)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled core not built")
@pytest.mark.parametrize("seed", range(5))
def test_backends_agree(seed):
    rng = np.random.default_rng(seed)
    lam, alpha = rng.exponential(size=5) + 0.05, rng.exponential(0.3, size=5)
    A = rng.exponential(0.3, size=(2, 5))
    for fn in (
        lambda b: standard_wf(lam, 3.0, backend=b).sigma,
        lambda b: solve_a1(lam, alpha, 3.0, 0.1, backend=b).sigma,
        lambda b: solve_multi_mu(lam, A, 3.0, [0.1, 0.2], backend=b).sigma,
        lambda b: price_wf(lam, alpha, 0.3, 0.1, backend=b).sigma,
    ):
        assert np.allclose(fn("cython"), fn("python"), atol=1e-12)
