import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crspec.mimo import (
    HybridConfig,
    NotImplementableError,
    best_hybrid,
    dsvd,
    hybrid,
    psvd,
    solve_p1,
    unconstrained_capacity,
    white_spectrum,
)
from crspec.model import ChannelSet
from conftest import random_cs

TOL = 1e-9


def _feasible(r, cs):
    assert r.tx_power <= cs.P_t * (1 + TOL) + 1e-12
    assert np.all(r.interference <= np.asarray(cs.Gamma) * (1 + TOL) + 1e-12)


def _embed(M):
    return np.block([[M.real, -M.imag], [M.imag, M.real]])


def cvx_capacity(cs):
    """Reference capacity from a generic conic solver on the real embedding."""
    cp = pytest.importorskip("cvxpy")
    n = cs.M_ts
    X = cp.Variable((2 * n, 2 * n), PSD=True)
    cons = [X[:n, :n] == X[n:, n:], X[:n, n:] == -X[n:, :n], cp.trace(X) / 2 <= cs.P_t]
    for G, cap in zip(cs.G, cs.Gamma):
        Gr = _embed(G)
        cons.append(cp.trace(Gr @ X @ Gr.T) / 2 <= cap)
    Hr = _embed(cs.H)
    obj = cp.log_det(np.eye(2 * cs.M_rs) + Hr @ X @ Hr.T) / 2
    prob = cp.Problem(cp.Maximize(obj), cons)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        prob.solve(solver="CLARABEL")
    return prob.value / np.log(2)


@pytest.mark.parametrize("seed", range(6))
def test_solve_p1_matches_conic_solver(seed):
    cs = random_cs(seed, M_ts=3, M_rs=2, K=2, M_k=1, P_t=10.0, gamma=0.05)
    r = solve_p1(cs)
    assert abs(r.rate - cvx_capacity(cs)) <= 1e-5


@pytest.mark.parametrize("seed", range(10))
def test_solve_p1_certified_and_feasible(seed):
    cs = random_cs(seed, M_ts=4, M_rs=4, K=2, M_k=2, P_t=10.0, gamma=0.1)
    r = solve_p1(cs)
    _feasible(r, cs)
    assert r.gap <= 1e-9 and r.converged
    assert r.info["dual_bits"] >= r.rate - 1e-12
    assert r.dual.nu >= 0 and np.all(r.dual.mu >= 0)


def test_solve_p1_without_caps_is_waterfilling():
    cs = random_cs(3, K=0)
    assert abs(solve_p1(cs).rate - unconstrained_capacity(cs).rate) <= 1e-12


def test_solve_p1_zero_cap_restricts_to_null_space():
    cs = random_cs(4, M_ts=4, M_rs=2, K=2, gamma=0.0)
    r = solve_p1(cs)
    assert np.all(r.interference <= 1e-12)
    assert abs(r.rate - psvd(cs).rate) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 10**6),
    P=st.floats(0.5, 200.0),
    gamma=st.floats(0.0, 1.0),
    shape=st.sampled_from([(2, 2, 1), (3, 2, 2), (4, 4, 2), (4, 1, 1)]),
)
def test_method_ordering(seed, P, gamma, shape):
    M_ts, M_rs, K = shape
    cs = random_cs(seed, M_ts=M_ts, M_rs=M_rs, K=K, P_t=P, gamma=gamma)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        opt = solve_p1(cs)
        methods = [dsvd(cs), white_spectrum(cs), best_hybrid(cs)[1]]
    if M_ts > K:
        methods.append(psvd(cs))
    assert unconstrained_capacity(cs).rate >= opt.rate - 1e-6
    for r in methods:
        _feasible(r, cs)
        assert opt.rate >= r.rate - 1e-6, r.method


def test_dsvd_slack_cap_is_unconstrained():
    cs = random_cs(5, P_t=10.0, gamma=1e6)
    assert abs(dsvd(cs).rate - unconstrained_capacity(cs).rate) <= 1e-12


def test_psvd_nulls_and_refuses_without_null_space():
    cs = random_cs(6, M_ts=4, M_rs=2, K=2, M_k=1)
    r = psvd(cs)
    assert np.all(r.interference <= 1e-12)
    with pytest.raises(NotImplementableError):
        psvd(random_cs(6, M_ts=2, M_rs=2, K=2))


def test_hybrid_endpoints():
    cs = random_cs(7, M_ts=4, M_rs=4, K=2, gamma=0.1)
    assert np.isclose(hybrid(cs, 0).rate, dsvd(cs).rate, atol=1e-10)
    assert np.isclose(hybrid(cs, HybridConfig(2)).rate, psvd(cs).rate, atol=1e-8)
    with pytest.raises(ValueError):
        hybrid(cs, 3)
    with pytest.raises(ValueError):
        HybridConfig(-1)


def test_hybrid_prefers_zero_cap_receiver():
    rng = np.random.default_rng(8)
    cs = random_cs(8, M_ts=4, M_rs=4, K=2).replace(Gamma=(0.0, 0.5))
    r = hybrid(cs, 1)
    assert r.interference[0] <= 1e-12
    cfg, best = best_hybrid(cs)
    assert best.rate >= r.rate - 1e-12 and cfg.b in (0, 1, 2)


def test_white_spectrum_power():
    cs = random_cs(9, M_ts=4, K=1, P_t=100.0, gamma=0.01)
    r = white_spectrum(cs)
    G = cs.G[0]
    assert np.isclose(r.tx_power, min(100.0, 4 * 0.01 / np.sum(np.abs(G) ** 2)))
    assert np.allclose(r.S, r.tx_power / 4 * np.eye(4))


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("P_t,gamma", [(1.0, 0.01), (100.0, 0.1), (1.0, 10.0)])
def test_dsvd_miso_is_scaled_mrc(seed, P_t, gamma):
    cs = random_cs(seed, M_ts=4, M_rs=1, K=1, P_t=P_t, gamma=gamma)
    h, g = cs.H[0], cs.G[0][0]
    alpha = abs(g @ h.conj()) ** 2 / np.linalg.norm(h) ** 2
    v = np.sqrt(min(P_t, gamma / alpha)) * h.conj() / np.linalg.norm(h)
    assert np.allclose(dsvd(cs).S, np.outer(v, v.conj()), atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_dsvd_power_capped_by_weakest_coupling(seed):
    cs = random_cs(seed, M_ts=3, M_rs=3, K=1, P_t=1e4, gamma=0.1)
    r = dsvd(cs)
    U = np.linalg.svd(cs.H)[2].conj().T
    alpha = np.abs(cs.G[0] @ U)[0] ** 2
    assert r.tx_power <= 0.1 / alpha.min() * (1 + 1e-9)
