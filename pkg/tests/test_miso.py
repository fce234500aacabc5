import numpy as np
import pytest

from crspec.mimo import solve_p1
from crspec.miso import closed_form_beamformer, decompose, solve_p5
from crspec.model import ChannelSet
from conftest import cscg


def _pair(seed, n=4):
    rng = np.random.default_rng(seed)
    return cscg(rng, n), cscg(rng, n, 0.1)


def test_decompose_reconstructs_h():
    h, g = _pair(0)
    d = decompose(h, g)
    hh = h.conj()
    rebuilt = d.alpha_h * d.g_hat + d.beta_h * d.h_perp_hat
    assert np.allclose(rebuilt, hh)
    assert abs(np.vdot(d.g_hat, d.h_perp_hat)) < 1e-14
    assert np.isclose(np.linalg.norm(d.g_hat), 1) and np.isclose(np.linalg.norm(d.h_perp_hat), 1)


def test_closed_form_mrc_when_cap_loose():
    h, g = _pair(1)
    r = closed_form_beamformer(h, g, 1.0, 100.0)
    assert r.info["case"] == "mrc"
    assert np.isclose(r.rate, np.log2(1 + np.linalg.norm(h) ** 2))


def test_closed_form_split_meets_both_constraints():
    h, g = _pair(2)
    r = closed_form_beamformer(h, g, 100.0, 0.01)
    assert r.info["case"] == "split"
    assert np.isclose(r.tx_power, 100.0) and np.isclose(r.interference[0], 0.01)


def test_closed_form_orthogonal_and_parallel_cases():
    h = np.array([1.0, 0.0, 0.0])
    r = closed_form_beamformer(h, np.array([0.0, 1.0, 0.0]), 2.0, 0.0)
    assert r.info["case"] == "orthogonal" and np.isclose(r.rate, np.log2(3))
    r = closed_form_beamformer(h, 2 * h, 2.0, 0.4)
    assert r.info["case"] == "parallel" and np.isclose(r.tx_power, 0.1)


@pytest.mark.parametrize("seed", range(12))
@pytest.mark.parametrize("P_t,gamma", [(1.0, 0.01), (10.0, 0.1), (100.0, 1.0), (10.0, 0.0)])
def test_closed_form_equals_exact_solvers(seed, P_t, gamma):
    h, g = _pair(seed)
    cf = closed_form_beamformer(h, g, P_t, gamma)
    _, p5 = solve_p5(h, [g], P_t, [gamma])
    p1 = solve_p1(ChannelSet(h, [g], P_t, [gamma]))
    assert abs(cf.rate - p5.rate) <= 1e-7
    assert abs(cf.rate - p1.rate) <= 1e-7


@pytest.mark.parametrize("seed", range(8))
def test_solve_p5_multiple_caps_feasible_and_certified(seed):
    rng = np.random.default_rng(50 + seed)
    h = cscg(rng, 4)
    G = [cscg(rng, (1, 4), 0.1), cscg(rng, (2, 4), 0.1)]
    Gam = [0.02, 0.05]
    dual, r = solve_p5(h, G, 10.0, Gam)
    assert r.tx_power <= 10.0 * (1 + 1e-9)
    assert np.all(r.interference <= np.array(Gam) * (1 + 1e-9))
    assert r.gap <= 1e-8
    assert r.cov.rank == 1
    p1 = solve_p1(ChannelSet(h, G, 10.0, Gam))
    assert abs(r.rate - p1.rate) <= 1e-7
    assert dual.nu >= 0 and np.all(dual.mu >= 0)


def test_solve_p5_validation():
    with pytest.raises(ValueError):
        solve_p5(np.zeros(3), [np.ones(3)], 1.0, [0.1])
    with pytest.raises(ValueError):
        solve_p5(np.ones(3), [], 1.0, [])
