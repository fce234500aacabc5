import math

import numpy as np
import pytest

from crspec import harness
from crspec.harness import (
    CSV_FIELDS,
    ResultRow,
    ScenarioConfig,
    emit,
    gen_channels,
    parse,
    rng_for,
    run_scenario,
    run_trials,
)


def test_config_defaults_and_validation():
    cfg = ScenarioConfig("fig3")
    assert cfg.scenario == "fig3-svd" and (cfg.M_ts, cfg.M_rs, cfg.K, cfg.gamma) == (2, 2, 1, 0.1)
    assert cfg.P_t_grid[0] == 1.0 and cfg.P_t_grid[-1] == 100.0
    assert ScenarioConfig("fig5").P_t_grid == (10.0,)
    for bad in (dict(trials=0), dict(P_t_grid=[10.0, 1.0]), dict(P_t_grid=[0.0, 1.0]), dict(scenario="fig9")):
        with pytest.raises(ValueError):
            ScenarioConfig(**{"scenario": "fig3", **bad})
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({"scenario": "fig3", "bogus": 1})
    cfg = ScenarioConfig("fig4", trials=3)
    assert ScenarioConfig.from_dict(cfg.to_dict()) == cfg


def test_gen_channels_deterministic():
    cfg = ScenarioConfig("fig4", seed=7)
    a, b = gen_channels(cfg, 3), gen_channels(cfg, 3)
    assert np.array_equal(a.H, b.H) and all(np.array_equal(x, y) for x, y in zip(a.G, b.G))
    assert not np.array_equal(a.H, gen_channels(cfg, 4).H)


def test_keyed_generator_order_independent():
    first = rng_for(1, 5, "H").standard_normal(3)
    rng_for(1, 4, "H").standard_normal(3)
    assert np.array_equal(first, rng_for(1, 5, "H").standard_normal(3))


def test_channel_moments():
    cfg = ScenarioConfig("custom", M_ts=10, M_rs=10, K=1, M_k=10, trials=1000, seed=11)
    H = np.stack([gen_channels(cfg, t).H for t in range(1000)])
    G = np.stack([gen_channels(cfg, t).G[0] for t in range(1000)])
    assert H.size == 10**5
    assert abs(np.mean(np.abs(H) ** 2) - 1.0) <= 0.02
    assert abs(np.mean(np.abs(G) ** 2) - 0.1) <= 0.1 * 0.02
    # real and imaginary parts carry half the variance each
    assert abs(np.mean(H.real**2) - 0.5) <= 0.01


def test_emit_shapes_and_round_trip(tmp_path):
    assert emit([], "csv") == ",".join(CSV_FIELDS) + "\n"
    row = ResultRow("fig3-svd", "d-svd", 10.0, 10.0, 1.234567891234, 0.01, 200, 42)
    text = emit([row], "csv")
    assert len(text.strip().splitlines()) == 2
    assert "1.23456789" in text and "1.234567891" not in text
    rows = run_scenario(ScenarioConfig("fig3", trials=2, P_t_grid=[1.0, 10.0]))
    for fmt in ("csv", "json"):
        assert parse(emit(rows, fmt), fmt) == rows
    path = tmp_path / "out.json"
    emit(rows, "json", path)
    assert parse(path.read_text(), "json") == rows


def test_rows_sorted_and_snr_column():
    rows = run_scenario(ScenarioConfig("fig3", trials=2, P_t_grid=[1.0, 10.0, 100.0]))
    keys = [(r.method, r.pt) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert math.isclose(r.snr_db, 10 * math.log10(r.pt), abs_tol=1e-9)


def test_reproducible_bytes(tmp_path):
    cfg = ScenarioConfig("fig4", trials=1, seed=42, P_t_grid=[1.0, 100.0])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    emit(run_scenario(cfg), "csv", a)
    emit(run_scenario(cfg), "csv", b)
    assert a.read_bytes() == b.read_bytes()


def test_parallel_matches_serial():
    cfg = ScenarioConfig("fig3", trials=4, P_t_grid=[1.0, 100.0])
    assert run_scenario(cfg, jobs=2) == run_scenario(cfg, jobs=1)


def test_sem_shrinks_by_root_two(monkeypatch):
    def synthetic(cfg, t):
        return {("x", 1.0): (float(rng_for(cfg.seed, t, "H").standard_normal()), False)}

    monkeypatch.setattr(harness, "_run_one", synthetic)
    n = 4000
    small = run_scenario(ScenarioConfig("custom", trials=n, P_t_grid=[1.0]))[0]
    large = run_scenario(ScenarioConfig("custom", trials=2 * n, P_t_grid=[1.0]))[0]
    assert abs(small.rate_sem / large.rate_sem - math.sqrt(2)) <= 0.05 * math.sqrt(2)


@pytest.mark.parametrize("scenario", ["fig3", "fig4", "custom"])
def test_method_ordering_per_trial(scenario):
    cfg = ScenarioConfig(scenario, trials=3, P_t_grid=[1.0, 10.0, 100.0])
    tab = run_trials(cfg)
    for P in cfg.P_t_grid:
        free, opt = tab[("capacity-free", P)][0], tab[("optimal", P)][0]
        assert np.all(free >= opt - 1e-6)
        for (m, p), (rates, _) in tab.items():
            if p == P and m not in ("capacity-free", "optimal"):
                assert np.all(opt >= rates - 1e-6), m


def test_psvd_flagged_when_not_implementable():
    cfg = ScenarioConfig("fig5", trials=2, K_grid=(2, 4))
    rows = {r.method: r for r in run_scenario(cfg)}
    assert rows["p-svd-K4"].rate_mean == 0 and rows["p-svd-K4"].flagged == 2
    assert rows["p-svd-K2"].flagged == 0


def test_fig2_miso_beats_siso_at_20db():
    rows = run_scenario(ScenarioConfig("fig2", trials=50, P_t_grid=[1.0, 100.0]))
    by = {(r.method, r.pt): r.rate_mean for r in rows}
    assert by[("optimal-mts4", 100.0)] > by[("optimal-mts1", 100.0)]
    assert by[("capacity-free-mts1", 100.0)] > by[("optimal-mts1", 100.0)]


def test_fig3_low_snr_dsvd_close_to_capacity():
    rows = run_scenario(ScenarioConfig("fig3", trials=200, P_t_grid=[1.0]))
    by = {r.method: r.rate_mean for r in rows}
    assert abs(by["d-svd"] - by["optimal"]) <= 0.01 * by["optimal"]
