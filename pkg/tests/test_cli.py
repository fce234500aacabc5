import json

from crspec import cli
from crspec.harness import parse


def test_run_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    rc = cli.main(["run", "--scenario", "fig3", "--trials", "2", "--pt-points", "3", "--out", str(out)])
    assert rc == 0
    rows = parse(out.read_text())
    assert sorted({r.pt for r in rows}) == [1.0, 10.0, 100.0]
    assert {r.method for r in rows} >= {"optimal", "d-svd", "p-svd", "white"}


def test_run_stdout_json_and_overrides(capsys):
    rc = cli.main(
        ["run", "--scenario", "custom", "--trials", "1", "--format", "json", "--pt-min", "2", "--pt-max", "2",
         "--pt-points", "1", "--mts", "3", "--mrs", "1", "--k", "1", "--gamma", "0.5"]
    )
    assert rc == 0
    recs = json.loads(capsys.readouterr().out)
    assert {r["pt"] for r in recs} == {2.0} and all(r["trials"] == 1 for r in recs)


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "fig3", "trials": 1, "P_t_grid": [5.0], "seed": 3}))
    out = tmp_path / "r.csv"
    assert cli.main(["run", "--config", str(cfg), "--seed", "4", "--out", str(out)]) == 0
    rows = parse(out.read_text())
    assert {r.pt for r in rows} == {5.0} and {r.seed for r in rows} == {4}


def test_bad_input_exits_2(capsys):
    assert cli.main(["run", "--scenario", "fig9"]) == 2
    assert "unknown scenario" in capsys.readouterr().err
    assert cli.main(["run", "--scenario", "fig3", "--pt-min", "-1"]) == 2


def test_verify_exit_codes(monkeypatch, capsys):
    from crspec import acceptance

    monkeypatch.setattr(acceptance, "CHECKS", (("x", "always passes", lambda: (True, "ok")),))
    assert cli.main(["verify"]) == 0
    monkeypatch.setattr(acceptance, "CHECKS", (("y", "always fails", lambda: (False, "no")),))
    assert cli.main(["verify"]) == 2
    out = capsys.readouterr().out
    assert "[PASS] x" in out and "[FAIL] y" in out
