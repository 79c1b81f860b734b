import csv
import io
import json
import math

import pytest

from irsbandits.cli import BOUNDS_FIELDS, SIMULATE_FIELDS, main
from irsbandits.config import BUNDLED, load_config, parse_config
from irsbandits.errors import ConfigError


def _config(tmp_path, name="cfg.json", **overrides):
    data = {
        "schema_version": 1,
        "instance": {"arms": [{"cost": 1}, {"cost": 1}]},
        "budgets": [2],
        "policies": [{"kind": "bts"}, {"kind": "irs_vzero"}],
        "episodes": 50,
        "baseline_samples": 2000,
        "bounds": {"kinds": ["bts", "irs_fh", "irs_vzero"], "samples": 20_000},
    }
    data.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def _run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_round_trip(name):
    cfg = load_config(name)
    again = parse_config(cfg.to_json())
    assert again == cfg
    assert parse_config(again.to_json()).to_json() == cfg.to_json()


def test_ipinyou_tuples():
    cfg = load_config("ipinyou_k6")
    got = [(a.cost, a.reward.trials, a.prior.alpha, a.prior.beta) for a in cfg.instance.arms]
    assert got == [(3750, 30204, 12, 14153), (7200, 55965, 22, 22950),
                   (15000, 120485, 25, 28968), (12750, 105148, 34, 44244),
                   (2700, 22952, 17, 20977), (3300, 29847, 20, 22559)]


def test_bundled_instances():
    assert [a.cost for a in load_config("beta_bernoulli_k2").instance.arms] == [10, 20]
    assert [a.cost for a in load_config("beta_bernoulli_k5").instance.arms] == [2, 3, 10, 19, 20]
    rc = load_config("random_cost_k2")
    assert rc.instance.random_cost
    assert [(a.cost_model.low, a.cost_model.high) for a in rc.instance.arms] == [(10, 20)] * 2


@pytest.mark.parametrize("text,fragment", [
    ('{"schema_version": 1, "instance": {"arms": [{"cost": 1}]}, "budgets": [2], "x": 1}', "x"),
    ('{"schema_version": 2, "instance": {"arms": [{"cost": 1}]}, "budgets": [2]}',
     "schema_version"),
    ('{"schema_version": 1, "instance": {"arms": [{"cost": 1}]}, "budgets": [-1]}', "budgets"),
    ('{"schema_version": 1, "instance": {"arms": [{}]}, "budgets": [1]}', "cost"),
    ('{"schema_version": 1, "instance": {"arms": [{"cost": 1}]}, "budgets": [1],'
     ' "policies": [{"kind": "irs_vzero_pext"}]}', "not implemented"),
    ('{"schema_version": 1,\n "budgets": [1,]}', "line 2"),
])
def test_config_errors_are_diagnosed(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")


def test_build_instances():
    det = load_config("beta_bernoulli_k2").build_instance(300)
    assert det.budget == 300 and det.costs.tolist() == [10, 20]
    rc = load_config("random_cost_k2").build_instance(40)
    assert rc.budget == 40 and rc.low.tolist() == [10, 10]


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------

def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    code, _, err = _run(["simulate", "--config", str(bad)], capsys)
    assert code == 2 and "line 1" in err
    code, _, err = _run(["simulate", "--config", _config(tmp_path, policies=[])], capsys)
    assert code == 2 and "policies" in err
    code, _, err = _run(["bounds", "--config", _config(tmp_path, bounds={"samples": 1})], capsys)
    assert code == 2 and "samples" in err
    k4 = _config(tmp_path, instance={"arms": [{"cost": 1}] * 4},
                 policies=[{"kind": "irs_vemax"}])
    code, _, err = _run(["simulate", "--config", k4], capsys)
    assert code == 3 and "at most 3 arms" in err
    k4b = _config(tmp_path, instance={"arms": [{"cost": 1}] * 4}, bounds={"kinds": ["irs_vemax"]})
    assert _run(["bounds", "--config", k4b], capsys)[0] == 3
    code, _, err = _run(["sweep", "--config", _config(tmp_path, budgets=[4, 2])], capsys)
    assert code == 2 and "increasing" in err


def test_oracle_too_large_exits_3(tmp_path, capsys):
    data = json.loads(load_config("beta_bernoulli_k5").to_json())
    data["budgets"] = [2000]
    path = tmp_path / "k5.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    code, _, err = _run(["oracle", "--config", str(path)], capsys)
    assert code == 3 and "states" in err


def test_random_cost_bounds_beyond_bts_exit_3(tmp_path, capsys):
    data = json.loads(load_config("random_cost_k2").to_json())
    data["bounds"] = {"kinds": ["irs_fh"], "samples": 100}
    path = tmp_path / "rc.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    assert _run(["bounds", "--config", str(path)], capsys)[0] == 3


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def test_simulate_rows_and_schema(tmp_path, capsys):
    cfg = _config(tmp_path, budgets=[2, 3, 5])
    code, out, _ = _run(["simulate", "--config", cfg], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",".join(SIMULATE_FIELDS)
    rows = _rows(out)
    assert len(rows) == 2 * 3
    for r in rows:
        for f in SIMULATE_FIELDS[1:]:
            assert math.isfinite(float(r[f]))


def test_out_file_and_json_format(tmp_path, capsys):
    cfg = _config(tmp_path)
    out_csv = tmp_path / "a.csv"
    out_json = tmp_path / "a.json"
    assert _run(["simulate", "--config", cfg, "--out", str(out_csv)], capsys)[0] == 0
    assert _run(["simulate", "--config", cfg, "--out", str(out_json), "--format", "json"],
                capsys)[0] == 0
    rows = _rows(out_csv.read_text(encoding="utf-8"))
    records = json.loads(out_json.read_text(encoding="utf-8"))
    assert [list(r) for r in records] == [list(SIMULATE_FIELDS)] * len(rows)
    for r, j in zip(rows, records):
        assert float(r["mean_value"]) == j["mean_value"]


def test_overrides_change_results(tmp_path, capsys):
    cfg = _config(tmp_path)
    base = _rows(_run(["simulate", "--config", cfg], capsys)[1])
    seeded = _rows(_run(["simulate", "--config", cfg, "--seed", "9"], capsys)[1])
    more = _rows(_run(["simulate", "--config", cfg, "--episodes", "80"], capsys)[1])
    assert base[0]["mean_value"] != seeded[0]["mean_value"]
    assert more[0]["episodes"] == "80"
    assert _run(["simulate", "--config", cfg, "--episodes", "1"], capsys)[0] == 2


def test_bounds_tiny_instance(tmp_path, capsys):
    code, out, _ = _run(["bounds", "--config", _config(tmp_path)], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",".join(BOUNDS_FIELDS)
    rows = {r["bound"]: r for r in _rows(out)}
    for kind, ref in (("bts", 4 / 3), ("irs_fh", 7 / 6), ("irs_vzero", 9 / 8)):
        assert abs(float(rows[kind]["mean"]) - ref) <= 3 * float(rows[kind]["se"])
    assert float(rows["bts"]["regret_lb"]) == 0.0
    assert float(rows["irs_vzero"]["regret_lb"]) > 0.0


def test_bounds_point_mass_has_zero_se(tmp_path, capsys):
    arms = [{"cost": 10, "prior": {"alpha": 1e300, "beta": 1e300}},
            {"cost": 20, "prior": {"alpha": 1e300, "beta": 1e300}}]
    cfg = _config(tmp_path, instance={"arms": arms}, budgets=[200],
                  bounds={"kinds": ["bts"], "samples": 100})
    rows = _rows(_run(["bounds", "--config", cfg], capsys)[1])
    assert float(rows[0]["mean"]) == 10.0 and float(rows[0]["se"]) == 0.0


def test_bounds_with_ideal_and_common_numbers(tmp_path, capsys):
    cfg = _config(tmp_path, bounds={"kinds": ["bts", "irs_vemax", "ideal"], "samples": 500,
                                    "common_random_numbers": True})
    rows = {r["bound"]: r for r in _rows(_run(["bounds", "--config", cfg], capsys)[1])}
    assert float(rows["ideal"]["mean"]) == pytest.approx(13 / 12, abs=1e-12)
    assert float(rows["ideal"]["se"]) < 1e-9


def test_oracle_report(tmp_path, capsys):
    code, out, _ = _run(["oracle", "--config", _config(tmp_path, budgets=[0, 2])], capsys)
    assert code == 0
    assert "1.083333333333" in out and "holds" in out
    zero = out.split("budget 2")[0]
    assert zero.count("0.000000000000") == 4
    code, out, _ = _run(["oracle", "--config", _config(tmp_path), "--format", "json"], capsys)
    (entry,) = json.loads(out)
    assert entry["vstar"] == pytest.approx(13 / 12, abs=1e-15)
    assert entry["w_irs_vzero"] == pytest.approx(9 / 8, abs=1e-15)


def test_sweep_rows_monotone_in_budget(tmp_path, capsys):
    data = json.loads(load_config("beta_bernoulli_k2").to_json())
    data.update(budgets=list(range(50, 501, 50)), episodes=4, baseline_samples=2000,
                policies=[{"kind": "bts"}, {"kind": "irs_vzero"}])
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    code, out, _ = _run(["sweep", "--config", str(path)], capsys)
    assert code == 0
    budgets = [int(r["budget"]) for r in _rows(out)]
    assert len(budgets) == 20 and budgets == sorted(budgets)


def test_random_cost_sweep_covers_both_families(tmp_path, capsys):
    data = json.loads(load_config("random_cost_k2").to_json())
    data.update(budgets=[40, 80], episodes=3, baseline_samples=2000)
    path = tmp_path / "rc.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    code, out, _ = _run(["sweep", "--config", str(path)], capsys)
    assert code == 0
    kinds = {r["policy"] for r in _rows(out)}
    assert {"irs_vzero_sext", "irs_vzero_pext", "irs_index_pext"} <= kinds


def test_single_budget_sweep_equals_simulate(tmp_path, capsys):
    cfg = _config(tmp_path, budgets=[3])
    assert _run(["sweep", "--config", cfg], capsys)[1] == \
        _run(["simulate", "--config", cfg], capsys)[1]


def test_bundled_k2_runs_end_to_end(capsys):
    code, out, _ = _run(["simulate", "--config", "beta_bernoulli_k2", "--episodes", "3"], capsys)
    assert code == 0 and len(_rows(out)) == 5 * 5


def test_timing_flag_fills_wall_time(tmp_path, capsys):
    rows = _rows(_run(["simulate", "--config", _config(tmp_path), "--timing"], capsys)[1])
    assert all(int(r["wall_ms"]) >= 0 for r in rows)
