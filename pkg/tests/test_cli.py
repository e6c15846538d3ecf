import csv
import io
import json
import math
import pathlib
import subprocess
import sys

import pytest

from opideal import cli

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"
SEARCH = {"restarts": 3, "iterations": 100}
RANK_ONE = {
    "matrix": [[1.0, 2.0], [-0.5, -1.0]],
    "domain": {"dim": 2, "r": 2},
    "codomain": {"dim": 2, "r": 1},
}


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg, indent=2))
    return str(path)


def run_main(argv, capsys):
    status = cli.main(argv)
    out = capsys.readouterr()
    return status, out.out, out.err


def test_inclusion_consistent(tmp_path, capsys):
    cfg = {"command": "inclusion", "operator": RANK_ONE, "k_max": 2, "search": SEARCH,
           "params1": {"q": 1, "p": 1, "sigma": 0.3}, "params2": {"q": 2, "p": 2, "sigma": 0.3}}
    status, out, _ = run_main(["--config", write(tmp_path, cfg)], capsys)
    assert status == 0
    report = json.loads(out)
    assert report["result"]["inclusion"]["verdict"] == "CONSISTENT"
    assert report["rows"][1]["verdict"] == "CONSISTENT"
    assert report["seed"] == 0 and len(report["config_hash"]) == 16
    assert report["wall_clock_seconds"] is None


def test_missing_q_is_a_config_error(tmp_path, capsys):
    cfg = {"command": "norm", "operator": RANK_ONE, "params": {"p": 1}}
    status, _, err = run_main(["--config", write(tmp_path, cfg)], capsys)
    assert status == 2
    # the message names the offending line of the file
    line = next(i for i, t in enumerate(json.dumps(cfg, indent=2).splitlines(), 1) if '"params"' in t)
    assert f"cfg.json:{line}:" in err and "'q' is a required property" in err


def test_invalid_json_and_unknown_keys(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"command": "norm",\n "operator": }')
    status, _, err = run_main(["--config", str(bad)], capsys)
    assert status == 2 and "bad.json:2:" in err
    status, _, err = run_main(["--config", write(tmp_path, {"command": "phi", "bogus": 1})], capsys)
    assert status == 2 and "bogus" in err


def test_out_of_range_parameters(tmp_path, capsys):
    cfg = {"command": "norm", "operator": RANK_ONE, "params": {"q": 1, "p": 2}}
    status, _, err = run_main(["--config", write(tmp_path, cfg)], capsys)
    assert status == 2 and "p <= q" in err
    cfg["params"] = {"q": 2, "p": 1, "sigma": 0.97}
    status, _, _ = run_main(["--config", write(tmp_path, cfg)], capsys)
    assert status == 2


def test_empty_grid(tmp_path, capsys):
    cfg = {"command": "sweep", "operator": RANK_ONE, "grid": {"q": [], "p": [1], "sigma": [0]}}
    status, _, err = run_main(["--config", write(tmp_path, cfg)], capsys)
    assert status == 2 and "empty" in err


def test_single_point_sweep_equals_norm(tmp_path, capsys):
    base = {"operator": RANK_ONE, "k_max": 2, "search": SEARCH, "seed": 3}
    sweep = {"command": "sweep", "points": [[2, 1, 0.4]], **base}
    norm = {"command": "norm", "params": {"q": 2, "p": 1, "sigma": 0.4}, **base}
    _, out1, _ = run_main(["--config", write(tmp_path, sweep, "a.json")], capsys)
    _, out2, _ = run_main(["--config", write(tmp_path, norm, "b.json")], capsys)
    e1 = json.loads(out1)["result"]["estimates"][0]["estimate"]
    e2 = json.loads(out2)["result"]["estimate"]
    assert e1 == e2


def test_sigma_sweep_matches_rank_one_oracle(tmp_path, capsys):
    cfg = {"command": "sweep", "operator": RANK_ONE, "k_max": 2, "search": SEARCH, "format": "csv",
           "grid": {"q": [2], "p": [1], "sigma": [0, 0.25, 0.5]}}
    status, out, _ = run_main(["--config", write(tmp_path, cfg)], capsys)
    assert status == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 3
    oracle = math.sqrt(5) * 1.5
    for r in rows:
        assert abs(float(r["value"]) - oracle) <= 1e-4
        assert float(r["oracle"]) == pytest.approx(oracle, rel=1e-12)
        assert r["seconds"] == ""


def test_csv_header_and_hash(tmp_path, capsys):
    status, out, _ = run_main(["--config", str(CONFIGS / "phi_two_atoms.json"), "--format", "csv"], capsys)
    assert status == 0
    header, row = out.splitlines()[:2]
    assert header.split(",") == list(cli.CSV_COLUMNS)
    cfg = json.loads((CONFIGS / "phi_two_atoms.json").read_text())
    cfg.update(format="csv", seed=0)
    assert row.endswith("," + cli.config_hash(cfg))


def test_reruns_are_byte_identical(tmp_path, capsys):
    path = str(CONFIGS / "norm_rank_one.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.main(["--config", path, "--out", str(a)]) == 0
    assert cli.main(["--config", path, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    # the output path is not part of the config hash
    assert json.loads(a.read_text())["config_hash"] == json.loads(b.read_text())["config_hash"]


def test_seed_flag_changes_the_hash(capsys):
    path = str(CONFIGS / "phi_two_atoms.json")
    _, out1, _ = run_main(["--config", path], capsys)
    _, out2, _ = run_main(["--config", path, "--seed", "5"], capsys)
    r1, r2 = json.loads(out1), json.loads(out2)
    assert r2["seed"] == 5 and r1["config_hash"] != r2["config_hash"]


def test_timing_flag(capsys):
    _, out, _ = run_main(["--config", str(CONFIGS / "phi_two_atoms.json"), "--timing"], capsys)
    assert json.loads(out)["wall_clock_seconds"] > 0


def test_print_schema(capsys):
    status, out, _ = run_main(["--print-schema"], capsys)
    assert status == 0 and json.loads(out)["title"] == "opideal experiment config"


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_run(name, capsys):
    status, out, _ = run_main(["--config", str(CONFIGS / name), "--format", "json"], capsys)
    assert status == 0
    report = json.loads(out)
    for row in report["rows"]:
        if row["oracle"] is not None and row["oracle_kind"] == "exact":
            assert row["value"] <= row["oracle"] * (1 + 1e-6)


def test_rs_demo_amplification(capsys):
    _, out, _ = run_main(["--config", str(CONFIGS / "rs_demo_sigma.json")], capsys)
    amp = json.loads(out)["result"]["amplification"]
    assert amp["sum_q1_amplified"] == pytest.approx(amp["sum_q2_original"], rel=1e-9)


@pytest.mark.slow
def test_validate_oracles_subprocess(tmp_path):
    out = tmp_path / "v.csv"
    proc = subprocess.run([sys.executable, "-m", "opideal.cli", "validate-oracles", "--format", "csv",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    rows = list(csv.DictReader(out.open()))
    assert rows and all(r["verdict"] == "PASS" for r in rows)


def test_refine_keeps_phi(tmp_path, capsys):
    # refining a function into equal halves leaves Phi unchanged
    cfg = json.loads((CONFIGS / "phi_two_atoms.json").read_text())
    _, out0, _ = run_main(["--config", write(tmp_path, cfg, "a.json")], capsys)
    cfg["refine"] = 2
    _, out2, _ = run_main(["--config", write(tmp_path, cfg, "b.json")], capsys)
    v0 = json.loads(out0)["result"]["estimate"]["value"]
    v2 = json.loads(out2)["result"]["estimate"]["value"]
    assert v2 == pytest.approx(v0, rel=1e-9)
