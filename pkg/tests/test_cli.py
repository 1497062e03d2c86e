import csv
import json
import subprocess
import sys

import pytest

from flowecon.cli import main, run_scenario, summarize
from flowecon.markets import dumps, from_dict, parse_config


def _read(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module")
def relax_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("relax")
    assert main(["run", "relaxation_5_1", "--out", str(out)]) == 0
    return out


def test_validate(capsys):
    assert main(["validate", "relaxation_5_1"]) == 0
    assert "relaxation_5_1" in capsys.readouterr().out


def test_validate_rejects_odd_agents(tmp_path, capsys):
    text = dumps(parse_config("relaxation_5_1")).replace("n_agents = 100", "n_agents = 99")
    p = tmp_path / "odd.toml"
    p.write_text(text)
    assert main(["validate", str(p)]) == 1
    assert "n_agents" in capsys.readouterr().err


def test_validate_rejects_negative_nu(tmp_path):
    p = tmp_path / "nu.toml"
    p.write_text(dumps(parse_config("relaxation_5_1")).replace("nu = 0.5", "nu = -0.5"))
    assert main(["validate", str(p)]) == 1


def test_unknown_key(tmp_path, capsys):
    p = tmp_path / "extra.toml"
    p.write_text(dumps(parse_config("relaxation_5_1")) + "\nflavour = 3\n")
    assert main(["validate", str(p)]) == 1
    assert "flavour" in capsys.readouterr().err


def test_io_errors(tmp_path):
    assert main(["validate", str(tmp_path / "missing.toml")]) == 2
    assert main(["report", str(tmp_path / "missing.json")]) == 2


def test_bad_override(tmp_path):
    assert main(["run", "relaxation_5_1", "--out", str(tmp_path), "--steps", "0"]) == 1


def test_price_csv_shape(relax_out):
    rows = _read(relax_out / "prices.csv")
    assert rows[0][:2] == ["step", "mean"]
    assert all(len(r) == 100 + 2 for r in rows)
    assert len(rows) == 51 + 1


def test_manifest_lists_files(relax_out):
    man = json.loads((relax_out / "manifest.json").read_text())
    for f in man["files"]:
        assert (relax_out / f["path"]).exists()
    assert {"prices.csv", "totals.csv", "trades.csv", "meanfield.csv", "snapshots.csv"} <= {
        f["path"] for f in man["files"]}
    assert man["config_hash"] == parse_config("relaxation_5_1").config_hash()
    assert man["seed"] == 51 and man["elapsed_seconds"] < 10
    assert man["flags"]["price_within_2pct_of_fundamental"]
    assert man["flags"]["tau_within_25pct"]


def test_report(relax_out, capsys):
    assert main(["report", str(relax_out / "manifest.json")]) == 0
    out = capsys.readouterr().out
    assert "fundamental" in out and "relaxation time" in out


def test_float_format(relax_out):
    row = _read(relax_out / "totals.csv")[1]
    for c in row[1:]:
        assert "." in c or "e" in c
        assert float(c) == float(repr(float(c)))
        digits = c.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
        assert len(digits) <= 17


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["run", "cycles_5_2", "--out", str(d), "--steps", "30"]) == 0
    for name in ("prices.csv", "totals.csv", "trades.csv", "preference_stats.csv", "ww_stats.csv", "snapshots.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_worker_count_does_not_change_output(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "steady_5_3", "--out", str(a), "--steps", "20", "--workers", "1"]) == 0
    assert main(["run", "steady_5_3", "--out", str(b), "--steps", "20", "--workers", "3"]) == 0
    for name in ("prices.csv", "snapshots.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_money_outputs(tmp_path):
    assert main(["run", "money_5_4a", "--out", str(tmp_path), "--steps", "40"]) == 0
    header = _read(tmp_path / "trades.csv")[0]
    assert "fraction_using_k" in header
    assert _read(tmp_path / "preference_stats.csv")[0] == ["step", "x2_0_1", "x2_0_2", "x2_1_2"]


def test_snapshot_cadence(tmp_path):
    cfg = parse_config("relaxation_5_1").with_overrides(steps=10, snapshot_every=5)
    run_scenario(cfg, tmp_path)
    steps = {r[0] for r in _read(tmp_path / "snapshots.csv")[1:]}
    assert steps == {"0", "5", "10"}
    cfg0 = cfg.with_overrides(snapshot_every=0)
    man = run_scenario(cfg0, tmp_path / "none")
    assert "snapshots.csv" not in {f["path"] for f in man["files"]}


def test_fixed_point_report_shows_no_trades(tmp_path):
    d = parse_config("relaxation_5_1").to_dict()
    # identical agents: nobody gains from any barter
    d.update(init_inventory=[[1.0, 1.0], [4.0, 4.0]], init_ww=[[4.0, 4.0]])
    p = tmp_path / "fixed.toml"
    p.write_text(dumps(from_dict(d)))
    assert main(["run", str(p), "--out", str(tmp_path / "o"), "--steps", "5"]) == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["summary"]["total_executed"] == 0
    assert "trades executed: 0" in summarize(man)


def test_bubble_report_flags_pattern(tmp_path):
    man = run_scenario(parse_config("bubble_6_2"), tmp_path)
    assert man["flags"]["peak_then_crash"]
    assert "peak then crash" in summarize(man)
    assert (tmp_path / "market.csv").exists()


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "flowecon", "validate", "central_naive_6_1a"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "central_naive_6_1a" in out.stdout
