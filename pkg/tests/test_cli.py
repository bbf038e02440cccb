import csv
import hashlib
import json
import logging
import subprocess
import sys
from pathlib import Path

import pytest

from zenolab.cli import main, parse_n_list, render_report
from zenolab.config import PRESETS, ExperimentConfig, load_config, parse_text
from zenolab.errors import ConfigInvalidError
from zenolab.scenarios import CSV_COLUMNS, ResultRecord

SMALL_RANDOM = """\
scenario = random
operator.dim = 8
operator.rank = 3
operator.seed = 4
state.seed = 5
time.T = 1
time.M = 33
sweep.n = 4, 8, 16
sweep.shapes = symmetric
"""


def _write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    @pytest.mark.parametrize("text", [
        "scenario = random\nbogus.key = 1\n",
        "scenario = random\noperator.dim = 3\noperator.dim = 4\n",
        "scenario = random\noperator.dim = many\n",
        "scenario = nowhere\n",
        "scenario = random\nsweep.epsilon = 2\n",
        "scenario = random\nfamily.kind = wobbly\n",
        "scenario = random\njust some words\n",
    ])
    def test_invalid(self, text):
        with pytest.raises(ConfigInvalidError):
            ExperimentConfig(parse_text(text))

    def test_comments_and_powers(self):
        cfg = ExperimentConfig(parse_text("# header\nscenario = random  # trailing\nsweep.n = 2^3, 16\n"))
        assert cfg["sweep.n"] == [8, 16]

    def test_hash_ignores_n_list_and_output(self):
        a = ExperimentConfig(parse_text(SMALL_RANDOM))
        b = a.with_overrides(**{"sweep.n": "1, 2", "output.dir": "elsewhere"})
        c = a.with_overrides(**{"operator.seed": "99"})
        assert a.config_hash == b.config_hash != c.config_hash
        assert len(a.config_hash) == 16

    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_and_files_agree(self, name):
        from_file = load_config(str(Path(__file__).parents[1] / "configs" / f"{name}.cfg"))
        assert from_file.config_hash == load_config(name).config_hash

    def test_missing(self):
        with pytest.raises(ConfigInvalidError):
            load_config("/nonexistent/file.cfg")

    def test_parse_n_list(self, caplog):
        with caplog.at_level(logging.WARNING, logger="zenolab"):
            assert parse_n_list("8, 2^3, 4") == [4, 8]
        assert "duplicate" in caplog.text


class TestRun:
    def test_unknown_key_exit_2(self, tmp_path):
        cfg = _write(tmp_path, "scenario = random\nmystery = 1\n")
        assert main(["run", cfg, "--out", str(tmp_path)]) == 2

    def test_identity_battery_exit_0(self, tmp_path):
        assert main(["run", "identity-battery", "--out", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "identity-battery_summary.json").read_text())
        assert summary["battery_failed"] == []
        for metric, worst in summary["battery_worst"].items():
            assert worst <= summary["battery_limits"][metric]

    def test_identity_tolerance_override_exit_3(self, tmp_path):
        cfg = _write(tmp_path, "scenario = identity-battery\nbattery.count = 20\n")
        assert main(["run", cfg, "--out", str(tmp_path), "--tol", "1e-30"]) == 3

    def test_deterministic_csv(self, tmp_path):
        cfg = _write(tmp_path, SMALL_RANDOM)
        assert main(["run", cfg, "--out", str(tmp_path / "a")]) == 0
        assert main(["run", cfg, "--out", str(tmp_path / "b")]) == 0
        a = (tmp_path / "a" / "random.csv").read_bytes()
        assert a == (tmp_path / "b" / "random.csv").read_bytes()
        assert a.splitlines()[0].decode() == ",".join(CSV_COLUMNS)

    def test_hash_rederivable_from_summary(self, tmp_path):
        cfg = _write(tmp_path, SMALL_RANDOM)
        main(["run", cfg, "--out", str(tmp_path), "--seed", "7"])
        summary = json.loads((tmp_path / "random_summary.json").read_text())
        digest = hashlib.sha256(summary["canonical_config"].encode()).hexdigest()[:16]
        assert {r["config_hash"] for r in _rows(tmp_path / "random.csv")} == {digest}
        assert summary["config"]["operator.seed"] == "7"

    def test_golden(self, tmp_path):
        cfg = _write(tmp_path, SMALL_RANDOM)
        loose = tmp_path / "loose.json"
        tight = tmp_path / "tight.json"
        key = "symmetric/constant/1/16/sup_error"
        loose.write_text(json.dumps({"entries": {key: 1.0}}))
        tight.write_text(json.dumps({"entries": {key: 1e-12}}))
        assert main(["run", cfg, "--out", str(tmp_path), "--golden", str(loose)]) == 0
        assert json.loads((tmp_path / "random_summary.json").read_text())["golden"][key]["pass"]
        assert main(["run", cfg, "--out", str(tmp_path), "--golden", str(tight)]) == 3

    def test_counterexample_trajectory_export(self, tmp_path):
        cfg = _write(tmp_path, "scenario = counterexample\ncounterexample.nu_max = 1e3\n"
                               "counterexample.samples_per_decade = 10\n")
        assert main(["run", cfg, "--out", str(tmp_path)]) == 0
        rows = _rows(tmp_path / "counterexample_trajectory.csv")
        assert list(rows[0]) == ["nu", "re", "im", "modulus", "unwrapped_phase"]
        assert len(rows) == 11

    def test_module_entry_point(self, tmp_path):
        cfg = _write(tmp_path, "scenario = random\nmystery = 1\n")
        proc = subprocess.run([sys.executable, "-m", "zenolab", "run", cfg], capture_output=True, text=True)
        assert proc.returncode == 2
        assert "unknown key" in proc.stderr


class TestSweep:
    def test_single_n(self, tmp_path):
        cfg = _write(tmp_path, SMALL_RANDOM)
        assert main(["sweep", cfg, "--n", "1", "--out", str(tmp_path)]) == 0
        rows = _rows(tmp_path / "random_sweep.csv")
        assert {r["n"] for r in rows} == {"1"}
        assert len({(r["scheme_shape"], r["metric"]) for r in rows}) == len(rows)

    def test_duplicates_removed(self, tmp_path):
        cfg = _write(tmp_path, SMALL_RANDOM)
        assert main(["sweep", cfg, "--n", "4,4,8", "--out", str(tmp_path)]) == 0
        ns = [r["n"] for r in _rows(tmp_path / "random_sweep.csv")]
        assert sorted(set(ns)) == ["4", "8"] and len(ns) == 2 * 3

    def test_resume_is_idempotent(self, tmp_path):
        cfg = _write(tmp_path, SMALL_RANDOM)
        path = tmp_path / "random_sweep.csv"
        main(["sweep", cfg, "--n", "4,8", "--out", str(tmp_path)])
        main(["sweep", cfg, "--n", "4,8,16", "--out", str(tmp_path)])
        first = path.read_bytes()
        main(["sweep", cfg, "--n", "4,8,16", "--out", str(tmp_path)])
        assert path.read_bytes() == first
        keys = [(r["config_hash"], r["n"], r["metric"]) for r in _rows(path)]
        assert len(keys) == len(set(keys)) == 9
        # a fresh full sweep yields the same rows
        main(["sweep", cfg, "--n", "4,8,16", "--out", str(tmp_path / "fresh")])
        assert (tmp_path / "fresh" / "random_sweep.csv").read_bytes() == first
        assert not list(tmp_path.glob(".*.tmp"))

    def test_not_a_sweep_scenario(self, tmp_path):
        assert main(["sweep", "counterexample", "--out", str(tmp_path)]) == 2


def _record(scenario, metric, value, shape="", n=""):
    return ResultRecord(scenario, shape, "constant" if shape else "", "1" if shape else "", str(n), "", "",
                        metric, value, "h")


class TestReport:
    def test_empty(self, capsys):
        assert main(["report"]) == 0
        assert capsys.readouterr().out == ""

    def test_single_row(self):
        text = render_report([_record("random", "sup_error", 0.5, "symmetric", 64)])
        table = [ln for ln in text.splitlines() if ln[:1].isdigit()]
        assert len(table) == 1 and table[0].startswith("64")

    def test_grouped_deterministic(self):
        rows = [
            _record("random", "sup_error", 0.2, "symmetric", 128),
            _record("identity-battery", "identity_residual[1]", 3e-13),
            _record("random", "sup_error", 0.4, "symmetric", 64),
            _record("identity-battery", "identity_residual[0]", 5e-13),
            _record("counterexample", "phase_winding", 5.8),
        ]
        text = render_report(rows)
        assert text == render_report(list(reversed(rows)))
        heads = [ln for ln in text.splitlines() if ln.startswith("==")]
        assert heads == ["== counterexample ==", "== identity-battery ==", "== random =="]
        assert "max identity_residual: 5.000000e-13" in text
        assert "monotonicity symmetric/constant/1: sup_error=decreasing" in text

    def test_non_monotone_flag(self):
        rows = [_record("random", "sup_error", v, "symmetric", n) for n, v in ((8, 0.1), (16, 0.3))]
        assert "NON-MONOTONE" in render_report(rows)

    def test_malformed(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        assert main(["report", str(bad)]) == 2

    def test_round_trip(self, tmp_path, capsys):
        cfg = _write(tmp_path, SMALL_RANDOM)
        main(["run", cfg, "--out", str(tmp_path)])
        capsys.readouterr()
        assert main(["report", str(tmp_path / "random.csv")]) == 0
        out = capsys.readouterr().out
        assert out.startswith("== random ==")
