import csv
import json
import math

import numpy as np
import pytest

from multibell import quantum
from multibell.classical import RATIO_LIMIT
from multibell.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, bounds_report, main


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestBounds:
    def test_n2(self):
        r = bounds_report(2)
        assert r["tsirelson_n_factorial"] == 2
        assert r["fd_lower_bound"] == 0
        assert r["classical_max_P"] == pytest.approx(1)

    def test_n1(self):
        r = bounds_report(1)
        assert r["tsirelson_n_factorial"] == r["fd_lower_bound"] == r["fd_over_factorial"] == r["classical_max_P"] == 1

    def test_n4(self, capsys):
        assert main(["bounds", "4"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "24" in out and "16" in out and "0.666667" in out

    def test_large_n_skips_search(self):
        r = bounds_report(400)
        assert "classical_max_P" not in r
        assert r["fd_over_factorial"] == pytest.approx(0.74, abs=0.02)

    def test_json_output(self, tmp_path):
        out = tmp_path / "b.json"
        assert main(["bounds", "3", "--output", str(out)]) == EXIT_OK
        assert json.loads(out.read_text())["classical_max_P"] == pytest.approx(4)
        assert (tmp_path / "b.json.manifest.json").exists()


class TestConstruct:
    def test_n2(self, tmp_path):
        out = tmp_path / "c.json"
        assert main(["construct", "2", "--output", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["bell_multiplicative"] == pytest.approx(2, rel=1e-12)
        assert doc["bell_additive"] == pytest.approx(2 * math.sqrt(2), rel=1e-12)
        assert all(g >= -1e-9 for g in doc["schur_gaps"])

    def test_n5(self, tmp_path):
        out = tmp_path / "c.json"
        assert main(["construct", "5", "--output", str(out)]) == EXIT_OK
        doc = json.loads(out.read_text())
        assert doc["bell_multiplicative"] == pytest.approx(120, rel=1e-9)
        assert np.all(np.abs(doc["correlators"]) <= 1)
        assert np.array(doc["alice_directions"]).shape == (5, 3)

    def test_rejects_n1(self):
        assert main(["construct", "1"]) == EXIT_USAGE

    def test_saturation_failure_aborts(self, tmp_path, monkeypatch):
        monkeypatch.setattr(quantum, "correlators_epr", lambda setup: quantum.CorrelatorMatrix(np.zeros((setup.n, setup.n))))
        out = tmp_path / "c.json"
        assert main(["construct", "3", "--output", str(out)]) == EXIT_FAILED
        assert not out.exists()


class TestSimulate:
    def test_paths_and_summary(self, tmp_path):
        paths, summary = tmp_path / "p.csv", tmp_path / "s.json"
        argv = ["simulate", "--n", "3", "--rounds", "30", "--trials", "2", "--seed", "4", "--paths", str(paths), "--summary", str(summary)]
        assert main(argv) == EXIT_OK
        rows = read_csv(paths)
        assert rows[0] == ["trial", "round", "i", "j", "a", "b", "x1", "x2", "x3"]
        assert len(rows) == 1 + 2 * 30
        data = json.loads(summary.read_text())
        for key in ["n", "strategy", "scheduling", "rounds", "trials", "seed", "estimate", "stderr", "analytic_target"]:
            assert key in data
        assert data["analytic_target"] == pytest.approx(6)
        # last row of each trial equals the cumulative sum of its steps
        first = [r for r in rows[1:] if r[0] == "0"]
        assert [int(r[1]) for r in first] == list(range(1, 31))

    def test_empty_run(self, tmp_path):
        paths, summary = tmp_path / "p.csv", tmp_path / "s.json"
        assert main(["simulate", "--trials", "1", "--rounds", "0", "--paths", str(paths), "--summary", str(summary)]) == EXIT_OK
        assert read_csv(paths) == [["trial", "round", "i", "j", "a", "b", "x1", "x2"]]
        data = json.loads(summary.read_text())
        assert data["estimate"] is None and data["estimate_defined"] is False

    def test_quantum_area_double_classical(self, tmp_path):
        results = {}
        for strat in ["quantum", "classical-opt-n2"]:
            s = tmp_path / f"{strat}.json"
            assert main(["simulate", "--strategy", strat, "--rounds", "20000", "--trials", "16", "--seed", "1", "--summary", str(s)]) == EXIT_OK
            results[strat] = json.loads(s.read_text())["area_mean"]
        assert results["quantum"] / results["classical-opt-n2"] == pytest.approx(2, rel=0.05)

    def test_summary_matches_run_game(self, tmp_path):
        from multibell.game import GameConfig, quantum as qs, run_game

        s = tmp_path / "s.json"
        main(["simulate", "--n", "2", "--rounds", "1000", "--trials", "3", "--seed", "8", "--summary", str(s)])
        run = run_game(GameConfig(2, 1000, 3, 8, qs(2)))
        assert json.loads(s.read_text())["estimate"] == run.estimate

    def test_explicit_strategy(self, tmp_path):
        s = tmp_path / "s.json"
        argv = ["simulate", "--n", "2", "--strategy", "classical-explicit", "--mu", "1,0", "--bob-signs", "1,-1", "--rounds", "100", "--trials", "2", "--summary", str(s)]
        assert main(argv) == EXIT_OK
        assert json.loads(s.read_text())["analytic_target"] == pytest.approx(-1)

    @pytest.mark.parametrize(
        "argv",
        [
            ["simulate", "--n", "3", "--strategy", "classical-opt-n2"],
            ["simulate", "--n", "3", "--rounds", "100"],
            ["simulate", "--strategy", "classical-explicit"],
            ["simulate", "--strategy", "classical-explicit", "--mu", "1,0,0"],
            ["simulate", "--strategy", "no-such"],
        ],
    )
    def test_usage_errors(self, argv):
        assert main(argv) == EXIT_USAGE


class TestRobustness:
    def test_csv(self, tmp_path, capsys):
        out = tmp_path / "r.csv"
        assert main(["robustness", "--eta-min", "0.8", "--eta-max", "1", "--steps", "201", "--output", str(out)]) == EXIT_OK
        rows = read_csv(out)
        assert rows[0] == ["eta", "delta_additive", "delta_multiplicative"]
        assert len(rows) == 202
        last = [float(x) for x in rows[-1]]
        assert last == pytest.approx([1.0, 2 * math.sqrt(2) - 2, 1.0])
        assert "0.828427" in capsys.readouterr().out

    def test_seventeen_digits(self, tmp_path):
        out = tmp_path / "r.csv"
        main(["robustness", "--eta-min", "1", "--eta-max", "1", "--steps", "1", "--output", str(out)])
        value = read_csv(out)[1][1]
        assert float(value) == 2 * math.sqrt(2) - 2
        assert len(value.replace(".", "").lstrip("0")) == 17

    @pytest.mark.parametrize("lo, hi", [("0", "1"), ("0.9", "0.8"), ("0.5", "1.2")])
    def test_range_errors(self, tmp_path, lo, hi):
        assert main(["robustness", "--eta-min", lo, "--eta-max", hi, "--output", str(tmp_path / "r.csv")]) == EXIT_USAGE


class TestRatio:
    def test_csv(self, tmp_path):
        out = tmp_path / "ratio.csv"
        assert main(["ratio", "--n", "4-255,10000", "--output", str(out)]) == EXIT_OK
        rows = read_csv(out)
        assert rows[0] == ["n", "ratio", "limit_reference"]
        assert rows[1][0] == "4" and float(rows[1][1]) == pytest.approx(2 / 3)
        assert float(rows[-1][1]) == pytest.approx(RATIO_LIMIT, abs=0.02)
        assert all(float(r[2]) == RATIO_LIMIT for r in rows[1:])

    def test_rejects_small_n(self, tmp_path):
        assert main(["ratio", "--n", "3", "--output", str(tmp_path / "r.csv")]) == EXIT_USAGE


class TestVerify:
    def test_passes(self, capsys):
        assert main(["verify", "--trials", "200"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert "tolerance" in out and "observed" in out

    def test_detects_reflection_mutation(self, monkeypatch, capsys):
        monkeypatch.setattr(quantum, "reflect_y", lambda v: np.asarray(v, dtype=float) * np.array([1.0, 1.0, -1.0]))
        assert main(["verify", "--trials", "50"]) == EXIT_FAILED
        out = capsys.readouterr().out
        assert "[FAIL] Tsirelson saturation" in out


class TestManifestAndConfig:
    def test_replay_reproduces_bitwise(self, tmp_path):
        paths, summary = tmp_path / "p.csv", tmp_path / "s.json"
        main(["simulate", "--rounds", "200", "--trials", "2", "--seed", "3", "--paths", str(paths), "--summary", str(summary)])
        before = (paths.read_bytes(), summary.read_bytes())
        manifest = tmp_path / "s.json.manifest.json"
        data = json.loads(manifest.read_text())
        assert data["command"] == "simulate" and data["seed"] == 3
        assert data["outputs"] == [str(paths), str(summary)]
        paths.unlink()
        summary.unlink()
        assert main(["replay", str(manifest)]) == EXIT_OK
        assert (paths.read_bytes(), summary.read_bytes()) == before

    def test_replay_ratio(self, tmp_path):
        out = tmp_path / "r.csv"
        main(["ratio", "--n", "4-40", "--output", str(out)])
        before = out.read_bytes()
        out.unlink()
        assert main(["replay", str(tmp_path / "r.csv.manifest.json")]) == EXIT_OK
        assert out.read_bytes() == before

    def test_config_defaults_and_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        out = tmp_path / "r.csv"
        cfg.write_text(f"# robustness defaults\neta-min = 0.9\nsteps = 11\noutput = {out}\n")
        assert main(["robustness", "--config", str(cfg)]) == EXIT_OK
        rows = read_csv(out)
        assert len(rows) == 12 and float(rows[1][0]) == 0.9
        assert main(["robustness", "--config", str(cfg), "--steps", "3"]) == EXIT_OK
        assert len(read_csv(out)) == 4

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("not a pair\n")
        assert main(["verify", "--config", str(cfg)]) == EXIT_USAGE

    def test_missing_command_is_usage_error(self):
        assert main([]) == EXIT_USAGE
