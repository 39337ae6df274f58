import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest

from multilayer_parking import verify
from multilayer_parking.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = [l for l in text.strip().splitlines()]
    header = lines[0].split(",")
    return [dict(zip(header, l.split(","))) for l in lines[1:]]


class TestAnalyticTable:
    def test_stdout_table(self, capsys):
        code, out, _ = run_cli(capsys, "analytic", "table", "--layers", "4")
        assert code == 0
        rows = parse_csv(out)
        # fractions are rendered uniformly over 3^(2r-1), without reduction
        assert [r["end_density"] for r in rows] == [
            "1/3",
            "11/27",
            "105/243",
            "971/2187",
        ]
        assert Fraction(rows[2]["end_density"]) == Fraction(35, 81)
        assert rows[1]["decimal"].startswith("0.407407")

    def test_file_output_with_manifest(self, tmp_path, capsys):
        out_csv = tmp_path / "table.csv"
        code, _, _ = run_cli(
            capsys, "analytic", "table", "--layers", "10", "--out", str(out_csv)
        )
        assert code == 0
        manifest = json.loads((tmp_path / "table.csv.manifest.json").read_text())
        assert manifest["command"] == "analytic table"
        assert manifest["parameters"] == {"layers": 10}
        assert "table.csv" in manifest["outputs"]

    def test_plot_written(self, tmp_path, capsys):
        out_csv = tmp_path / "table.csv"
        code, _, _ = run_cli(
            capsys, "analytic", "table", "--layers", "6", "--out", str(out_csv), "--plot"
        )
        assert code == 0
        assert (tmp_path / "table.png").stat().st_size > 0


class TestAnalyticCurve:
    def test_layer1_endpoint(self, capsys):
        code, out, _ = run_cli(
            capsys, "analytic", "curve", "--layers", "1", "--t-max", "5", "--t-step", "1"
        )
        assert code == 0
        rows = parse_csv(out)
        assert float(rows[0]["density"]) == 0.0
        expected = 1 / 3 - math.exp(-15) / 3
        assert float(rows[-1]["density"]) == pytest.approx(expected, abs=1e-9)

    def test_t0_column_zero_for_all_layers(self, capsys):
        code, out, _ = run_cli(
            capsys, "analytic", "curve", "--t-max", "1", "--t-step", "0.5"
        )
        rows = [r for r in parse_csv(out) if r["t"] == "0"]
        assert len(rows) == 4
        assert all(float(r["density"]) == 0.0 for r in rows)

    def test_negative_grid_rejected(self, capsys):
        code, _, err = run_cli(capsys, "analytic", "curve", "--t-max", "-1")
        assert code == 2
        assert "t-max" in err

    def test_curve_plot(self, tmp_path, capsys):
        out_csv = tmp_path / "curve.csv"
        code, _, _ = run_cli(
            capsys, "analytic", "curve", "--out", str(out_csv), "--plot"
        )
        assert code == 0
        assert (tmp_path / "curve.png").stat().st_size > 0


class TestSimulate:
    def simulate(self, capsys, tmp_path, *extra):
        out_csv = tmp_path / "sim.csv"
        code, out, err = run_cli(
            capsys,
            "simulate",
            "--sites",
            "3",
            "--arrivals",
            "120",
            "--reps",
            "2000",
            "--layers",
            "2",
            "--seed",
            "42",
            "--out",
            str(out_csv),
            *extra,
        )
        return code, out_csv, err

    def test_basic_run_schema(self, capsys, tmp_path):
        code, out_csv, _ = self.simulate(capsys, tmp_path)
        assert code == 0
        rows = parse_csv(out_csv.read_text())
        assert list(rows[0]) == [
            "site",
            "layer",
            "mean",
            "stderr",
            "replications",
            "mode",
            "t_or_M",
            "seed",
        ]
        assert rows[0]["mode"] == "fixed_arrivals"

    def test_threads_do_not_change_bytes(self, capsys, tmp_path):
        _, csv1, _ = self.simulate(capsys, tmp_path, "--threads", "1")
        data1 = csv1.read_bytes()
        _, csv2, _ = self.simulate(capsys, tmp_path, "--threads", "4")
        assert data1 == csv2.read_bytes()

    def test_rerun_from_manifest_is_byte_identical(self, capsys, tmp_path):
        _, out_csv, _ = self.simulate(capsys, tmp_path)
        original = out_csv.read_bytes()
        manifest = out_csv.with_suffix(".csv.manifest.json")
        replay_csv = tmp_path / "replay.csv"
        code, _, _ = run_cli(
            capsys,
            "simulate",
            "--from-manifest",
            str(manifest),
            "--out",
            str(replay_csv),
        )
        assert code == 0
        assert replay_csv.read_bytes() == original

    def test_single_rep_deterministic(self, capsys, tmp_path):
        a = self.simulate(capsys, tmp_path, "--reps", "1")[1].read_bytes()
        b = self.simulate(capsys, tmp_path, "--reps", "1")[1].read_bytes()
        assert a == b

    def test_conflicting_modes_usage_error(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys,
            "simulate",
            "--arrivals",
            "10",
            "--time",
            "1.0",
            "--out",
            str(tmp_path / "x.csv"),
        )
        assert code == 2
        assert "--arrivals" in err or "--time" in err

    def test_missing_mode_usage_error(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "simulate", "--out", str(tmp_path / "x.csv"))
        assert code == 2

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "n_sites = 3\nmode = fixed_arrivals\narrivals = 60\n"
            "replications = 500\nlayers = 2\nseed = 9\n"
        )
        out_csv = tmp_path / "sim.csv"
        code, _, _ = run_cli(
            capsys, "simulate", "--config", str(cfg), "--out", str(out_csv)
        )
        assert code == 0
        assert parse_csv(out_csv.read_text())[0]["seed"] == "9"

    def test_seed_env_var_default(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("MLPARK_SEED", "777")
        out_csv = tmp_path / "sim.csv"
        run_cli(
            capsys,
            "simulate",
            "--arrivals",
            "30",
            "--reps",
            "100",
            "--layers",
            "1",
            "--out",
            str(out_csv),
        )
        assert parse_csv(out_csv.read_text())[0]["seed"] == "777"

    def test_raise_stats_output(self, capsys, tmp_path):
        code, _, _ = self.simulate(capsys, tmp_path, "--raise-stats")
        # fraction line goes to stdout before csv note
        captured_ok = code == 0
        assert captured_ok

    def test_plot(self, capsys, tmp_path):
        code, out_csv, _ = self.simulate(capsys, tmp_path, "--plot")
        assert code == 0
        assert out_csv.with_suffix(".png").stat().st_size > 0


class TestOracleCommands:
    def test_exact(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "exact", "--arrivals", "2")
        assert code == 0
        rows = parse_csv(out)
        center = [r for r in rows if r["site"] == "1" and r["layer"] == "1"][0]
        assert (center["numerator"], center["denominator"]) == ("1", "3")

    def test_poissonized(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "oracle",
            "poissonized",
            "--time",
            "0.5",
            "--layer",
            "1",
            "--m-max",
            "10",
        )
        assert code == 0
        row = parse_csv(out)[0]
        expected = 1 / 3 - math.exp(-1.5) / 3
        assert float(row["value"]) == pytest.approx(
            expected, abs=float(row["tail_bound"]) + 1e-10
        )

    def test_height_dist(self, capsys):
        code, out, _ = run_cli(capsys, "oracle", "height-dist", "--arrivals", "2")
        assert code == 0
        rows = parse_csv(out)
        assert [(r["numerator"], r["denominator"]) for r in rows] == [
            ("0", "1"),
            ("2", "9"),
            ("7", "9"),
        ]

    def test_budget_error_exit_code(self, capsys):
        code, _, err = run_cli(
            capsys, "oracle", "exact", "--sites", "5", "--arrivals", "15"
        )
        assert code == 2
        assert "budget" in err


class TestVerify:
    def test_quick_passes(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "quick")
        assert code == 0
        lines = [l for l in out.splitlines() if l.startswith(("PASS", "FAIL"))]
        assert len(lines) == 11
        assert all(l.startswith("PASS") for l in lines)

    def test_fault_injection_fails_table_check(self, monkeypatch):
        # corrupt one exact constant; the table check must notice
        monkeypatch.setitem(verify.TABLE_END_DENSITIES, 4, Fraction(970, 2187))
        assert not verify.check_end_density_table().passed


def test_console_script_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "multilayer_parking.cli", "analytic", "table", "--layers", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert "1/3" in proc.stdout
