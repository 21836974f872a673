"""Command-line interface: artifacts, manifests, determinism, and errors."""

import json

import numpy as np
import pytest

from qpotlab.cli import main
from qpotlab.grid import Grid, GridFunction, write_gridfunction


def read_json(path):
    return json.loads(path.read_text())


def read_csv_rows(path):
    lines = path.read_text().strip().splitlines()
    header = lines[0].split(",")
    return header, [line.split(",") for line in lines[1:]]


class TestVerifyEl:
    def test_family_member_passes(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(
            [
                "verify-el",
                "--q",
                "A2 * lap(R) / R",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        report = read_json(out / "residual_report.json")
        assert report["verdict"] == "passes"
        assert report["max_abs_residual"] <= 1e-10
        assert "verify-el: passes" in capsys.readouterr().out
        manifest = read_json(out / "manifest.json")
        assert manifest["scenario"] == "verify-el"
        assert manifest["outputs"] == ["residual_report.json"]
        assert "config_hash" in manifest

    def test_counterexample_fails_but_exits_zero(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["verify-el", "--q", "C * dx(R)^2 / R^2", "--out", str(out)])
        assert rc == 0
        report = read_json(out / "residual_report.json")
        assert report["verdict"] == "fails"
        assert "verify-el: fails" in capsys.readouterr().out

    def test_parse_error_exits_nonzero(self, tmp_path, capsys):
        rc = main(["verify-el", "--q", "sin(R)", "--out", str(tmp_path / "o")])
        assert rc == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_dimension_flag(self, tmp_path):
        out = tmp_path / "out"
        rc = main(
            ["verify-el", "--q", "A2 * lap(R) / R", "--dim", "2", "--out", str(out)]
        )
        assert rc == 0
        assert read_json(out / "residual_report.json")["dimension"] == 2


class TestCoefficients:
    def test_table_written(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["coefficients", "--max-n", "6", "--out", str(out)])
        assert rc == 0
        header, rows = read_csv_rows(out / "coefficients.csv")
        assert header == ["n", "coefficient", "value", "reference", "match"]
        assert len(rows) == 7
        assert rows[0][1] == "1"
        assert rows[1][1] == "1/2"
        assert rows[2][1] == "-1/8"
        assert all(r[-1] == "true" for r in rows)
        assert "reference match: all" in capsys.readouterr().out


class TestQpot:
    def test_evaluates_on_gridfunction(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.cfg"
        spec_path.write_text(
            "units = electron\nsource = relativistic\nmax_order = 4\n"
        )
        g = Grid.uniform(0.0, 1.0, 129)
        f = GridFunction(g, np.sin(np.pi * g.points)).normalized()
        in_path = tmp_path / "field.csv"
        write_gridfunction(in_path, f, units="electron")
        out = tmp_path / "out"
        rc = main(
            [
                "qpot",
                "--spec",
                str(spec_path),
                "--input",
                str(in_path),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        assert (out / "qpotential.csv").exists()
        assert (out / "qpotential.csv.json").exists()
        manifest = read_json(out / "manifest.json")
        assert manifest["outputs"] == ["qpotential.csv", "qpotential.csv.json"]
        assert "3 term(s)" in capsys.readouterr().out

    def test_missing_input_errors(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.cfg"
        spec_path.write_text("source = relativistic\n")
        rc = main(
            [
                "qpot",
                "--spec",
                str(spec_path),
                "--input",
                str(tmp_path / "nope.csv"),
                "--out",
                str(tmp_path / "o"),
            ]
        )
        assert rc == 1
        assert "error:" in capsys.readouterr().err


class TestSpectraBox:
    def test_box_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(
            ["spectra", "--problem", "box", "--points", "257", "--out", str(out)]
        )
        assert rc == 0
        payload = read_json(out / "box_shifts.json")
        assert payload["E0"] == pytest.approx(37.6030162, rel=1e-6)
        assert payload["pc"] == pytest.approx(6199.20992, rel=1e-6)
        orders = [s["order"] for s in payload["shifts"]]
        assert orders == [0, 4]
        for s in payload["shifts"]:
            assert s["relative_gap"] < 1e-8
        header, rows = read_csv_rows(out / "eigenvalues.csv")
        assert header == ["tau", "E_linear", "E_modified", "E_linear_plus_shifts"]
        assert len(rows) == 5
        # tracked eigenvalue equals linear plus closed-form shifts
        for r in rows:
            assert float(r[2]) == pytest.approx(float(r[3]), rel=1e-9)
        assert "box: tau=1" in capsys.readouterr().out

    def test_higher_order_spec_skips_eigenvalues(self, tmp_path):
        spec_path = tmp_path / "spec.cfg"
        spec_path.write_text("source = relativistic\nmax_order = 6\n")
        out = tmp_path / "out"
        rc = main(
            [
                "spectra",
                "--problem",
                "box",
                "--spec",
                str(spec_path),
                "--points",
                "257",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        assert not (out / "eigenvalues.csv").exists()
        payload = read_json(out / "box_shifts.json")
        assert [s["order"] for s in payload["shifts"]] == [0, 4, 6]


class TestSpectraHydrogen:
    def test_hydrogen_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(
            [
                "spectra",
                "--problem",
                "hydrogen",
                "--radial-points",
                "1024",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        payload = read_json(out / "hydrogen_shifts.json")
        assert payload["radial_points"] == 1024
        assert payload["bohr_radius"] == pytest.approx(0.529177, rel=1e-5)
        assert len(payload["states"]) == 2
        for s in payload["states"]:
            assert s["relative_error"] < 0.02
            assert s["relative_gap"] < 1e-6
        assert "hydrogen: 1s/2s" in capsys.readouterr().out


class TestEvolve:
    def test_periodic_run_artifacts(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "source = relativistic\n"
            "orders = 2\n"
            "points = 64\n"
            "boundary = periodic\n"
            "initial = eigenmode\n"
            "tau = 2\n"
            "dt = 1e-7\n"
            "steps = 20\n"
            "store_every = 10\n"
        )
        out = tmp_path / "out"
        rc = main(["evolve", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        summary = read_json(out / "evolve_summary.json")
        assert summary["scheme"] == "split-step-spectral"
        assert summary["stored_frames"] == 3
        assert summary["max_norm_drift"] < 1e-10
        assert summary["clamp_count"] == 0
        for step in (0, 10, 20):
            assert (out / f"frame_{step:06d}.csv").exists()
            sidecar = read_json(out / f"frame_{step:06d}.csv.json")
            assert sidecar["columns"] == ["coordinate", "real", "imag"]
        header, rows = read_csv_rows(out / "series.csv")
        assert header == ["step", "time", "norm", "energy"]
        assert len(rows) == 3
        assert "evolve: 20 steps" in capsys.readouterr().out

    def test_initial_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "orders = 2\npoints = 64\nboundary = periodic\n"
            "initial = eigenmode\ndt = 1e-7\nsteps = 5\n"
        )
        out = tmp_path / "out"
        rc = main(
            [
                "evolve",
                "--config",
                str(cfg),
                "--initial",
                "gaussian",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        manifest = read_json(out / "manifest.json")
        assert manifest["config"]["initial"] == "gaussian"

    def test_missing_required_key(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("points = 64\nboundary = periodic\nsteps = 5\n")
        rc = main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "error:" in err and "dt" in err

    def test_dirichlet_defaults_to_crank_nicolson(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "orders = 2\npoints = 65\nboundary = dirichlet\n"
            "initial = eigenmode\ndt = 1e-8\nsteps = 4\n"
        )
        out = tmp_path / "out"
        rc = main(["evolve", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        summary = read_json(out / "evolve_summary.json")
        assert summary["scheme"] == "crank-nicolson-fd"


class TestRun:
    def test_scenario_from_config(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("scenario = ratios\npoints = 129\n")
        out = tmp_path / "out"
        rc = main(["run", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        header, rows = read_csv_rows(out / "ratios.csv")
        assert header[0] == "regime"
        assert [r[0] for r in rows] == ["atomic", "nuclear"]
        # grid quotient tracks the analytic ratio in both regimes
        for r in rows:
            analytic, on_grid = float(r[5]), float(r[6])
            assert abs(on_grid - analytic) / abs(analytic) < 1e-3

    def test_flag_overrides_config_scenario(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("scenario = ratios\nmax_n = 4\n")
        out = tmp_path / "out"
        rc = main(
            ["run", "--config", str(cfg), "--scenario", "coefficients", "--out", str(out)]
        )
        assert rc == 0
        assert (out / "coefficients.csv").exists()
        assert not (out / "ratios.csv").exists()

    def test_missing_scenario(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("points = 129\n")
        rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "no scenario" in capsys.readouterr().err

    def test_unknown_scenario(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("scenario = warp\n")
        rc = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 1
        assert "unknown scenario" in capsys.readouterr().err

    def test_seed_flag_recorded(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("scenario = verify-el\nq = A2 * lap(R) / R\n")
        out = tmp_path / "out"
        rc = main(["run", "--config", str(cfg), "--seed", "7", "--out", str(out)])
        assert rc == 0
        manifest = read_json(out / "manifest.json")
        assert manifest["seed"] == 7
        report = read_json(out / "residual_report.json")
        assert report["seed"] == 7


class TestDeterminism:
    def test_rerun_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main(
                ["spectra", "--problem", "box", "--points", "257", "--out", str(out)]
            )
            assert rc == 0
            outs.append(out)
        a, b = outs
        assert (a / "box_shifts.json").read_bytes() == (b / "box_shifts.json").read_bytes()
        assert (a / "eigenvalues.csv").read_bytes() == (b / "eigenvalues.csv").read_bytes()
        ma, mb = read_json(a / "manifest.json"), read_json(b / "manifest.json")
        ma.pop("timings")
        mb.pop("timings")
        assert ma == mb

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "qpotlab" in capsys.readouterr().out
