import math
from pathlib import Path

import numpy as np
import pytest

from bbmlab.functional import FunctionalValue
from bbmlab.harness import (
    PRESETS,
    ConfigError,
    ConvergenceSeries,
    SweepPoint,
    check_bounds,
    emit_report,
    estimate_limit,
    run_sweep,
    series_csv,
)
from bbmlab import cli


def fake_series(values, tol=0.02):
    pts = [
        SweepPoint(param=float(i + 1), functional=FunctionalValue("I", float(v), 1.0), energy=1.0)
        for i, v in enumerate(values)
    ]
    return ConvergenceSeries(
        scenario="flat-window-tv", axis="index", points=pts, seed_grid=10,
        declared_tol=tol,
    )


class TestEstimateLimit:
    def test_constant_series(self):
        s = fake_series([2.0, 2.0, 2.0, 2.0])
        value, hw, status = estimate_limit(s)
        assert (value, hw, status) == (2.0, 0.0, "converged")

    def test_harmonic_tail(self):
        s = fake_series([1 + 1 / i for i in (2, 4, 50, 60, 70)])
        value, hw, status = estimate_limit(s)
        assert status == "converged"
        assert value == pytest.approx(1.0, abs=0.02)
        assert hw <= 0.005

    def test_oscillation_flagged(self):
        s = fake_series([1.0, 3.0, 1.0, 3.0, 1.0])
        assert estimate_limit(s)[2] == "non-plateau"

    def test_divergence_flagged(self):
        s = fake_series([1.0, 2.0, 5.0, 20.0, 80.0])
        assert estimate_limit(s)[2] == "diverging"

    def test_needs_four_points(self):
        with pytest.raises(ValueError):
            estimate_limit(fake_series([1.0, 1.0, 1.0]))


@pytest.fixture(scope="module")
def small_flat_sweep():
    return run_sweep(
        "flat-window-tv", grid=4000,
        overrides={"values": (0.04, 0.02, 0.01, 0.005)}, workers=2,
    )


class TestSweeps:
    def test_flat_window_ratio_one(self, small_flat_sweep):
        s = small_flat_sweep
        assert s.status == "converged"
        assert s.points[-1].ratio == pytest.approx(1.0, rel=0.02)

    def test_grid_refinement_consistency(self, small_flat_sweep):
        finer = run_sweep(
            "flat-window-tv", grid=8000,
            overrides={"values": (0.04, 0.02, 0.01, 0.005)}, workers=2,
        )
        rel = abs(finer.plateau - small_flat_sweep.plateau) / finer.plateau
        assert rel < small_flat_sweep.declared_tol

    def test_window_power_ratio(self):
        s = run_sweep(
            "window-power-tv", grid=4000,
            overrides={"values": (0.04, 0.02, 0.01, 0.005)}, workers=2,
        )
        assert s.points[-1].ratio == pytest.approx(s.target_ratio, rel=0.02)
        assert s.target_ratio == pytest.approx(3.0 ** -0.5, rel=1e-12)

    def test_psi_sweep_checks_pass(self):
        s = run_sweep(
            "psi-sweep", grid=3000, overrides={"values": (50, 100, 200, 400)}, workers=2,
        )
        checks = {c.name: c for c in check_bounds(s)}
        assert checks["holder-bound"].passed
        assert checks["interpolation-bound"].passed
        assert checks["ratio-band"].passed

    def test_fractional_sweep_band(self):
        s = run_sweep("fractional-lower", grid=600, workers=2)
        checks = {c.name: c for c in check_bounds(s)}
        assert checks["positive-lower-bound"].passed
        assert 0.5 <= s.points[-1].ratio <= 1.5

    def test_unknown_preset_and_override(self):
        with pytest.raises(ConfigError):
            run_sweep("no-such-preset")
        with pytest.raises(ConfigError):
            run_sweep("flat-window-tv", overrides={"bogus": 1})

    def test_lambda_2d_smoke(self):
        s = run_sweep("lambda-2d-step", grid=32, workers=2)
        assert s.points[-1].functional.value > 0
        band = {c.name: c for c in check_bounds(s)}["ratio-band"]
        assert band.lhs > 0

    def test_phi_sweep_smoke(self):
        s = run_sweep("phi-sweep", grid=3000,
                      overrides={"values": (0.04, 0.02, 0.01, 0.005)}, workers=2)
        assert s.points[-1].ratio == pytest.approx(1.0, rel=0.03)

    def test_bbm_custom_kernel_reference_path(self):
        # the custom-kernel family runs through the reference fallback
        from bbmlab.funcspace import sample_function
        from bbmlab.functional import eval_I
        from bbmlab.mollifier import make_mollifier
        from bbmlab.space import build_lebesgue_interval

        space = build_lebesgue_interval(120)
        f = sample_function(space, "affine", a=1.0)
        flat = make_mollifier("flat-window", r=0.2)
        mu = 0.4  # interior flat-window normalization surrogate
        custom = make_mollifier(
            "custom-kernel", kernel=lambda d, x, y: (1.0 / mu) if d < 0.2 else 0.0
        )
        v = eval_I(space, f, 1.0, custom)
        assert np.isfinite(v.value) and v.value > 0

    def test_all_presets_proved_checks(self):
        # every shipped preset must pass its proved-inequality checks (reduced sizes)
        shrunk = {
            "bbm-1d-smooth": dict(grid=4000, overrides={"values": (25, 50, 100, 200)}),
            "cantor-gap": dict(grid=0, overrides={"depth": 4}),
            "bump-f0": dict(grid=4000, overrides={"values": (50, 100, 200, 400)}),
            "lambda-1d": dict(grid=20000, overrides={"values": (0.1, 0.05, 0.02, 0.01)}),
            "lambda-2d-step": dict(grid=24, overrides={}),
            "fractional-lower": dict(grid=400, overrides={}),
            "window-power-tv": dict(grid=4000, overrides={"values": (0.04, 0.02, 0.01, 0.005)}),
            "flat-window-tv": dict(grid=4000, overrides={"values": (0.04, 0.02, 0.01, 0.005)}),
            "psi-sweep": dict(grid=3000, overrides={"values": (50, 100, 200, 400)}),
            "phi-sweep": dict(grid=3000, overrides={"values": (0.04, 0.02, 0.01, 0.005)}),
        }
        hard = {"holder-bound", "interpolation-bound", "gap-lower-bound", "positive-lower-bound"}
        for name, kw in shrunk.items():
            series = run_sweep(name, grid=kw["grid"], overrides=kw["overrides"], workers=2)
            for c in check_bounds(series):
                if c.name in hard:
                    assert c.passed, f"{name}: {c.name} violated (margin {c.margin})"


class TestReports:
    def test_csv_schema_and_determinism(self, small_flat_sweep, tmp_path):
        text = series_csv(small_flat_sweep)
        lines = text.strip().split("\n")
        assert lines[0] == "scenario,axis,param,functional,energy,ratio,pairs,seed_grid"
        assert len(lines) == 1 + len(small_flat_sweep.points)
        rerun = run_sweep(
            "flat-window-tv", grid=4000,
            overrides={"values": (0.04, 0.02, 0.01, 0.005)}, workers=1,
        )
        assert series_csv(rerun) == text  # bytes equal across runs and workers

    def test_emit_report_files(self, small_flat_sweep, tmp_path):
        checks = check_bounds(small_flat_sweep)
        paths = emit_report(small_flat_sweep, checks, tmp_path)
        for key in ("csv", "summary", "gnuplot", "figure"):
            assert Path(paths[key]).exists()
        summary = Path(paths["summary"]).read_text()
        assert "plateau" in summary and "status" in summary and "check" in summary
        first = Path(paths["csv"]).read_bytes()
        emit_report(small_flat_sweep, checks, tmp_path)
        assert Path(paths["csv"]).read_bytes() == first


class TestCli:
    def test_bad_preset_exit_code(self, capsys):
        rc = cli.main(["eval", "--preset", "flat-window-tv", "--grid", "500"])
        assert rc == 0
        rc = cli.main(["sweep", "--config", "/nonexistent.ini"])
        assert rc == 1
        rc = cli.main(["sweep", "--preset", "no-such-scenario"])
        assert rc == 1
        with pytest.raises(SystemExit):
            cli.main(["--help"])

    def test_config_file_roundtrip(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text(
            "[scenario]\npreset = flat-window-tv\n\n"
            "[overrides]\nvalues = 0.04,0.02,0.01,0.005\n"
        )
        rc = cli.main([
            "sweep", "--config", str(cfg), "--grid", "2000",
            "--out", str(tmp_path / "rep"), "--workers", "2",
        ])
        assert rc == 0
        assert (tmp_path / "rep" / "flat-window-tv.csv").exists()

    def test_config_error_sections(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[scenario]\npreset = flat-window-tv\n[mystery]\nx = 1\n")
        assert cli.main(["sweep", "--config", str(cfg)]) == 1

    def test_resolution_refusal_exit_code(self):
        rc = cli.main(["eval", "--preset", "cantor-gap", "--grid", "1000"])
        assert rc == 3

    def test_audit_commands(self, capsys):
        assert cli.main(["audit-phi", "--preset", "flat-window-tv"]) == 0
        out = capsys.readouterr().out
        assert "C_phi" in out
        assert cli.main(["audit-space", "--preset", "flat-window-tv", "--grid", "400"]) == 0
        out = capsys.readouterr().out
        assert "doubling" in out
        assert cli.main(["audit-mollifier", "--preset", "flat-window-tv", "--grid", "400"]) == 0
        out = capsys.readouterr().out
        assert "violations=0" in out

    def test_report_subcommand(self, tmp_path, small_flat_sweep):
        paths = emit_report(small_flat_sweep, [], tmp_path)
        rc = cli.main(["report", "--csv", str(paths["csv"]), "--out", str(tmp_path / "r2")])
        assert rc == 0
        assert (tmp_path / "r2" / "flat-window-tv.png").exists()

    def test_bound_failure_exit_code(self, monkeypatch, tmp_path):
        from bbmlab.harness import BoundCheck

        def fake_checks(series, checks=None, companion=None):
            return [BoundCheck("holder-bound", 1.0, 0.5, -0.5, False)]

        monkeypatch.setattr(cli, "check_bounds", fake_checks)
        rc = cli.main([
            "sweep", "--preset", "flat-window-tv", "--grid", "1000",
            "--out", str(tmp_path),
        ])
        assert rc == 2

    def test_cantor_demo_small_depth(self, tmp_path, capsys):
        rc = cli.main([
            "cantor-demo", "--depth", "3", "--q", "2",
            "--out", str(tmp_path), "--workers", "2",
        ])
        out = capsys.readouterr().out
        assert rc == 0
        assert "incompatible with a single constant" in out
        assert (tmp_path / "cantor-gap_summary.txt").exists()
        assert (tmp_path / "bump-f0.csv").exists()
