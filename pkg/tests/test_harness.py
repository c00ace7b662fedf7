import dataclasses
import json

import numpy as np
import pytest

from h2raman import io
from h2raman.cli import main
from h2raman.config import ExperimentConfig, config_hash, load_config, save_config
from h2raman.fitting import ObservedCurve, fit_parameters
from h2raman.scans import (
    build_context,
    persist_delay_scan,
    persist_pressure_scan,
    run_best_case,
    run_delay_scan,
    run_linearity_scan,
    run_pressure_scan,
    time_bin_report,
)


def fast_config(**overrides) -> ExperimentConfig:
    cfg = ExperimentConfig()
    cfg.delay_scan.points = 300
    cfg.delay_scan.stop_ps = 30.0
    cfg.pressure_scan.points = 7
    cfg.linearity_scan.points = 3
    for key, value in overrides.items():
        setattr(cfg, key, value)
    return cfg


class TestConfig:
    def test_yaml_roundtrip_lossless(self, tmp_path):
        cfg = fast_config()
        cfg.medium.pressure_bar = 4.5
        cfg.seed = 1234
        path = tmp_path / "config.yaml"
        save_config(cfg, path)
        loaded = load_config(path)
        assert loaded.to_dict() == cfg.to_dict()
        assert config_hash(loaded) == config_hash(cfg)

    def test_hash_sensitive_to_values(self):
        a, b = ExperimentConfig(), ExperimentConfig()
        b.medium.pressure_bar = 3.1
        assert config_hash(a) != config_hash(b)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            ExperimentConfig.from_dict({"nonsense": 1})
        with pytest.raises(ValueError, match="unknown keys in config section"):
            ExperimentConfig.from_dict({"medium": {"pressure_mbar": 3000}})

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        assert load_config(path).to_dict() == ExperimentConfig().to_dict()


class TestIo:
    def test_delay_scan_roundtrip(self, tmp_path):
        run = run_delay_scan(fast_config())
        path = tmp_path / "scan.csv"
        io.write_delay_scan_csv(path, run.scan)
        loaded = io.read_delay_scan_csv(path)
        np.testing.assert_allclose(loaded.delays, run.scan.delays, rtol=1e-12)
        np.testing.assert_allclose(loaded.values, run.scan.values, rtol=1e-12)

    def test_empty_csv_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ValueError, match="empty"):
            io.read_delay_scan_csv(path)

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,value\n0,0\n")
        with pytest.raises(ValueError, match="expected columns"):
            io.read_delay_scan_csv(path)

    def test_bad_row_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("delay_ps,efficiency\n0.0,0.1\nbroken,0.2\n")
        with pytest.raises(ValueError, match="row 3"):
            io.read_delay_scan_csv(path)


class TestDelayScanRuns:
    def test_persisted_outputs_reproducible(self, tmp_path):
        cfg = fast_config()
        paths = []
        for sub in ("a", "b"):
            run = run_delay_scan(cfg)
            persist_delay_scan(run, cfg, tmp_path / sub)
            paths.append(tmp_path / sub)
        for name in ("delay_scan.csv", "spectrum.csv", "delay_scan.json", "spectrum.json"):
            assert (paths[0] / name).read_bytes() == (paths[1] / name).read_bytes()

    def test_sidecar_carries_config_hash(self, tmp_path):
        cfg = fast_config()
        run = run_delay_scan(cfg)
        persist_delay_scan(run, cfg, tmp_path)
        meta = io.read_metadata(tmp_path / "delay_scan.json")
        assert meta["config_hash"] == config_hash(cfg)
        assert meta["seed"] is None

    def test_single_j_override_decays_monotonically(self):
        cfg = fast_config()
        cfg.medium.single_j = 1
        run = run_delay_scan(cfg)
        assert np.all(np.diff(run.scan.values) < 0.0)

    def test_gamma_override_zero_single_j_flat(self):
        cfg = fast_config()
        cfg.medium.single_j = 1
        cfg.medium.gamma_override_s = 0.0
        run = run_delay_scan(cfg)
        v = run.scan.values
        assert (v.max() - v.min()) / v.max() < 1e-6

    def test_gamma_override_zero_removes_secular_decay(self):
        # With the decay off, the scan is the zero-delay efficiency times the
        # (known, quasi-periodic) multi-J interference modulation and nothing
        # else; dividing the modulation out leaves a flat envelope.
        from h2raman.coherence import retrieved_amplitude

        cfg = fast_config()
        cfg.medium.gamma_override_s = 0.0
        cfg.delay_scan.points = 900
        cfg.delay_scan.stop_ps = 90.0
        run = run_delay_scan(cfg)
        v, t = run.scan.values, run.scan.delays
        assert np.all(v <= v[0] * (1 + 1e-9))
        modulation = (
            np.abs(retrieved_amplitude(run.context.ensemble, t)) ** 2
            / np.abs(retrieved_amplitude(run.context.ensemble, 0.0)) ** 2
        )
        flattened = v / modulation
        assert (flattened.max() - flattened.min()) / flattened.max() < 1e-6

    def test_parallel_jobs_match_serial(self):
        cfg = fast_config()
        serial = run_delay_scan(cfg, jobs=1)
        parallel = run_delay_scan(cfg, jobs=2)
        np.testing.assert_array_equal(serial.scan.values, parallel.scan.values)


class TestPressureScanRuns:
    def test_zero_write_energy_zeroes_both_curves(self):
        cfg = fast_config()
        cfg.write.energy_nj = 0.0
        run = run_pressure_scan(cfg)
        np.testing.assert_array_equal(run.result.write_efficiency, 0.0)
        np.testing.assert_array_equal(run.result.read_efficiency, 0.0)

    def test_alpha_factorizes_write_curve(self):
        cfg = fast_config()
        base = run_pressure_scan(cfg)
        unit = fast_config(alpha=1.0)
        matched = run_pressure_scan(unit)
        np.testing.assert_allclose(
            base.result.write_efficiency,
            cfg.alpha * matched.result.write_efficiency,
            rtol=1e-12,
        )
        np.testing.assert_allclose(
            base.result.read_efficiency, matched.result.read_efficiency, rtol=1e-12
        )

    def test_parallel_jobs_match_serial(self, tmp_path):
        cfg = fast_config()
        serial = run_pressure_scan(cfg, jobs=1)
        parallel = run_pressure_scan(cfg, jobs=2)
        np.testing.assert_array_equal(
            serial.result.read_efficiency, parallel.result.read_efficiency
        )
        persist_pressure_scan(serial, cfg, tmp_path)
        assert (tmp_path / "pressure_scan.csv").exists()

    def test_storage_delay_snaps_to_rephasing_maximum(self):
        cfg = fast_config()
        run = run_pressure_scan(cfg)
        assert run.storage_time == pytest.approx(17.0e-12, abs=0.5e-12)
        fixed = fast_config()
        fixed.storage.snap_to_rephasing = False
        assert run_pressure_scan(fixed).storage_time == pytest.approx(16e-12, abs=1e-15)


class TestLinearity:
    def test_efficiencies_energy_independent(self):
        cfg = fast_config()
        rows = run_linearity_scan(cfg, [5.0, 50.0, 150.0])
        eta_w = [r.eta_w for r in rows]
        eta_r = [r.eta_r for r in rows]
        assert max(eta_w) - min(eta_w) < 1e-10 * max(eta_w)
        assert max(eta_r) - min(eta_r) < 1e-10 * max(eta_r)

    def test_single_energy_single_row(self):
        rows = run_linearity_scan(fast_config(), [42.0])
        assert len(rows) == 1
        assert rows[0].signal_energy_nj == 42.0

    def test_scaling_energies_tenfold_identical(self):
        cfg = fast_config()
        rows_lo = run_linearity_scan(cfg, [5.0, 15.0])
        rows_hi = run_linearity_scan(cfg, [50.0, 150.0])
        for lo, hi in zip(rows_lo, rows_hi):
            assert lo.eta_w == pytest.approx(hi.eta_w, rel=1e-10)
            assert lo.eta_r == pytest.approx(hi.eta_r, rel=1e-10)

    def test_nonpositive_energy_rejected(self):
        with pytest.raises(ValueError):
            run_linearity_scan(fast_config(), [0.0])


class TestTimeBinReport:
    def test_default_operating_point(self):
        report = time_bin_report(fast_config())
        assert report.bandwidth_thz == pytest.approx(10.0, rel=1e-12)
        assert report.storage_1e_ns == pytest.approx(1.0, rel=0.05)
        assert 5e3 <= report.bins <= 2e4

    def test_longer_pulse_fewer_bins(self):
        cfg = fast_config()
        cfg.signal.duration_fs = 1000.0
        cfg.grid.nt = 1024
        cfg.grid.t_min_ps = -3.0
        cfg.grid.t_max_ps = 3.0
        report = time_bin_report(cfg)
        assert report.bins == pytest.approx(1e3, rel=0.1)

    def test_doubled_gamma_halves_bins(self):
        base = time_bin_report(fast_config())
        cfg = fast_config()
        cfg.calibration.lifetime_ns = 0.5  # doubles Gamma at every pressure
        doubled = time_bin_report(cfg)
        assert base.bins / doubled.bins == pytest.approx(2.0, rel=0.05)


class TestFit:
    def synthetic_pressure_curve(self, cfg, kind="write_efficiency_vs_pressure"):
        run = run_pressure_scan(cfg)
        y = (
            run.result.write_efficiency
            if kind.startswith("write")
            else run.result.read_efficiency
        )
        return ObservedCurve(kind=kind, x=run.result.pressures, y=y)

    def test_zero_residual_at_true_parameters(self):
        cfg = fast_config()
        curve = self.synthetic_pressure_curve(cfg)
        result = fit_parameters(curve, ["alpha"], cfg)
        assert result.converged
        assert result.residual_norm < 1e-10
        assert result.values["alpha"] == pytest.approx(cfg.alpha, abs=1e-6)

    def test_alpha_round_trip_from_perturbed_start(self):
        cfg = fast_config()
        curve = self.synthetic_pressure_curve(cfg)
        result = fit_parameters(curve, ["alpha"], cfg, initial={"alpha": 0.6})
        assert result.converged
        assert result.values["alpha"] == pytest.approx(0.35, abs=0.01)

    def test_dephasing_coefficients_round_trip(self):
        # Delay-scan envelopes at two pressures pin both Gamma(p) terms.
        cfg = fast_config()
        ctx = build_context(cfg)
        truth = ctx.calibration.dephasing
        curves = []
        for p in (1.5, 6.0):
            delays = np.linspace(0.0, 300e-12, 16)
            sim = _delay_curve(cfg, p, delays)
            curves.append(
                ObservedCurve(kind="delay_scan", x=delays, y=sim, pressure_bar=p)
            )
        result = fit_parameters(
            curves,
            ["c_diff", "c_coll"],
            cfg,
            initial={"c_diff": truth.c_diff * 1.4, "c_coll": truth.c_coll * 0.7},
        )
        assert result.converged
        assert result.values["c_diff"] == pytest.approx(truth.c_diff, rel=0.05)
        assert result.values["c_coll"] == pytest.approx(truth.c_coll, rel=0.05)

    def test_unknown_parameter_rejected(self):
        cfg = fast_config()
        curve = self.synthetic_pressure_curve(cfg)
        with pytest.raises(ValueError, match="unknown fit parameters"):
            fit_parameters(curve, ["zeta"], cfg)

    def test_curve_validation(self):
        with pytest.raises(ValueError, match="pressure_bar"):
            ObservedCurve(kind="delay_scan", x=np.zeros(3), y=np.zeros(3))
        with pytest.raises(ValueError, match="unknown curve kind"):
            ObservedCurve(kind="banana", x=np.zeros(3), y=np.zeros(3))


def _delay_curve(cfg, pressure, delays):
    from h2raman.fitting import _simulate_curve

    ctx = build_context(cfg)
    curve = ObservedCurve(
        kind="delay_scan", x=delays, y=np.zeros_like(delays), pressure_bar=pressure
    )
    return _simulate_curve(curve, ctx, cfg, cfg.alpha)


class TestBestCase:
    def test_best_case_summary(self):
        cfg = fast_config()
        cfg.pressure_scan.points = 13
        best = run_best_case(cfg)
        assert 4.0 <= best.pressure_bar <= 10.0
        assert best.storage_time == pytest.approx(5.68e-12, abs=0.4e-12)
        assert best.eta_tot == pytest.approx(best.eta_w * best.eta_r, rel=1e-12)
        assert best.eta_tot_mode_matched == pytest.approx(best.eta_tot / cfg.alpha, rel=1e-12)


class TestCli:
    def test_report_command(self, tmp_path, capsys):
        rc = main(["report", "--out", str(tmp_path)])
        assert rc == 0
        payload = json.loads((tmp_path / "report.json").read_text())
        assert 5e3 <= payload["time_bins"] <= 2e4
        assert "config_hash" in payload

    def test_calibrate_command(self, tmp_path):
        rc = main(["calibrate", "--out", str(tmp_path)])
        assert rc == 0
        payload = json.loads((tmp_path / "calibration.json").read_text())
        assert payload["g_ref"] > 0

    def test_delay_scan_and_spectrum_commands(self, tmp_path):
        cfg = fast_config(output_dir=str(tmp_path / "run"))
        cfg_path = tmp_path / "cfg.yaml"
        save_config(cfg, cfg_path)
        assert main(["delay-scan", "--config", str(cfg_path)]) == 0
        scan_csv = tmp_path / "run" / "delay_scan.csv"
        assert scan_csv.exists()
        out2 = tmp_path / "spec"
        rc = main(["spectrum", "--scan", str(scan_csv), "--out", str(out2)])
        assert rc == 0
        assert (out2 / "spectrum.csv").exists()

    def test_linearity_and_pressure_commands(self, tmp_path):
        cfg = fast_config(output_dir=str(tmp_path / "run"))
        cfg.pressure_scan.points = 5
        cfg_path = tmp_path / "cfg.yaml"
        save_config(cfg, cfg_path)
        assert main(["pressure-scan", "--config", str(cfg_path)]) == 0
        assert main(["linearity-scan", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "run" / "pressure_scan.csv").exists()
        assert (tmp_path / "run" / "linearity.csv").exists()

    def test_fit_command(self, tmp_path):
        cfg = fast_config(output_dir=str(tmp_path / "run"))
        cfg.pressure_scan.points = 5
        cfg_path = tmp_path / "cfg.yaml"
        save_config(cfg, cfg_path)
        assert main(["pressure-scan", "--config", str(cfg_path)]) == 0
        rc = main(
            [
                "fit",
                "--config", str(cfg_path),
                "--data", str(tmp_path / "run" / "pressure_scan.csv"),
                "--kind", "write_efficiency_vs_pressure",
                "--free", "alpha",
            ]
        )
        assert rc == 0
        payload = json.loads((tmp_path / "run" / "fit.json").read_text())
        assert payload["values"]["alpha"] == pytest.approx(0.35, abs=0.01)

    def test_error_is_machine_readable(self, tmp_path, capsys):
        rc = main(["report", "--config", str(tmp_path / "missing.yaml")])
        assert rc == 1
        err = json.loads(capsys.readouterr().err.strip())
        assert err["error"] == "FileNotFoundError"

    def test_seed_recorded(self, tmp_path):
        cfg = fast_config(output_dir=str(tmp_path / "run"))
        cfg_path = tmp_path / "cfg.yaml"
        save_config(cfg, cfg_path)
        assert main(["delay-scan", "--config", str(cfg_path), "--seed", "7"]) == 0
        meta = io.read_metadata(tmp_path / "run" / "delay_scan.json")
        assert meta["seed"] == 7
