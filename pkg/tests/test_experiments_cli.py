import csv
import hashlib
import json
import math

import numpy as np
import pytest

from mpcrb.cli import load_preset, main
from mpcrb.experiments import (ConfigError, run_beampattern, run_bounds,
                               run_fig2, run_fig4, run_fig5, run_montecarlo,
                               run_selftest)
import mpcrb


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def small_fig2_config(**overrides):
    cfg = load_preset("fig2")
    cfg["trials"] = 25
    cfg["sweep"] = {"snr_db": {"start": 0.0, "stop": 20.0, "step": 10.0}}
    cfg.update(overrides)
    return cfg


def test_missing_field_reports_path():
    cfg = load_preset("fig2")
    del cfg["scene"]["smr_db"]
    with pytest.raises(ConfigError, match="scene.smr_db"):
        run_fig2(cfg, "unused")


def test_bad_geometry_reports_path():
    cfg = small_fig2_config()
    cfg["geometry"] = {"m_t": 0, "m_r": 4}
    with pytest.raises(ConfigError, match="geometry.m_t"):
        run_fig2(cfg, "unused")


def test_fig2_outputs_and_manifest(tmp_path):
    cfg = small_fig2_config()
    result = run_fig2(cfg, tmp_path)
    header, rows = read_csv(result["csv"])
    assert header == ["snr_db", "rcrb_deg", "rmcrb_deg", "rmse_mml_deg",
                      "rmse_ml_deg"]
    assert len(rows) == 3
    manifest = json.loads(result["manifest"].read_text())
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    assert manifest["config_sha256"] == hashlib.sha256(blob).hexdigest()
    got = hashlib.sha256(result["csv"].read_bytes()).hexdigest()
    assert manifest["outputs"]["fig2.csv"] == got
    assert manifest["versions"]["mpcrb"] == mpcrb.__version__
    # RFC 4180 line endings
    assert b"\r\n" in result["csv"].read_bytes()


def test_fig2_multipath_free_columns_coincide(tmp_path):
    cfg = small_fig2_config()
    cfg["scene"]["smr_db"] = 400.0     # numerically alpha_i = 0
    result = run_fig2(cfg, tmp_path)
    _, rows = read_csv(result["csv"])
    for row in rows:
        rcrb, rmcrb = float(row[1]), float(row[2])
        assert abs(rmcrb - rcrb) <= 1e-10 * rcrb


def test_fig2_rerun_byte_identical_any_workers(tmp_path):
    cfg = small_fig2_config()
    a = run_fig2(cfg, tmp_path / "a", workers=1)
    b = run_fig2(cfg, tmp_path / "b", workers=4)
    assert a["csv"].read_bytes() == b["csv"].read_bytes()
    ma = json.loads(a["manifest"].read_text())
    mb = json.loads(b["manifest"].read_text())
    assert ma["outputs"] == mb["outputs"]


def test_montecarlo_rerun_byte_identical(tmp_path):
    cfg = load_preset("montecarlo")
    cfg["trials"] = 20
    a = run_montecarlo(cfg, tmp_path / "a", workers=1)
    b = run_montecarlo(cfg, tmp_path / "b", workers=3)
    assert a["csv"].read_bytes() == b["csv"].read_bytes()


def test_fig4_degenerate_cell_is_empty(tmp_path):
    cfg = load_preset("fig4")
    cfg["scene"]["delta_theta_deg"] = 0.0
    cfg["sweep"] = {"smr_db": {"start": 0.0, "stop": 0.0, "step": 1.0}}
    result = run_fig4(cfg, tmp_path)
    header, rows = read_csv(result["csv"])
    assert rows[0][header.index("rmcrb_dphi_2pi3_deg")] == ""
    assert rows[0][header.index("rmcrb_dphi_0_deg")] != ""


def test_fig5_svg_and_grid(tmp_path):
    cfg = load_preset("fig5")
    cfg["grid"] = {
        "delta_phi_rad": {"start": -math.pi, "stop": math.pi, "step": math.pi / 4},
        "delta_theta_deg": {"start": 0.0, "stop": 4.0, "step": 2.0},
    }
    result = run_fig5(cfg, tmp_path, svg=True)
    header, rows = read_csv(result["csv"])
    assert header == ["delta_phi_rad", "delta_theta_deg", "rmcrb_over_rcrb"]
    assert len(rows) == 9 * 3
    svg = (tmp_path / "fig5.svg").read_text()
    assert svg.startswith("<svg")


def test_fig5_virtual_null_row_is_near_unity(tmp_path):
    # indirect angle on a virtual-array pattern null: the ratio hugs 1 and
    # is far flatter than a main-lobe row (measured band [1.007, 1.186])
    null_deg = math.degrees(math.asin(2.0 / 6.0))
    cfg = load_preset("fig5")
    cfg["grid"] = {
        "delta_phi_rad": {"start": -math.pi, "stop": math.pi, "step": math.pi / 12},
        "delta_theta_deg": {"start": null_deg, "stop": null_deg, "step": 1.0},
    }
    result = run_fig5(cfg, tmp_path)
    _, rows = read_csv(result["csv"])
    ratios = np.array([float(r[2]) for r in rows])
    assert np.all(np.abs(ratios - 1.0) < 0.2)

    cfg["grid"]["delta_theta_deg"] = {"start": 3.0, "stop": 3.0, "step": 1.0}
    result = run_fig5(cfg, tmp_path / "main")
    _, rows = read_csv(result["csv"])
    main_lobe = np.array([float(r[2]) for r in rows])
    assert main_lobe.max() - main_lobe.min() > (ratios.max() - ratios.min())


def test_fig4_low_smr_bias_grows_with_separation(tmp_path):
    plateaus = []
    for dth in (0.5, 2.0):
        cfg = load_preset("fig4")
        cfg["scene"]["delta_theta_deg"] = dth
        cfg["sweep"] = {"smr_db": {"start": -20.0, "stop": -20.0, "step": 1.0}}
        result = run_fig4(cfg, tmp_path / f"d{dth}")
        header, rows = read_csv(result["csv"])
        plateaus.append(float(rows[0][header.index("rmcrb_dphi_0_deg")]))
    assert plateaus[1] > plateaus[0]


def test_beampattern_csv_matches_library(tmp_path):
    cfg = load_preset("beampattern")
    cfg["grid_deg"] = {"start": -60.0, "stop": 60.0, "step": 1.0}
    result = run_beampattern(cfg, tmp_path)
    header, rows = read_csv(result["csv"])
    grid = np.array([float(r[0]) for r in rows])
    tx_db = np.array([float(r[1]) for r in rows])
    g = mpcrb.standard_virtual_ula(3, 4)
    ref_tx, _ = mpcrb.beampattern(g, 0.0, np.deg2rad(grid))
    np.testing.assert_array_equal(tx_db, ref_tx)


def test_bounds_runner(tmp_path):
    result = run_bounds(load_preset("bounds"), tmp_path)
    header, rows = read_csv(result["csv"])
    vals = dict(zip(header, map(float, rows[0])))
    assert vals["mcrb_rad2"] == pytest.approx(
        vals["m_rad2"] + vals["b_rad2"], rel=1e-12)
    assert vals["rmcrb_deg"] == pytest.approx(
        math.degrees(math.sqrt(vals["mcrb_rad2"])), rel=1e-12)


def test_selftest_passes_and_fault_injection_trips():
    ok, lines = run_selftest()
    assert ok
    assert any(line.startswith("INFO closed-form-vs-sandwich") for line in lines)
    bad, lines = run_selftest(inject_fault="dda")
    assert not bad
    assert any(line.startswith("FAIL steering-curvature-identity-i4")
               for line in lines)


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["selftest"]) == 0
    assert main(["selftest", "--inject-fault", "dda"]) == 1
    capsys.readouterr()

    # single-point degenerate bound -> exit 2
    cfg = load_preset("bounds")
    cfg["scene"]["psi_deg"] = 0.0
    cfg["scene"]["smr_db"] = 0.0
    cfg["scene"]["delta_phi_rad"] = 2.0 * math.pi / 3.0
    p = tmp_path / "degenerate.json"
    p.write_text(json.dumps(cfg))
    assert main(["bounds", "--config", str(p), "--out", str(tmp_path)]) == 2

    bad = tmp_path / "bad.json"
    bad.write_text("{\"geometry\": {}}")
    assert main(["fig2", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["fig2", "--config", str(tmp_path / "missing.json"),
                 "--out", str(tmp_path)]) == 1
    capsys.readouterr()


def test_cli_runs_fig2_with_overrides(tmp_path, capsys):
    cfg = small_fig2_config()
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    code = main(["fig2", "--config", str(p), "--out", str(tmp_path / "o"),
                 "--trials", "10", "--seed", "7", "--svg"])
    assert code == 0
    out = capsys.readouterr().out
    assert "fig2.csv" in out
    manifest = json.loads((tmp_path / "o" / "fig2_manifest.json").read_text())
    assert manifest["seed"] == 7
    assert manifest["config"]["trials"] == 10
    assert (tmp_path / "o" / "fig2.svg").exists()


def test_svg_deterministic(tmp_path):
    cfg = small_fig2_config()
    a = run_fig2(cfg, tmp_path / "a", svg=True)
    b = run_fig2(cfg, tmp_path / "b", svg=True)
    assert (tmp_path / "a" / "fig2.svg").read_bytes() == \
        (tmp_path / "b" / "fig2.svg").read_bytes()
