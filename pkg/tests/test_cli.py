import json
import math
from pathlib import Path

import numpy as np
import pytest

from coopsec.channel import dbm_to_watts
from coopsec.cli import (
    CSV_COLUMNS,
    EXIT_CONFIG,
    EXIT_INFEASIBLE,
    EXIT_OK,
    RunManifest,
    emit_results,
    load_json_rows,
    main,
    parse_config,
)
from coopsec.errors import ParseError, UnitError, UnknownKey
from coopsec.montecarlo import Strategy, SweepConfig, run_sweep

ROOT = Path(__file__).resolve().parents[1]
DEMO = ROOT / "configs" / "demo.conf"
GOLDEN = Path(__file__).parent / "data" / "demo_golden.csv"


def test_empty_document_defaults():
    cfg = parse_config("")
    g = cfg.geometry
    assert g.noise_power == pytest.approx(1e-9, rel=1e-12)
    assert g.wavelength == 0.33
    assert g.cluster_radius == pytest.approx(1.65)
    assert g.dest_distance == pytest.approx(33.0)
    assert g.eav_distance_range == pytest.approx((66.0, 165.0))
    assert g.path_loss_exponent == 4.0
    assert cfg.fixed_value == 3.0
    assert cfg.strategies == (Strategy.COOP_MIN_POWER,)


def test_dbm_conversion():
    cfg = parse_config("noise_power_dbm = -60\n")
    assert cfg.geometry.noise_power == pytest.approx(1e-9, rel=1e-12)
    cfg = parse_config("strategy = coop_max_secrecy\ntransmit_power = 5 dBm\n")
    assert cfg.fixed_value == pytest.approx(dbm_to_watts(5), rel=1e-12)


def test_units_and_ranges():
    cfg = parse_config("cluster_radius = 2 m  # comment\nn_eavesdroppers = 1..3, 6\nnoise_power = 2 mW\n")
    assert cfg.geometry.cluster_radius == 2.0
    assert cfg.geometry.dest_distance == 40.0
    assert cfg.n_eavesdroppers == (1, 2, 3, 6)
    assert cfg.geometry.noise_power == pytest.approx(2e-3)


def test_zero_nodes_reports_position():
    with pytest.raises(ParseError) as info:
        parse_config("n_nodes = 0")
    assert (info.value.line, info.value.column) == (1, 11)
    assert "line 1, column 11" in str(info.value)


def test_unknown_key():
    with pytest.raises(UnknownKey) as info:
        parse_config("trials = 3\n  colour = red\n")
    assert (info.value.line, info.value.column) == (2, 3)


def test_unit_error():
    with pytest.raises(UnitError):
        parse_config("wavelength = 0.33 W")


@pytest.mark.parametrize(
    "text",
    [
        "trials = 1\ntrials = 2",
        "noise_power = 1e-9\nnoise_power_dbm = -60",
        "trials",
        "seed = -1",
        "strategy = coop_min_power, coop_max_secrecy",
        "strategy = telepathy",
        "target_secrecy = 2\nstrategy = coop_max_secrecy",
        "eav_distance_min = 10\neav_distance_max = 5",
        "stage1 = maybe",
    ],
)
def test_rejected_configs(text):
    with pytest.raises(ParseError):
        parse_config(text)


def small_result():
    cfg = SweepConfig(n_nodes=(4,), n_eavesdroppers=(1,), trials=3, base_seed=2)
    return run_sweep(cfg, workers=1)


def test_csv_single_row():
    text = emit_results(small_result(), "csv").decode()
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("4,1,coop_min_power,transmit_power_w,")


def test_json_round_trip():
    res = small_result()
    data = emit_results(res, "json", RunManifest(None, {}, 2))
    assert load_json_rows(data) == res.rows
    doc = json.loads(data)
    assert doc["manifest"]["base_seed"] == 2
    assert "PCG64" in doc["metadata"]["prng"]


def test_json_nan_is_null():
    cfg = SweepConfig(n_nodes=(2,), n_eavesdroppers=(3,), trials=2)
    res = run_sweep(cfg, workers=1)
    doc = json.loads(emit_results(res, "json"))
    assert doc["rows"][0]["mean"] is None
    rows = load_json_rows(emit_results(res, "json"))
    assert math.isnan(rows[0].mean)


def test_manifest_timestamp(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    assert RunManifest(None, {}, 1).timestamp == "1970-01-01T00:00:00+00:00"


def test_golden_demo_csv(tmp_path):
    out = tmp_path / "demo.csv"
    assert main(["sweep", "--config", str(DEMO), "--out", str(out)]) == EXIT_OK
    assert out.read_bytes() == GOLDEN.read_bytes()
    manifest = json.loads((tmp_path / "demo.csv.manifest.json").read_text())
    assert manifest["base_seed"] == 2024
    assert manifest["outputs"] == [str(out), str(out) + ".manifest.json"]


def test_exit_code_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("n_nodes = 0\n")
    assert main(["sweep", "--config", str(bad)]) == EXIT_CONFIG
    assert "line 1, column 11" in capsys.readouterr().err


def test_exit_code_all_infeasible(tmp_path):
    conf = tmp_path / "c.conf"
    conf.write_text("n_nodes = 2\nn_eavesdroppers = 3\ntrials = 2\n")
    assert main(["sweep", "--config", str(conf), "--out", str(tmp_path / "o.csv")]) == EXIT_INFEASIBLE


def test_exit_code_io_error(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "missing.conf")]) == 1


def test_solve_command(tmp_path):
    out = tmp_path / "solve.json"
    assert main(["solve", "--nodes", "6", "--eavesdroppers", "1", "--seed", "3", "--out", str(out)]) == EXIT_OK
    rep = json.loads(out.read_text())
    w = np.array([complex(a, b) for a, b in rep["weights"]])
    assert w.shape == (6,)
    assert rep["secrecy_capacity"] == pytest.approx(3.0, abs=1e-9)
    assert rep["transmit_power"] == pytest.approx(float(np.vdot(w, w).real), rel=1e-12)
    p = rep["trace_powers"]
    assert all(b <= a for a, b in zip(p, p[1:]))


def test_figure_json_output(tmp_path):
    out = tmp_path / "f.json"
    assert main(["figure", "--preset", "fig5", "--trials", "2", "--format", "json", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    assert len(doc["rows"]) == 5 * 3 * 2
    assert not (tmp_path / "f.json.manifest.json").exists()
