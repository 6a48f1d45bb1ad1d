import copy
import csv
import json
import math
import subprocess
import sys

import pytest

from fermion_wn.cli import PRESETS, ConfigError, load_config, main, parse_config

from oracles import MASSIVE1D_ELEMENT_1P_0M


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def _small_massive(tmp_path):
    cfg = copy.deepcopy(PRESETS["massive1d"])
    cfg["analysis"]["ladder"] = [8, 16, 32, 64]
    cfg["analysis"]["p_values"] = [0.5, 1.0]
    return _write(tmp_path, cfg)


def test_parse_rejects_unknown_keys():
    bad = copy.deepcopy(PRESETS["massive1d"])
    bad["scenario"]["colour"] = 1
    with pytest.raises(ConfigError, match="colour"):
        parse_config(bad)


@pytest.mark.parametrize("mutate", [
    lambda c: c["scenario"].update(torus_dim=2),
    lambda c: c["analysis"].update(ladder=[8, 4, 16, 32]),
    lambda c: c["analysis"].update(ladder=[8, 16, 32]),
    lambda c: c["gauge"]["coefficients"].append({"gamma": [1], "re": 0.5}),
    lambda c: c["gauge"]["coefficients"].__setitem__(0, {"gamma": [1], "re": 0.7}),
    lambda c: c["scenario"].update(mass=0.5, shift_c=0.5),
])
def test_parse_rejects_invalid(mutate):
    cfg = copy.deepcopy(PRESETS["massive1d"])
    mutate(cfg)
    with pytest.raises(ConfigError):
        parse_config(cfg)


def test_minimal_config_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, {"scenario": {"torus_dim": 1, "mass": 2.0},
                                        "gauge": {"coefficients": [{"gamma": [0], "re": 1.0}]}}))
    assert cfg.max_particles == 4 and cfg.scenario.shift_c == 2.0


def test_malformed_config_exit_code(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["verify", "--config", str(path), "--suite", "algebra"]) == 2
    assert "config error" in capsys.readouterr().err
    assert main(["verify", "--config", str(tmp_path / "missing.json"), "--suite", "algebra"]) == 2


def test_verify_algebra(capsys):
    assert main(["verify", "--config", "massive1d", "--suite", "algebra"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["max_residual"] <= 1e-12


def test_verify_failure_exit_code(capsys):
    assert main(["verify", "--config", "massive1d", "--suite", "algebra", "--tol", "1e-30"]) == 1
    assert json.loads(capsys.readouterr().out)["passed"] is False


def test_verify_implementer_zero_gauge(tmp_path, capsys):
    cfg = copy.deepcopy(PRESETS["massive1d"])
    cfg["gauge"]["coefficients"] = []
    assert main(["verify", "--config", _write(tmp_path, cfg), "--suite", "implementer"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert all(v == 0.0 for v in report["residuals"].values())


def test_verify_report_deterministic(capsys):
    main(["verify", "--config", "massive1d", "--suite", "algebra", "--seed", "3"])
    first = capsys.readouterr().out
    main(["verify", "--config", "massive1d", "--suite", "algebra", "--seed", "3"])
    assert capsys.readouterr().out == first


def test_analyze_outputs(tmp_path, capsys):
    cfg_path = _small_massive(tmp_path)
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    assert main(["analyze", "--config", cfg_path, "--out", str(out), "--csv", str(table)]) == 0
    report = json.loads(out.read_text())
    assert report["config"]["analysis"]["ladder"] == [8, 16, 32, 64]
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["criterion", "p", "cutoff", "partial_sum"]
    assert len(rows) - 1 == 3 * 2 * 4
    summary = json.loads(capsys.readouterr().out)
    assert summary["verdicts"] == report["analysis"]["verdicts"]


def test_analyze_byte_identical(tmp_path):
    cfg_path = _small_massive(tmp_path)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["analyze", "--config", cfg_path, "--out", str(a)])
    main(["analyze", "--config", cfg_path, "--out", str(b), "--workers", "2"])
    assert a.read_bytes() == b.read_bytes()


def test_analyze_timings_opt_in(tmp_path):
    cfg_path = _small_massive(tmp_path)
    out = tmp_path / "t.json"
    main(["analyze", "--config", cfg_path, "--out", str(out), "--timings"])
    assert "timings" in json.loads(out.read_text())


def test_analyze_unwritable(tmp_path):
    assert main(["analyze", "--config", _small_massive(tmp_path), "--out", str(tmp_path / "no" / "x.json")]) == 2


def test_matelem_examples(capsys):
    assert main(["matelem", "--config", "massive1d", "--alpha-out", "1", "--alpha-in", "0",
                 "--s", "+", "--t", "-"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert math.isclose(rep["closed_form"][0], MASSIVE1D_ELEMENT_1P_0M, abs_tol=1e-15)
    assert rep["abs_difference"] < 1e-15
    main(["matelem", "--config", "massive1d", "--alpha-out", "1", "--alpha-in", "5", "--s", "+", "--t", "-"])
    assert json.loads(capsys.readouterr().out)["closed_form"] == [0.0, 0.0]
    main(["matelem", "--config", "massive1d", "--alpha-out", "2", "--alpha-in", "-3", "--s", "+", "--t", "+"])
    assert json.loads(capsys.readouterr().out)["closed_form"] == [0.0, 0.0]


def test_matelem_outside_cutoff():
    assert main(["matelem", "--config", "massive1d", "--alpha-out", "9", "--alpha-in", "0",
                 "--s", "+", "--t", "-"]) == 2
    assert main(["matelem", "--config", "massive1d", "--alpha-out", "1,2", "--alpha-in", "0",
                 "--s", "+", "--t", "-"]) == 2


def _energies(capsys, config, count):
    assert main(["spectrum", "--config", config, "--count", str(count)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()[1:]
    return [(float(line.split()[-2]), float(line.split()[-1])) for line in lines]


def test_spectrum_massive_circle(capsys):
    rows = _energies(capsys, "massive1d", 3)
    assert rows[0] == (2.0, 2.0) and rows[1] == (2.0, 2.0) and rows[2][0] > 2


def test_spectrum_massless_circle_shift(capsys):
    rows = _energies(capsys, "massless1d", 2)
    assert rows[0] == (0.0, 2.0)


def test_spectrum_three_torus_multiplicity(capsys):
    rows = _energies(capsys, "massive3d", 20)
    assert sum(math.isclose(e, math.sqrt(5), abs_tol=1e-9) for e, _ in rows) == 12


def test_console_script_entry():
    out = subprocess.run([sys.executable, "-m", "fermion_wn.cli", "spectrum", "--config", "massive1d",
                          "--count", "1"], capture_output=True, text=True, check=True)
    assert "2.000000000" in out.stdout
