import json

from click.testing import CliRunner

from dcsbem.cli import main
from dcsbem.harness import CSV_HEADER, manifest_path

SMALL = {"N": 64, "G": 8, "L": 8, "K": 2, "D": 3, "n_antennas": 2}


def write_config(tmp_path, **extra):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**SMALL, **extra}))
    return str(path)


def test_verify_passes():
    result = CliRunner().invoke(main, ["verify"])
    assert result.exit_code == 0, result.output
    assert "FAIL" not in result.output
    assert result.output.count("PASS") >= 4


def test_trial_json(tmp_path):
    out = tmp_path / "t.json"
    result = CliRunner().invoke(main, ["trial", "--config", write_config(tmp_path), "--seed", "4", "--out", str(out)])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["config"]["seed"] == 4
    assert set(data["result"]["nmse_db"]) == {"proposed", "proposed+smoothing", "ls"}


def test_trial_failure_exit_code(tmp_path):
    cfg = write_config(tmp_path, G=4, n_antennas=4)
    assert CliRunner().invoke(main, ["trial", "--config", cfg]).exit_code == 1


def test_invalid_config_exit_code(tmp_path):
    result = CliRunner().invoke(main, ["trial", "--config", write_config(tmp_path, D=2)])
    assert result.exit_code == 1
    assert "error" in result.output


def test_sweep_snr_writes_files(tmp_path):
    out, png = tmp_path / "r.csv", tmp_path / "r.png"
    args = ["sweep-snr", "--config", write_config(tmp_path), "--trials", "3", "--points", "10,20",
            "--out", str(out), "--plot", str(png), "--jobs", "2"]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 7
    assert png.stat().st_size > 0
    assert json.loads(open(manifest_path(out)).read())["spec"]["trials"] == 3


def test_sweep_doppler_json(tmp_path):
    out = tmp_path / "r.json"
    args = ["sweep-doppler", "--config", write_config(tmp_path), "--trials", "2", "--points", "0.05,0.25",
            "--out", str(out), "--format", "json"]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 0, result.output
    rows = json.loads(out.read_text())
    smooth = [r for r in rows if r["estimator"] == "proposed+smoothing"]
    assert smooth[1]["meanNmseDb"] != smooth[1]["meanNmseDb"]  # NaN above the Doppler limit


def test_sweep_antennas_proportional(tmp_path):
    out = tmp_path / "a.csv"
    cfg = write_config(tmp_path, N=128)
    args = ["sweep-antennas", "--config", cfg, "--trials", "2", "--points", "1,2", "--out", str(out)]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 0, result.output
    assert json.loads(open(manifest_path(out)).read())["spec"]["pilot_rule"] == "proportional"


def test_sweep_all_failed_exit_code(tmp_path):
    cfg = write_config(tmp_path, G=4, n_antennas=4)
    args = ["sweep-snr", "--config", cfg, "--trials", "2", "--points", "20", "--out", str(tmp_path / "x.csv")]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 1
