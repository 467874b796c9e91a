import csv
import json
import subprocess
import sys

import pytest

from cmrfba.cli import main, parse_levels
from cmrfba.io import bundled_core_model, serialize_model

from conftest import DATA, PLANTED_LEVELS

LEVELS = ",".join(str(g) for g in PLANTED_LEVELS)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate_bundled(capsys):
    assert main(["validate"]) == 0
    assert "ok (47 metabolites, 54 reactions)" in capsys.readouterr().out


def test_validate_bad_bounds(tmp_path, capsys):
    text = serialize_model(bundled_core_model()).replace("bounds: [0, 10]", "bounds: [20, 10]", 1)
    path = tmp_path / "bad.yaml"
    path.write_text(text)
    assert main(["validate", "--model", str(path)]) == 1
    assert "EX_glc" in capsys.readouterr().err


def test_validate_missing_file(tmp_path):
    assert main(["validate", "--model", str(tmp_path / "absent.yaml")]) == 2


def test_validate_syntax_error(tmp_path, capsys):
    path = tmp_path / "broken.yaml"
    path.write_text("format_version: 1\nmetabolites: [\n")
    assert main(["validate", "--model", str(path)]) == 1
    assert "line" in capsys.readouterr().err


def test_fba_writes_fluxes(tmp_path, capsys):
    out = tmp_path / "flux.csv"
    assert main(["fba", "--objective", "biomass", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 54
    assert "objective_value=" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "flux.csv.manifest.json").read_text())
    assert manifest["command"] == "fba" and len(manifest["model"]["sha256"]) == 64


def test_sweep_three_levels(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--objective", "biomass", "--levels", "1,2,5", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert [float(r["glucose_level"]) for r in rows] == [1.0, 2.0, 5.0]
    for r in rows:
        assert float(r["o2_norm"]) == pytest.approx(float(r["o2_uptake"]) / float(r["glucose_level"]))
    assert "switched=" in capsys.readouterr().out
    assert (tmp_path / "sweep.csv.manifest.json").exists()


def test_sweep_misspelled_reaction(tmp_path, capsys):
    code = main(["sweep", "--objective", "BIOMAS=1", "--levels", "1,2", "--out", str(tmp_path / "s.csv")])
    assert code == 1
    assert "BIOMAS" in capsys.readouterr().err


def test_sweep_unknown_preset(tmp_path):
    assert main(["sweep", "--objective", "growth", "--out", str(tmp_path / "s.csv")]) == 1


def test_planted_sweep_switches(tmp_path, capsys):
    args = ["sweep", "--model", str(DATA / "planted.yaml"), "--objective", "EX_lac=1,BIO=0.1",
            "--levels", LEVELS, "--out", str(tmp_path / "s.csv")]
    assert main(args) == 0
    assert "switched=true" in capsys.readouterr().out


def test_parse_levels():
    assert parse_levels("1,2,5") == [1.0, 2.0, 5.0]
    assert parse_levels("log:1:100:3") == pytest.approx([1.0, 10.0, 100.0])


def ensemble(out, *extra, model=DATA / "planted.yaml"):
    return main(["ensemble", "--model", str(model), "--levels", LEVELS, "--workers", "1",
                 "--out", str(out), *extra])


def test_ensemble_zero_samples(tmp_path):
    assert ensemble(tmp_path, "--samples", "0") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["total"] == 0 and summary["success_count"] == 0 and summary["frequencies_empty"]
    assert read_csv(tmp_path / "successes.csv") == []
    assert read_csv(tmp_path / "frequencies.csv") == []


def test_ensemble_deterministic_files(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert ensemble(out, "--seed", "3", "--samples", "300", "--max-support", "3") == 0
    for name in ("summary.json", "successes.csv", "frequencies.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest.json").read_text())
    mb = json.loads((b / "manifest.json").read_text())
    for m in (ma, mb):
        m.pop("duration_seconds")
        m.pop("argv")
    assert ma == mb


def test_ensemble_planted_config_file(tmp_path):
    config = tmp_path / "cfg.yaml"
    config.write_text(f"seed: 42\nsamples: 2000\nmax_support: 3\nglucose_levels: [{LEVELS}]\n")
    out = tmp_path / "run"
    assert main(["ensemble", "--model", str(DATA / "planted.yaml"), "--config", str(config),
                 "--workers", "1", "--out", str(out)]) == 0
    freqs = read_csv(out / "frequencies.csv")
    assert freqs
    assert {r["reaction_id"] for r in freqs[:2]} == {"EX_lac", "BIO"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 42 and manifest["config"]["samples"] == 2000


@pytest.mark.parametrize("extra", [["--samples", "-1"], ["--max-support", "99"]])
def test_ensemble_invalid_config(tmp_path, extra):
    assert ensemble(tmp_path / "x", *extra) == 1
    assert not (tmp_path / "x").exists()


def test_ensemble_unknown_config_key(tmp_path):
    config = tmp_path / "cfg.yaml"
    config.write_text("seeds: 1\n")
    assert ensemble(tmp_path / "x", "--config", str(config)) == 1


def test_freq_rederives_table(tmp_path, capsys):
    assert ensemble(tmp_path, "--seed", "1", "--samples", "1500", "--max-support", "3") == 0
    assert read_csv(tmp_path / "frequencies.csv")
    out = tmp_path / "again.csv"
    assert main(["freq", "--successes", str(tmp_path / "successes.csv"), "--out", str(out)]) == 0
    assert out.read_bytes() == (tmp_path / "frequencies.csv").read_bytes()


def test_freq_missing_file(tmp_path):
    assert main(["freq", "--successes", str(tmp_path / "none.csv")]) == 2


def test_module_entry_point():
    result = subprocess.run([sys.executable, "-m", "cmrfba", "validate"], capture_output=True, text=True)
    assert result.returncode == 0
    assert "ok" in result.stdout
