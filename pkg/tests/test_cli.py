from __future__ import annotations

import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema
import pytest

from sharpwaves import cli, io
from sharpwaves.errors import NumericalError

MODELS = Path(__file__).parent / "fixtures" / "models"
REF = MODELS / "reference.toml"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def validate(kind, text):
    doc = json.loads(text)
    jsonschema.validate(doc, io.load_schema(kind))
    assert doc["schema_version"] == io.SCHEMA_VERSION
    assert doc["kind"] == kind
    return doc


def header(path):
    with open(path, newline="") as fh:
        return next(csv.reader(fh))


@pytest.fixture
def bad_death(tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text(REF.read_text().replace("death.delta = 0.5", "death.delta = -0.5"))
    return p


# exit codes

def test_derive_happy_path(capsys):
    code, out, _ = run(capsys, "derive", "--model", REF)
    assert code == 0
    doc = validate("derive", out)
    assert abs(doc["constants"]["kappa"] - 4.15888308336) < 1e-9


def test_missing_model_file_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "derive", "--model", tmp_path / "absent.toml")
    assert code == cli.EXIT_USAGE
    assert "usage:" in err and "not found" in err


def test_missing_required_option_is_usage_error(capsys):
    code, _, err = run(capsys, "derive")
    assert code == cli.EXIT_USAGE
    assert "usage:" in err


def test_unknown_subcommand_is_usage_error(capsys):
    code, _, _ = run(capsys, "frobnicate", "--model", REF)
    assert code == cli.EXIT_USAGE


def test_non_increasing_death_names_clause(capsys, bad_death):
    code, out, err = run(capsys, "derive", "--model", bad_death)
    assert code == cli.EXIT_MODEL
    assert out == ""
    assert "death-increasing" in err


def test_unknown_key_is_model_error(capsys, tmp_path):
    p = tmp_path / "unk.toml"
    p.write_text(REF.read_text() + "colour = 1\n")
    code, _, err = run(capsys, "derive", "--model", p)
    assert code == cli.EXIT_MODEL
    assert "colour" in err


def test_atlas_rejects_unsorted_delays(capsys):
    code, _, err = run(capsys, "atlas", "--model", REF, "--r", "2,1")
    assert code == cli.EXIT_USAGE
    assert "increasing" in err


def test_numerical_failure_emits_json_diagnostic(capsys, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("step size underflow at t=1")

    monkeypatch.setattr(cli, "integrate", boom)
    code, out, err = run(capsys, "profile", "--model", REF, "--speed", "1.5")
    assert code == cli.EXIT_NUMERICAL
    assert out == ""
    diag = json.loads(err)
    assert diag["error"] == "numerical"
    assert diag["command"] == "profile"
    assert "underflow" in diag["message"]


def test_console_script_exit_code(bad_death):
    exe = shutil.which("sharpwaves")
    argv = [exe] if exe else [sys.executable, "-m", "sharpwaves.cli"]
    res = subprocess.run(argv + ["derive", "--model", str(bad_death)], capture_output=True, text=True)
    assert res.returncode == cli.EXIT_MODEL
    assert "death-increasing" in res.stderr


# schemas, headers and determinism per subcommand

def _twice(capsys, tmp_path, argv_of):
    """Run a command twice in separate directories; return both (stdout, files) pairs."""
    runs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        code, out, err = run(capsys, *argv_of(d))
        assert code == 0, err
        files = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
        runs.append((out, files))
    return runs


CASES = {
    "derive": (lambda d: ["derive", "--model", REF], {}),
    "speeds": (lambda d: ["speeds", "--model", REF, "--roots-csv", d / "roots.csv", "--roots-c", "1,2,4"],
               {"roots.csv": io.ROOTS_HEADER}),
    "profile": (lambda d: ["profile", "--model", REF, "--speed", "1.52", "--samples", "50",
                           "--csv", d / "p.csv", "--svg", d / "p.svg"],
                {"p.csv": io.PROFILE_HEADER}),
    "shoot": (lambda d: ["shoot", "--model", REF, "--tol", "1e-3", "--probes-csv", d / "probes.csv",
                         "--csv", d / "p.csv", "--samples", "50"],
              {"probes.csv": io.PROBES_HEADER, "p.csv": io.PROFILE_HEADER}),
    "simulate": (lambda d: ["simulate", "--model", REF, "--T", "2", "--x-max", "20", "--cells", "200",
                            "--probe", "5", "--csv", d / "front.csv", "--snapshots-csv", d / "snap.csv",
                            "--snapshot-times", "0,1,2"],
                 {"front.csv": io.FRONT_HEADER, "snap.csv": io.SNAPSHOT_HEADER}),
    "atlas": (lambda d: ["atlas", "--model", REF, "--r", "0.5,1", "--tol", "1e-3",
                         "--csv", d / "atlas.csv", "--svg", d / "atlas.svg"],
              {"atlas.csv": io.ATLAS_HEADER}),
}


@pytest.mark.parametrize("kind", sorted(CASES))
def test_output_schema_headers_and_determinism(capsys, tmp_path, kind):
    argv_of, headers = CASES[kind]
    (out1, files1), (out2, files2) = _twice(capsys, tmp_path, argv_of)
    validate(kind, out1)
    assert out1 == out2
    assert files1 == files2
    for name, hdr in headers.items():
        assert header(tmp_path / "run0" / name) == hdr


def test_json_option_writes_file(capsys, tmp_path):
    target = tmp_path / "d.json"
    code, out, _ = run(capsys, "derive", "--model", REF, "--json", target)
    assert code == 0 and out == ""
    validate("derive", target.read_text())


def test_delay_override(capsys):
    code, out, _ = run(capsys, "speeds", "--model", REF, "--delay", "100")
    assert code == 0
    doc = validate("speeds", out)
    assert 0.95 < 100 * doc["c_kappa"] / doc["mu_kappa"] < 1.05


def test_atlas_infinity_encoded_as_text(capsys, tmp_path):
    code, _, _ = run(capsys, "atlas", "--model", REF, "--r", "1", "--tol", "1e-3", "--csv", tmp_path / "a.csv")
    assert code == 0
    with open(tmp_path / "a.csv", newline="") as fh:
        row = list(csv.DictReader(fh))[0]
    assert row["c_star"] == "inf"
