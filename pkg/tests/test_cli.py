import json

import jsonschema
import pytest

from percop import schemas
from percop.cli import main

ZERO = {"omega_plus": [0], "omega_minus": [0], "omega_zero": [0],
        "omega_zero_tilde": [0], "p": 0.3}
DELOC = {"omega_plus": [0, 0], "omega_minus": [1, -1], "omega_zero": [-2],
         "omega_zero_tilde": [0], "p": 0.3, "n_max": 16384}
LOC = {"omega_plus": [0.2], "omega_minus": [0.1], "omega_zero": [0.5],
       "omega_zero_tilde": [0], "p": 0.3, "n_max": 16384}


@pytest.fixture
def spec_file(tmp_path):
    def write(spec, name="spec.json"):
        path = tmp_path / name
        path.write_text(json.dumps(spec))
        jsonschema.validate(spec, schemas.PHASE_SPEC if "omega" in spec
                            else schemas.CHARGE_SPEC)
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_free_energy_zero_charges(capsys, spec_file):
    code, out = run(capsys, "free-energy", "--input", spec_file(ZERO))
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schemas.FREE_ENERGY)
    assert doc["regime"] == "critical" and doc["F"] == 0.0
    assert doc["delta"] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("cmd,extra", [
    ("classify", []), ("limits", []), ("asymptotics", ["--N", "2000"]),
    ("sample", ["--N", "50", "--samples", "20"]),
    ("sample", ["--infinite", "--horizon", "100", "--samples", "20"]),
])
@pytest.mark.parametrize("spec", [DELOC, LOC], ids=["deloc", "loc"])
def test_outputs_validate(capsys, spec_file, cmd, extra, spec):
    code, out = run(capsys, cmd, "--input", spec_file(spec), *extra)
    assert code == 0
    jsonschema.validate(json.loads(out), schemas.BY_COMMAND[cmd])


def test_partition_csv(capsys, spec_file):
    code, out = run(capsys, "partition", "--input", spec_file(LOC), "--N", "5")
    lines = out.splitlines()
    assert lines[0] == "N,logZc,logZf,logZplus,logZminus"
    assert len(lines) == 7


def test_byte_identical_outputs(capsys, spec_file, tmp_path):
    spec = spec_file(DELOC)
    blobs = []
    for k in range(2):
        prefix = str(tmp_path / f"run{k}")
        assert main(["sample", "--input", spec, "--N", "60", "--samples", "50",
                     "--seed", "11", "--output", prefix]) == 0
        blobs.append((open(prefix + ".json", "rb").read(),
                      open(prefix + ".csv", "rb").read()))
    assert blobs[0] == blobs[1]
    capsys.readouterr()


def test_phase_diagram_bound(spec_file, tmp_path):
    spec = spec_file({"omega": [1, -1], "p": 0.3, "n_max": 4096}, "ph.json")
    prefix = str(tmp_path / "ph")
    assert main(["phase-diagram", "--input", spec, "--beta-grid", "0:1:0.5",
                 "--h-grid", "-0.2:0.2:0.1", "--output", prefix]) == 0
    import csv
    rows = list(csv.DictReader(open(prefix + ".csv")))
    assert len(rows) == 15
    for r in rows:
        assert float(r["f_raw"]) >= abs(float(r["h"])) - 1e-9


def test_verify_passes(capsys):
    code, out = run(capsys, "verify", "--instances", "4")
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, schemas.VERIFY)
    assert doc["passed"]


@pytest.mark.parametrize("argv", [
    ["free-energy", "--input", "/nonexistent.json"],
    ["bogus"],
    [],
    ["partition", "--input", "SPEC"],
    ["partition", "--input", "SPEC", "--N", "0"],
])
def test_errors_are_json(capsys, spec_file, argv):
    argv = [spec_file(LOC) if a == "SPEC" else a for a in argv]
    code, out = run(capsys, *argv)
    assert code == 2
    jsonschema.validate(json.loads(out), schemas.ERROR)


def test_invalid_spec(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"omega_plus": [0.1], "p": 0.7}))
    code, out = run(capsys, "classify", "--input", str(path))
    assert code == 2 and json.loads(out)["error"] == "invalid_spec"
    path.write_text(json.dumps(ZERO | {"p": 0.7}))
    code, out = run(capsys, "classify", "--input", str(path))
    assert code == 2 and json.loads(out)["error"] == "invalid_spec"
