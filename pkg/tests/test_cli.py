import csv
import io
import json
import math
import subprocess
import sys

import pytest

from tracehardy import cli
from tracehardy.cli import (CSV_COLUMNS, EXIT_CERTIFICATE, EXIT_GAP,
                            EXIT_IDENTITY, EXIT_USAGE, SCHEMA_VERSION, main)


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_constants_example(capsys):
    code, out, _ = run(capsys, "constants", "--n", "3", "--s", "0", "--beta", "2",
                       "--kinds", "kato,H_cone")
    assert code == 0
    doc = json.loads(out)
    assert doc["schema_version"] == SCHEMA_VERSION and doc["command"] == "constants"
    vals = doc["rows"][0]["values"]
    assert abs(vals["kato"] - 2 / math.pi) < 1e-13
    assert abs(vals["H_cone"] - 2 / math.pi) < 1e-13
    assert "wall_time" not in doc["rows"][0]


def test_constants_endpoint_and_out_of_range(capsys):
    code, out, _ = run(capsys, "constants", "--n", "3", "--s", "0", "--beta", "4",
                       "--kinds", "H_cone")
    assert code == 0 and json.loads(out)["rows"][0]["values"]["H_cone"] == 0.0
    code, out, _ = run(capsys, "constants", "--n", "3", "--s", "0", "--beta", "1",
                       "--kinds", "H_cone")
    row = json.loads(out)["rows"][0]
    assert row["values"]["H_cone"] is None and not row["flags"]["H_cone_in_range"]


@pytest.mark.parametrize("argv", [
    ["constants", "--kinds", ","],
    ["constants", "--kinds", "nope"],
    ["constants", "--n", "1"],
    ["constants", "--s", "abc"],
    ["verify", "--geometry", "halfspace", "--beta", "0.5", "--corpus-size", "0"],
    ["verify", "--geometry", "halfspace", "--beta", "1.5"],
    ["verify", "--n", "2,3"],
    ["sharpness", "--geometry", "halfspace", "--beta", "0.5",
     "--eps-schedule", "1e-2,1e-1"],
    ["profile", "--points", "1"],
    ["sweep", "--n", "2", "--s", "0", "--beta", "2", "--task", "constants",
     "--kinds", "bad"]])
def test_usage_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_USAGE and out == "" and err.startswith("error:")


def test_argparse_rejects_unknown_choice(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--task", "nope"])
    assert exc.value.code == EXIT_USAGE


def test_negative_list_values(capsys):
    code, out, _ = run(capsys, "constants", "--n", "2", "--s=-0.5,0.5", "--beta", "2")
    assert code == 0
    assert [r["params"]["s"] for r in json.loads(out)["rows"]] == [-0.5, 0.5]


def test_identity_failure_exit(capsys, monkeypatch):
    from tracehardy import constants
    real = constants.constant_identities
    monkeypatch.setattr(cli, "constant_identities",
                        lambda grid: real(grid, tol=0.0, vanish_bound=0.0))
    code, _, _ = run(capsys, "constants", "--n", "3", "--s", "0", "--beta", "2")
    assert code == EXIT_IDENTITY


def test_verify_halfspace(capsys):
    code, out, _ = run(capsys, "verify", "--geometry", "halfspace", "--n", "2",
                       "--s", "0", "--beta", "0.5", "--corpus-size", "20")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["all_passed"]
    assert doc["summary"]["certificates"] == 40


def test_verify_quarter_plane(capsys, tmp_path):
    f = tmp_path / "qp.txt"
    f.write_text("# quarter plane\n0 1 0\n0 0 1\n")
    code, out, _ = run(capsys, "verify", "--n", "2", "--s", "0", "--beta", "2.4",
                       "--cone-normals", str(f), "--corpus-size", "3")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["certificates"] == 6
    tags = {r["values"]["certificate"] for r in doc["rows"]}
    assert tags == {"cone_trace_hardy", "improved_K5"}


def test_verify_cone_dimension_mismatch(capsys, tmp_path):
    f = tmp_path / "c.txt"
    f.write_text("0 1\n")
    code, _, err = run(capsys, "verify", "--n", "2", "--cone-normals", str(f))
    assert code == EXIT_USAGE and "dimension" in err
    code, _, err = run(capsys, "verify", "--n", "2", "--cone-normals",
                       str(tmp_path / "missing.txt"))
    assert code == EXIT_USAGE and "cannot read" in err


def test_verify_certificate_failure_exit(capsys, monkeypatch):
    from tracehardy.integrate import Certificate
    monkeypatch.setattr("tracehardy.integrate.halfspace_certificate",
                        lambda u, p, spec: Certificate(0.0, {"x": 1.0}, 0.0, p, "fake"))
    code, out, _ = run(capsys, "verify", "--geometry", "halfspace", "--beta", "0.5",
                       "--corpus-size", "1")
    assert code == EXIT_CERTIFICATE and not json.loads(out)["summary"]["all_passed"]


def test_sharpness_gap_exit(capsys):
    code, out, _ = run(capsys, "sharpness", "--geometry", "halfspace", "--n", "2",
                       "--s", "0", "--beta", "0.5")
    doc = json.loads(out)
    assert code == EXIT_GAP
    assert doc["summary"]["monotone"] and doc["summary"]["gap"] > 0.05
    assert [r["values"]["eps"] for r in doc["rows"]] == [0.1, 0.01, 0.001]
    code, _, _ = run(capsys, "sharpness", "--geometry", "halfspace", "--n", "2",
                     "--s", "0", "--beta", "0.5", "--tol", "10")
    assert code == 0


def test_sharpness_critical_family(capsys):
    code, out, _ = run(capsys, "sharpness", "--geometry", "halfspace", "--beta", "1",
                       "--delta", "0.5", "--eps-schedule", "1e-1,1e-2", "--tol", "100")
    assert code == 0 and json.loads(out)["summary"]["family"] == "half_critical"


def test_profile_command(capsys):
    code, out, _ = run(capsys, "profile", "--n", "2", "--s", "0", "--beta", "2",
                       "--points", "5")
    doc = json.loads(out)
    assert code == 0 and len(doc["rows"]) == 5
    assert doc["rows"][0]["values"]["omega"] == 1.0
    assert doc["rows"][0]["values"]["domega"] is None
    code, out, _ = run(capsys, "profile", "--geometry", "halfspace", "--beta", "0",
                       "--points", "3")
    doc = json.loads(out)
    assert doc["summary"]["case"] == "Degenerate"
    assert abs(doc["rows"][-1]["values"]["omega"]
               - (1 - 2 / math.pi * math.atan(10))) < 1e-12


def test_logsob_command(capsys):
    code, out, _ = run(capsys, "logsob", "--n", "2", "--s", "0", "--corpus-size", "3")
    doc = json.loads(out)
    assert code == 0 and doc["summary"]["all_passed"] and len(doc["rows"]) == 9


def _sweep(tmp_path, name, fmt="csv", extra=()):
    out = tmp_path / name
    code = main(["sweep", "--task", "constants", "--n", "2,3,4", "--s", "0",
                 "--beta", "2,2.5,3", "--format", fmt, "--out", str(out), *extra])
    return code, out


def test_sweep_csv_layout(tmp_path):
    code, out = _sweep(tmp_path, "a.csv")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out.read_text())))
    assert tuple(rows[0]) == CSV_COLUMNS
    body = rows[1:]
    assert len({r[0] for r in body}) == 9
    grid = [(r[1], r[3]) for r in body if r[4] == "H_cone"]
    assert grid == [(n, b) for n in ("2", "3", "4") for b in ("2.0", "2.5", "3.0")]
    plot = out.with_suffix(".plot.csv").read_text().splitlines()
    assert plot[0] == "curve,x,y" and len(plot) > 9


def test_sweep_json_rows(tmp_path):
    code, out = _sweep(tmp_path, "a.json", "json")
    doc = json.loads(out.read_text())
    assert code == 0 and len(doc["rows"]) == 9 and len(doc["summary"]["points"]) == 9


def test_sweep_is_byte_identical(tmp_path, monkeypatch):
    _, a = _sweep(tmp_path, "a.csv")
    _, b = _sweep(tmp_path, "b.csv")
    monkeypatch.setenv("THL_THREADS", "3")
    _, c = _sweep(tmp_path, "c.csv")
    _, d = _sweep(tmp_path, "d.json", "json")
    monkeypatch.delenv("THL_THREADS")
    _, e = _sweep(tmp_path, "e.json", "json")
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()
    assert d.read_bytes() == e.read_bytes()


def test_sweep_timing_flag(tmp_path):
    _, out = _sweep(tmp_path, "t.json", "json", ["--timing"])
    rows = json.loads(out.read_text())["rows"]
    assert all(isinstance(r["wall_time"], float) and r["wall_time"] >= 0 for r in rows)


def test_bad_thread_setting(capsys, monkeypatch):
    monkeypatch.setenv("THL_THREADS", "many")
    code, _, err = run(capsys, "sweep", "--n", "2,3", "--beta", "2")
    assert code == EXIT_USAGE and "THL_THREADS" in err


def test_unwritable_output(capsys, tmp_path):
    code, out, err = run(capsys, "constants", "--out", str(tmp_path / "no" / "x.json"))
    assert code == 1 and "cannot write" in err


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tracehardy", "constants", "--n", "3",
                          "--kinds", "kato"], capture_output=True, text=True)
    assert res.returncode == 0
    assert abs(json.loads(res.stdout)["rows"][0]["values"]["kato"] - 2 / math.pi) < 1e-13
