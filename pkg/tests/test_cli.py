import csv
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from ueda import __version__
from ueda.bundles import FlatBundleTuple, golden_tuple
from ueda.cli import InputError, RunConfig, main


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_json(path):
    return json.loads(path.read_text())


def test_version_and_module_entry():
    out = subprocess.run([sys.executable, "-m", "ueda", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout


def test_example_ok_and_negative(tmp_path):
    assert main(["example", "deformation_trivial", "--out", str(tmp_path)]) == 0
    assert main(["example", "resonant_demo", "--out", str(tmp_path)]) == 2
    body = read_json(tmp_path / "example_resonant_demo.json")
    assert body["report"]["type"] == "1"
    assert body["tool"] == "ueda" and body["version"] == __version__ and len(body["config_hash"]) == 64


def test_normalize_accepts_example_output(tmp_path):
    main(["example", "resonant_demo", "--out", str(tmp_path)])
    assert main(["normalize", "--input", str(tmp_path / "example_resonant_demo.json"), "--out", str(tmp_path)]) == 2
    assert read_json(tmp_path / "normalize.json")["negative"]


def test_normalize_degree_override(tmp_path):
    germ = {"r": 1, "N": 8, "generators": [{"T": {"angles": [0.3]}, "terms": [{"alpha": [2], "coeff": [[1, 0]]}]}]}
    path = write(tmp_path / "g.json", germ)
    assert main(["normalize", "--input", path, "--degree", "4", "--out", str(tmp_path)]) == 0
    assert read_json(tmp_path / "normalize.json")["report"]["type"] == "inf(N=4)"


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"r": 1,\n  "tuple": }')
    assert main(["classify", "--input", str(bad), "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert f"{bad}:2:" in err and "malformed JSON" in err


def test_bad_arguments_exit_1(tmp_path):
    assert main(["normalize", "--out", str(tmp_path)]) == 1
    assert main(["example", "nope", "--out", str(tmp_path)]) == 1
    assert main(["classify", "--threads", "0"]) == 1
    assert main(["frobnicate"]) == 1


def test_classify_torsion_negative(tmp_path):
    t = FlatBundleTuple.from_angles([[Fraction(1, 3), 0]])
    path = write(tmp_path / "t.json", t.to_json())
    assert main(["classify", "--input", path, "--out", str(tmp_path), "--scan-bound", "20"]) == 2
    assert read_json(tmp_path / "classify.json")["classification"]["verdict"] == "E0"


def test_classify_golden_r1_ok(tmp_path):
    path = write(tmp_path / "t.json", golden_tuple(1).to_json())
    assert main(["classify", "--input", path, "--out", str(tmp_path)]) == 0
    with open(tmp_path / "scan.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 200 and rows[0]["pass"] in ("true", "false")


def test_classify_deterministic_across_threads(tmp_path):
    path = write(tmp_path / "t.json", golden_tuple(2).to_json())
    a, b = tmp_path / "a", tmp_path / "b"
    main(["classify", "--input", path, "--out", str(a), "--threads", "1"])
    main(["classify", "--input", path, "--out", str(b), "--threads", "4"])
    for name in ("scan.csv", "classify.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_majorant_csv(tmp_path):
    path = write(tmp_path / "m.json", {"K": 1, "M": 1, "R": 1, "r": 1})
    assert main(["majorant", "--input", path, "--degree", "8", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "majorant.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["B_n"]) == 2.0 and float(rows[1]["B_n"]) == 14.0


def test_scan_majorant_and_normalize(tmp_path):
    assert main(["scan", "--out", str(tmp_path), "--degree", "6", "--threads", "2"]) == 0
    assert len(read_json(tmp_path / "scan.json")["rows"]) == 81
    desc = write(tmp_path / "s.json", {"kind": "normalize", "count": 3, "r": 2, "N": 6})
    assert main(["scan", "--input", desc, "--out", str(tmp_path)]) == 0


def test_config_hash_ignores_out_and_threads(tmp_path):
    a = RunConfig("scan", out=str(tmp_path / "x"), threads=1)
    b = RunConfig("scan", out=str(tmp_path / "y"), threads=8)
    c = RunConfig("scan", seed=1)
    assert a.config_hash() == b.config_hash() != c.config_hash()
    with pytest.raises(InputError):
        RunConfig("scan", scan_bound=0)
