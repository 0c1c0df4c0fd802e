import json
import subprocess
import sys
from pathlib import Path

import pytest

from torus_yamabe.cli import RunConfig, main, run

FIXTURES = Path(__file__).parent.parent / "fixtures"


def fx(name):
    return str(FIXTURES / name)


def invoke(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr()
    return status, out.out, out.err


def test_certify_k3(capsys):
    status, out, _ = invoke(capsys, "certify", fx("k3_t2.json"))
    assert status == 0
    assert out.splitlines()[0] == "Y(M) = 0; index = 2; T-structure witness: cocycle valid"


def test_certify_withheld_exit_2(capsys):
    status, out, _ = invoke(capsys, "certify", fx("hp2_t4.json"))
    assert status == 2
    assert out.startswith("certificate withheld")
    status, out, _ = invoke(capsys, "certify", fx("broken_cocycle.json"))
    assert status == 2


def test_malformed_input_exit_1(capsys):
    status, out, err = invoke(capsys, "certify", fx("malformed.json"))
    assert status == 1 and out == ""
    assert "malformed.json:3:3" in err
    status, _, err = invoke(capsys, "index", fx("does_not_exist.json"))
    assert status == 1 and "does_not_exist.json" in err


def test_index_and_dump_classes(capsys):
    status, out, _ = invoke(capsys, "index", fx("k3_t2.json"), "--dump-classes")
    assert status == 0
    assert out.splitlines()[0] == "index = 2"
    assert "classes:" in out


def test_index_hypothesis_unmet(tmp_path, capsys):
    data = json.loads((FIXTURES / "k3_t2.json").read_text())
    data["base"]["spin"] = False
    p = tmp_path / "nonspin.json"
    p.write_text(json.dumps(data))
    status, _, err = invoke(capsys, "index", str(p))
    assert status == 2 and "spin" in err


def test_ahat(capsys):
    status, out, _ = invoke(capsys, "ahat", "--dim", "4", "--p1", "-48")
    assert status == 0 and out.strip() == "Â-genus = 2"
    status, out, _ = invoke(capsys, "ahat", "--dim", "8", "--number", "p1^2=4", "--number", "p2=7")
    assert out.strip() == "Â-genus = 0"
    status, out, _ = invoke(capsys, "ahat", "--degree", "2")
    assert "Â_2 = (7/5760)*p1^2 + (-1/1440)*p2" in out
    status, _, err = invoke(capsys, "ahat", "--dim", "8", "--p1", "3")
    assert status == 1


def test_ahat_degree_cap_env(monkeypatch, capsys):
    monkeypatch.setenv("YAMABE_CERT_DEGREE_CAP", "1")
    status, _, err = invoke(capsys, "ahat", "--dim", "8", "--number", "p1^2=4", "--number", "p2=7")
    assert status == 1 and "degree bound" in err
    monkeypatch.setenv("YAMABE_CERT_DEGREE_CAP", "x")
    status, _, err = invoke(capsys, "ahat", "--dim", "4", "--p1", "-48")
    assert status == 1 and "YAMABE_CERT_DEGREE_CAP" in err


def test_non_spin_warning_is_reported(capsys):
    status, out, _ = invoke(capsys, "ahat", "--dim", "4", "--p1", "-48", "--non-spin")
    assert status == 0 and "warning:" in out


def test_cocycle_check(capsys):
    assert invoke(capsys, "cocycle-check", fx("k3_t2_monodromy.json"))[0] == 0
    status, out, _ = invoke(capsys, "cocycle-check", fx("broken_cocycle.json"))
    assert status == 2 and "A" in out


def test_cover_stabilize_orient(capsys):
    status, out, _ = invoke(capsys, "cover", fx("k3_t2_monodromy.json"), "--n", "3", "--format", "structured")
    rec = json.loads(out)
    assert status == 0 and rec["lattice_scale"] == 3 and rec["covering_degree"] == 9
    status, out, _ = invoke(capsys, "stabilize", fx("k3_circle.json"), "--format", "structured")
    assert json.loads(out)["spec"]["fiber_rank"] == 2
    status, out, _ = invoke(capsys, "orient", fx("k3_klein.json"), "--format", "structured")
    rec = json.loads(out)
    assert rec["sheets_connected"] and rec["spec"]["base"]["pontryagin_numbers"]["p1"] == -96


def test_stabilized_output_certifies(tmp_path, capsys):
    _, out, _ = invoke(capsys, "stabilize", fx("k3_circle.json"), "--format", "structured")
    p = tmp_path / "stab.json"
    p.write_text(json.dumps(json.loads(out)["spec"]))
    status, out, _ = invoke(capsys, "certify", str(p))
    assert status == 0 and "index = 2" in out


def test_decay(capsys):
    status, out, _ = invoke(capsys, "decay", fx("metric_identity.json"), "--n", "1,2,4,8,16,32,64")
    lines = out.splitlines()
    assert status == 0 and lines[0] == "n,norm" and lines[1] == "1,1"
    assert lines[-1].startswith("slope = −2.00")
    status, _, err = invoke(capsys, "decay", fx("metric_identity.json"), "--n", "1,2,3")
    assert status == 1


def test_threshold(capsys):
    status, out, _ = invoke(capsys, "threshold", "--s-min", "1", "--dim", "6", "--norm", "1")
    assert status == 0 and out.strip() == "n* = 10"
    status, out, _ = invoke(capsys, "threshold", fx("metric_identity.json"))
    assert out.strip() == "n* = 10"
    status, _, _ = invoke(capsys, "threshold", "--s-min", "-1", "--dim", "6", "--norm", "1")
    assert status == 2
    status, _, err = invoke(capsys, "threshold", "--dim", "6")
    assert status == 1 and "--s-min" in err


def test_constants(capsys):
    status, out, _ = invoke(capsys, "constants", "sphere", "4", "--format", "structured")
    rec = json.loads(out)
    assert status == 0 and rec["value"] == pytest.approx(61.562, abs=1e-3)
    status, out, _ = invoke(capsys, "constants", "kahler", "3", "1", "--cp2")
    assert out.startswith("cp2(")
    assert invoke(capsys, "constants", "kahler", "3")[0] == 1
    assert invoke(capsys, "constants", "surface", "two")[0] == 1


def test_structured_round_trip(capsys):
    status, out, _ = invoke(capsys, "certify", fx("k3_t2.json"), "--format", "structured", "--dump-classes")
    recs = [json.loads(line) for line in out.splitlines()]
    assert [r["record"] for r in recs] == ["input", "lower", "upper", "classes", "verdict"]
    upper = recs[2]
    assert upper["index"] == 2 and upper["ahat_genus_base"] == "2/1"
    assert recs[-1]["verdict"] == "Y(M) = 0"
    # rationals survive the trip exactly
    from fractions import Fraction
    assert Fraction(upper["ahat_top_coefficients"]["p1"]) == Fraction(-1, 24)


def test_multiple_files_and_jobs(capsys):
    files = [fx("k3_t2.json"), fx("hp2_t4.json"), fx("k3_klein.json")]
    status1, out1, _ = invoke(capsys, "certify", *files, "--jobs", "1")
    status3, out3, _ = invoke(capsys, "certify", *files, "--jobs", "3")
    assert status1 == status3 == 2
    assert out1 == out3
    assert out1.count("== ") == 3


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("nope")
    with pytest.raises(ValueError):
        RunConfig("certify")
    res = run(RunConfig("ahat", flags={"dim": 4, "p": {1: -48}}))
    assert res.status == 0 and res.output == "Â-genus = 2"


@pytest.mark.parametrize("argv", [
    ["certify", "k3_t2.json", "--format", "structured", "--dump-classes"],
    ["decay", "metric_identity.json"],
    ["index", "k3_klein.json"],
])
def test_repeat_runs_are_byte_identical(argv):
    cmd = [sys.executable, "-m", "torus_yamabe"] + argv
    runs = [subprocess.run(cmd, cwd=FIXTURES, capture_output=True) for _ in range(2)]
    assert runs[0].returncode == 0
    assert runs[0].stdout == runs[1].stdout and runs[0].stdout
