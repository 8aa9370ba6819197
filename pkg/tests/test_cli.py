import json
import subprocess
import sys
from pathlib import Path

import pytest

from kinval.cli import main, report_body, run

SCENES = Path(__file__).resolve().parent.parent / "scenes"


def test_intrinsic_square(capsys):
    code, rep = run(["intrinsic", "--shape", "square"])
    assert code == 0
    vals = {r["name"]: r["lhs"] for r in rep["records"]}
    assert vals == {"V0": 1.0, "V1": 2.0, "V2": 1.0}
    assert rep["calibration"] == {"joint_arc_sign": 1, "interpolation_orientation": -1}


def test_euler_morse_example(capsys):
    code, rep = run(["euler", "--method", "morse", "--shape", "L", "--direction", "-1,-0.3"])
    assert code == 0 and rep["records"][0]["lhs"] == 1.0
    assert "euler (morse) = 1" in capsys.readouterr().out


def test_euler_degenerate_direction_is_a_validation_error():
    assert main(["euler", "--method", "morse", "--shape", "square", "--direction", "1,0"]) == 2


def test_unknown_shape_and_bad_grid():
    assert main(["intrinsic", "--shape", "dodecahedron"]) == 2
    assert main(["kinematic", "--grid", "4,4"]) == 2


def test_bad_scene_exit_code(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"shapes": {}}')
    assert main(["check", "pkf", "--scene", str(path)]) == 2


def test_check_pkf_passes_and_writes_reports(tmp_path):
    out = tmp_path / "pkf"
    code, rep = run(["check", "pkf", "--scene", str(SCENES / "squares.json"), "--grid", "32,32,32",
                     "--out", str(out)])
    assert code == 0
    rec = rep["records"][0]
    assert rec["rhs"] == pytest.approx(28.566370614359172) and rec["rel_err"] <= 1e-3
    data = json.loads((tmp_path / "pkf.json").read_text())
    assert data["scene_hash"] == rep["scene_hash"] and "wall_time" in data
    assert (tmp_path / "pkf.csv").read_text().splitlines()[0] == "name,lhs,rhs,abs_err,rel_err,tol,passed"


def test_check_failure_exit_code():
    assert main(["check", "pkf", "--grid", "8,8,8", "--tol", "1e-12"]) == 1


def test_quadrature_failure_exit_code(tmp_path):
    text = (SCENES / "band.json").read_text().replace('"c": 1.0}', '"c": 1.0, "profile": "indicator"}')
    path = tmp_path / "indicator.json"
    path.write_text(text)
    assert main(["check", "pointfn", "--scene", str(path), "--count", "2"]) == 3


def test_reports_are_deterministic():
    argv = ["check", "decomposition", "--scene", str(SCENES / "shapes.json"), "--count", "2"]
    _, a = run(argv)
    _, b = run(argv)
    assert report_body(a) == report_body(b)
    _, c = run(argv + ["--seed", "99"])
    assert report_body(a) != report_body(c)


@pytest.mark.parametrize("which", ["additivity", "decomposition"])
def test_cheap_checks_pass(which):
    assert main(["check", which, "--scene", str(SCENES / "shapes.json"), "--count", "3"]) == 0


def test_kinematic_modes_agree():
    scene = str(SCENES / "squares.json")
    vals = {}
    for mode in ("direct", "unfolded"):
        code, rep = run(["kinematic", "--mode", mode, "--scene", scene, "--grid", "16,16,16"])
        assert code == 0
        vals[mode] = rep["records"][0]["lhs"]
    assert vals["direct"] == pytest.approx(vals["unfolded"], rel=1e-12)


def test_dump_cycle(tmp_path):
    code, rep = run(["dump-cycle", "--shape", "holed", "--out", str(tmp_path / "cyc")])
    assert code == 0 and len(rep["cycle"]) == 16


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "kinval", "intrinsic", "--shape", "triangle"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "PASS" in res.stdout
