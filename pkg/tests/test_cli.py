import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fsm_jacobi.cli import hatano_nelson_constants, main, parse_target, run_selftest
from fsm_jacobi.errors import ConfigError


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def pts(*zs):
    return {"kind": "points", "points": [[complex(z).real, complex(z).imag] for z in zs]}


@pytest.fixture
def hn_file(tmp_path, hn_sets):
    return write_json(tmp_path / "hn.json", hn_sets.to_json())


@pytest.fixture
def anderson_file(tmp_path):
    return write_json(tmp_path / "and.json", {"U": pts(1), "V": pts(0, 2), "W": pts(1)})


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify(capsys, hn_file):
    code, out, _ = run(capsys, "classify", "--sets", hn_file)
    rep = json.loads(out)
    assert code == 0
    assert (rep["case"], rep["plus_index"], rep["consistent"]) == ("B", -1, True)
    assert rep["certificates"]["dominance"]["inverse_bound"] == pytest.approx(2.8539, abs=1e-4)
    assert rep["certificates"]["delta"] is None


def test_bounds_hatano_nelson_hole(capsys, hn_file, tmp_path):
    cloud = tmp_path / "c.csv"
    code, out, _ = run(capsys, "bounds", "--sets", hn_file, "--cloud", str(cloud))
    rep = json.loads(out)
    assert code == 0 and rep["hole"]["nonempty"]
    assert rep["hole"]["radius"] == pytest.approx(2 * math.sinh(1))
    assert cloud.read_text().startswith("re,im\n")


def test_bounds_anderson_selfadjoint(capsys, anderson_file):
    _, out, _ = run(capsys, "bounds", "--sets", anderson_file)
    rep = json.loads(out)
    assert rep["selfadjoint"] == [[-2.0, 4.0]]
    assert rep["hole"] is None
    assert rep["upper_bound"]["radius"] == 2


def test_bounds_feinberg_zee(capsys, tmp_path):
    f = write_json(tmp_path / "fz.json", {"U": pts(1), "V": pts(0),
                                          "W": {"kind": "circle", "radius": 1, "samples": 33}})
    _, out, _ = run(capsys, "bounds", "--sets", f, "--angles", "33")
    rep = json.loads(out)
    assert rep["upper_bound"]["radius"] == 2 and rep["lower_bound"]["points"] == 33 * 33


def test_malformed_sets_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"U": [1,\n')
    code, _, err = run(capsys, "classify", "--sets", str(bad))
    assert code == 2 and "line 2" in err


def test_generate_plan_solve_pipeline(capsys, tmp_path, hn_file):
    fld = tmp_path / "f.jsonl"
    assert run(capsys, "generate", "--sets", hn_file, "--seed", "3",
               "--range=-300..300", "--out", str(fld))[0] == 0
    first = fld.read_bytes()
    run(capsys, "generate", "--sets", hn_file, "--seed", "3", "--range=-300..300",
        "--out", str(fld))
    assert fld.read_bytes() == first

    code, out, _ = run(capsys, "plan", "--field", str(fld), "--nmax", "3")
    plan = json.loads(out)
    assert code == 0 and [e["n"] for e in plan["entries"]] == [1, 2, 3]

    rhs = tmp_path / "rhs.jsonl"
    rhs.write_text('{"i": 0, "b": [1, 0]}\n')
    csv1, csv2 = tmp_path / "a.csv", tmp_path / "b.csv"
    code, out, _ = run(capsys, "solve", "--field", str(fld), "--rhs", str(rhs),
                       "--nmax", "3", "--csv", str(csv1))
    rep = json.loads(out)
    assert code == 0 and rep["case"] == "B" and rep["shift_k"] == -1
    run(capsys, "solve", "--field", str(fld), "--rhs", str(rhs), "--nmax", "3",
        "--csv", str(csv2))
    assert csv1.read_bytes() == csv2.read_bytes()
    assert csv1.read_text().splitlines()[0] == "n,l_n,r_n,size,inv_norm,residual,delta"

    code, _, err = run(capsys, "solve", "--field", str(fld), "--rhs", str(rhs),
                       "--nmax", "2", "--mode", "full")
    assert code == 0


def test_solve_refuses_boundary_triple(capsys, tmp_path):
    sets = write_json(tmp_path / "s.json", {"U": pts(1), "V": pts(2), "W": pts(1)})
    fld, rhs = tmp_path / "f.jsonl", tmp_path / "r.jsonl"
    run(capsys, "generate", "--sets", sets, "--range=-20..20", "--out", str(fld))
    rhs.write_text('{"i": 0, "b": [1, 0]}\n')
    code, _, err = run(capsys, "solve", "--field", str(fld), "--rhs", str(rhs), "--nmax", "2")
    assert code == 4 and "NotFredholm" in err


def test_semi_solve_case_b_exit_4(capsys, tmp_path, hn_file):
    fld, rhs = tmp_path / "f.jsonl", tmp_path / "r.jsonl"
    run(capsys, "generate", "--sets", hn_file, "--range", "1..100", "--semi", "--out", str(fld))
    rhs.write_text('{"i": 1, "b": [1, 0]}\n')
    code, _, err = run(capsys, "solve", "--field", str(fld), "--rhs", str(rhs), "--nmax", "2",
                       "--mode", "semi")
    assert code == 4 and "semi-infinite requires case (a)" in err


def test_horizon_exit_3(capsys, tmp_path, hn_file):
    fld, rhs = tmp_path / "f.jsonl", tmp_path / "r.jsonl"
    run(capsys, "generate", "--sets", hn_file, "--range=-50..50", "--out", str(fld))
    rhs.write_text('{"i": 0, "b": [1, 0]}\n')
    code, _, err = run(capsys, "solve", "--field", str(fld), "--rhs", str(rhs), "--nmax", "8",
                       "--horizon", "500")
    assert code == 3 and "HorizonExceeded" in err


def test_words_generator(capsys, tmp_path, anderson_file):
    fld = tmp_path / "w.jsonl"
    assert run(capsys, "generate", "--sets", anderson_file, "--generator", "words",
               "--range", "1..20", "--semi", "--out", str(fld))[0] == 0
    lines = fld.read_text().splitlines()
    assert json.loads(lines[0])["generator"]["kind"] == "words"
    assert len(lines) == 21


def test_spectrum_modes(capsys, tmp_path, anderson_file):
    fld = tmp_path / "f.jsonl"
    run(capsys, "generate", "--sets", anderson_file, "--range=-30..30", "--out", str(fld))
    out = tmp_path / "eig.csv"
    assert run(capsys, "spectrum", "--field", str(fld), "--n", "10", "--out", str(out))[0] == 0
    rows = np.loadtxt(out, delimiter=",", skiprows=1)
    assert rows.shape == (21, 2) and np.all(rows[:, 1] == 0)
    out = tmp_path / "sv.csv"
    run(capsys, "spectrum", "--field", str(fld), "--n", "10", "--mode", "sv", "--out", str(out))
    assert out.read_text().startswith("value\n")
    out = tmp_path / "ps.csv"
    code, _, _ = run(capsys, "spectrum", "--field", str(fld), "--n", "5", "--mode", "pseudo",
                     "--eps", "0.1,0.5", "--grid=-3,5,-1,1,9", "--out", str(out))
    assert code == 0
    header = json.loads(out.read_text().splitlines()[0][2:])
    assert header["nx"] == 9 and header["eps"] == [0.1, 0.5]
    assert (tmp_path / "ps.eps0.csv").exists() and (tmp_path / "ps.eps1.csv").exists()
    code, _, err = run(capsys, "spectrum", "--field", str(fld), "--n", "5", "--mode", "pseudo",
                       "--grid", "1,1,0,1,5", "--out", str(out))
    assert code == 2


def test_reproduce_constants(capsys):
    code, out, _ = run(capsys, "reproduce", "--constants-only")
    assert code == 0
    assert "c = 2cosh(g) = 3.0862" in out and "(s-a)^-1 = 2.8539" in out
    assert "case (b), plus-index -1" in out


def test_reproduce_beyond_certificate(capsys):
    code, out, _ = run(capsys, "reproduce", "--a", "2.5")
    assert code == 0 and "no solve" in out
    code, out, _ = run(capsys, "reproduce", "--a", "4")
    assert code == 4


def test_reproduce_bundle(capsys, tmp_path):
    bundle = tmp_path / "hn.json"
    code, out, _ = run(capsys, "reproduce", "--seed", "1", "--nmax", "3", "--out", str(bundle))
    rep = json.loads(bundle.read_text())
    assert code == 0 and rep["report"]["case"] == "B"
    assert len(rep["report"]["table"]) == 3


def test_constants_formula():
    k = hatano_nelson_constants(1.0, 2.0)
    assert k["c"] == pytest.approx(3.0862, abs=1e-4)
    assert k["s"] == pytest.approx(2.3504, abs=1e-4)
    assert k["toeplitz_floor"] == pytest.approx(0.9207, abs=1e-4)
    assert k["cap"] == pytest.approx(2.8539, abs=1e-4)


def test_parse_target():
    assert parse_target("1, 2+1j, 0.5") == (1, 2 + 1j, 0.5)
    with pytest.raises(ConfigError):
        parse_target("1,2")


def test_selftest_and_fault_injection(capsys):
    import io
    buf = io.StringIO()
    assert run_selftest(0, None, buf)
    assert "FAIL" not in buf.getvalue()
    buf = io.StringIO()
    assert not run_selftest(0, "thomas-pivot", buf)
    assert "FAIL thomas residual" in buf.getvalue()
    # the fault is removed afterwards
    assert run_selftest(0, None, io.StringIO())


def test_console_script_exit_code():
    out = subprocess.run([sys.executable, "-m", "fsm_jacobi.cli", "selftest"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stdout + out.stderr
