import os
import subprocess
import sys

import pytest

import coxpoly

CATALOG_DIR = os.path.join(os.path.dirname(coxpoly.__file__), "data", "catalog")


def run_cli(*args, env=None):
    e = dict(os.environ)
    if env:
        e.update(env)
    proc = subprocess.run(
        [sys.executable, "-m", "coxpoly.cli", *args],
        capture_output=True,
        text=True,
        env=e,
    )
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture()
def tri237(tmp_path):
    p = tmp_path / "t237.cox"
    p.write_text("dim 2\nnodes 3\nedge 1 2 m7\nedge 1 3 m3\n")
    return str(p)


@pytest.fixture()
def tri388(tmp_path):
    p = tmp_path / "t388.cox"
    p.write_text("dim 2\nnodes 3\nedge 1 2 m8\nedge 1 3 m8\nedge 2 3 m3\n")
    return str(p)


def test_bounds_reference_value():
    code, out, _ = run_cli("bounds", "--dim", "4", "--k", "3")
    assert code == 0
    assert "q0             5637" in out


def test_classify(tri237):
    code, out, _ = run_cli("classify", tri237)
    assert code == 0
    assert "lanner" in out


def test_check_accept_lanner_simplex():
    path = os.path.join(CATALOG_DIR, "simplex-4d-1.cox")
    code, out, _ = run_cli("check", "--dim", "4", path)
    assert code == 0
    assert out.startswith("ACCEPT")


def test_check_accept_prints_solved_weights(tmp_path):
    src = open(os.path.join(CATALOG_DIR, "prism-3d-a.cox")).read()
    import re

    blanked = re.sub(r"w=[0-9.]+", "w=?", src, count=1)
    p = tmp_path / "prism.cox"
    p.write_text(blanked)
    code, out, _ = run_cli("check", str(p))
    assert code == 0
    assert "dotted w=1.618" in out


def test_check_reject(tmp_path):
    p = tmp_path / "a3.cox"
    p.write_text("dim 2\nnodes 3\nedge 1 2 m3\nedge 2 3 m3\n")
    code, out, _ = run_cli("check", str(p))
    assert code == 1
    assert out.startswith("REJECT")


def test_dissect_none_exit_1(tri237):
    code, out, _ = run_cli("dissect", tri237)
    assert code == 1
    assert out.strip() == "NONE"


def test_dissect_witness(tri388):
    code, out, _ = run_cli("dissect", tri388)
    assert code == 0
    assert "angle-split pi/3 -> pi/6 + pi/6" in out


def test_volume(tri237):
    code, out, _ = run_cli("volume", tri237)
    assert code == 0
    assert out.startswith("volume 0.0747998")


def test_double(tmp_path):
    p = tmp_path / "t268.cox"
    p.write_text("dim 2\nnodes 3\nedge 1 2 m8\nedge 1 3 m6\n")
    # facet 2 carries angles pi/8 and pi/2 -> both double fine
    code, out, _ = run_cli("double", "--facet", "2", str(p))
    assert code == 0
    assert out.startswith("ACCEPT")
    # facet adjacent to an odd angle would reject; (2,6,8) has none, so
    # use (2,3,7) for the rejection path
    q = tmp_path / "t237.cox"
    q.write_text("dim 2\nnodes 3\nedge 1 2 m7\nedge 1 3 m3\n")
    code, out, _ = run_cli("double", "--facet", "1", str(q))
    assert code == 1
    assert out.startswith("REJECT")


def test_catalog_verify():
    code, out, _ = run_cli("catalog", "verify", CATALOG_DIR)
    assert code == 0
    assert "verified 13" in out


def test_filter(tmp_path, tri237, tri388):
    code, out, _ = run_cli("filter", "--sub", tri237, "--sup", tri388)
    assert code in (0, 1)
    assert out.strip() in ("possible",) or out.startswith("impossible")


def test_usage_error_exit_2():
    code, _, _ = run_cli("bogus-subcommand")
    assert code == 2
    code, _, _ = run_cli("classify", "/does/not/exist.cox")
    assert code == 2


def test_enumerate_writes_manifest(tmp_path):
    out_dir = tmp_path / "enum"
    code, out, err = run_cli(
        "enumerate",
        "--dim",
        "2",
        "--max-mult",
        "5",
        "--max-facets",
        "4",
        "--out",
        str(out_dir),
    )
    assert code == 0, err
    assert (out_dir / "manifest.txt").exists()


def test_coxeter_tol_env_is_honored(tri237):
    code, _, err = run_cli("classify", tri237, env={"COXETER_TOL": "not-a-number"})
    assert code != 0
    code, out, _ = run_cli("classify", tri237, env={"COXETER_TOL": "1e-10"})
    assert code == 0 and "lanner" in out
