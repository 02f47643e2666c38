import os
import shutil
import subprocess
import sys

for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import pytest  # noqa: E402


def _smst(args, out_dir):
    """Drive the primary package through its CLI, its external interface."""
    proc = subprocess.run(
        [sys.executable, "-m", "smst.cli", *args, "--out", str(out_dir)],
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"smst {' '.join(args)} failed:\n{proc.stdout}\n{proc.stderr}")
    return out_dir


@pytest.fixture(scope="session")
def runs_root(tmp_path_factory):
    pytest.importorskip("smst", reason="figplots tests drive the smst CLI")
    root = tmp_path_factory.mktemp("runs")

    _smst(
        ["bracketing-test", "--preset", "terman_test",
         "--set", "distances=[1e-4,1e-6]", "--set", "mesh_points=120"],
        root / "brack",
    )
    _smst(
        ["manifold-sweep", "--preset", "terman_umfld",
         "--set", "n_points=6", "--set", "stable_points=2", "--set", "mesh_points=120"],
        root / "sweep",
    )
    _smst(
        ["section-scan", "--preset", "terman",
         "--set", "epsilons=[0.006362,0.006366,0.006367]",
         "--set", "n_points=4", "--set", "stable_scan_points=10",
         "--set", "mesh_points=120"],
        root / "scan",
    )
    _smst(
        ["return-map", "--preset", "terman_retmap", "--set", "n_points=12"],
        root / "rmap",
    )
    _smst(
        ["fhn-homoclinic", "--preset", "fhn_fast_wave", "--set", "fan_points=10"],
        root / "fhnf",
    )
    _smst(
        ["fhn-homoclinic", "--preset", "fhn_slow_wave"],
        root / "fhns",
    )
    _smst(
        ["ri-canard", "--preset", "ri_section52", "--set", "fan_points=4"],
        root / "ri",
    )
    return root


@pytest.fixture()
def empty_run_dir(tmp_path):
    d = tmp_path / "empty"
    d.mkdir()
    return d


@pytest.fixture()
def broken_run_dir(tmp_path, runs_root):
    """A run directory whose summary survives but whose tables are gone."""
    src = runs_root / "rmap"
    dst = tmp_path / "broken"
    dst.mkdir()
    shutil.copy(src / "summary.json", dst / "summary.json")
    return dst
