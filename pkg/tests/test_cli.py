import json
import subprocess
import sys

import pytest


def run_cli(args, env_extra=None, cwd=None):
    import os

    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "smst.cli", *args],
        capture_output=True, text=True, env=env, cwd=cwd,
    )


class TestListing:
    def test_list_experiments(self):
        out = run_cli(["list", "experiments"])
        assert out.returncode == 0
        for name in (
            "linear-benchmark", "bracketing-test", "manifold-sweep",
            "section-scan", "return-map", "fhn-homoclinic", "ri-canard",
        ):
            assert name in out.stdout

    def test_list_presets(self):
        out = run_cli(["list", "presets"])
        assert out.returncode == 0
        for name in ("terman_test", "terman_umfld", "fhn_fast_wave", "fhn_slow_wave", "ri_section52"):
            assert name in out.stdout


class TestRun:
    def test_linear_benchmark_artifacts(self, tmp_path):
        out = run_cli(["linear-benchmark", "--preset", "default", "--out", str(tmp_path / "lin")])
        assert out.returncode == 0, out.stdout + out.stderr
        for name in ("errors.csv", "orders.csv", "ratios.csv", "summary.json"):
            assert (tmp_path / "lin" / name).exists()
        summary = json.loads((tmp_path / "lin" / "summary.json").read_text())
        assert summary["experiment"] == "linear-benchmark"
        assert summary["inputs"]["preset"] == "default"
        header = (tmp_path / "lin" / "errors.csv").read_text().splitlines()[0]
        assert header == "intervals [count],max_error [state]"

    def test_round_trip_byte_identical(self, tmp_path):
        args = ["linear-benchmark", "--preset", "default", "--set", "epsilon=0.2"]
        out1 = run_cli(args + ["--out", str(tmp_path / "a")])
        assert out1.returncode == 0
        summary = json.loads((tmp_path / "a" / "summary.json").read_text())
        echoed = summary["inputs"]
        rerun = ["linear-benchmark", "--preset", echoed["preset"], *(
            ["--set"] * 0), *sum((["--set", ov] for ov in echoed["overrides"]), [])]
        out2 = run_cli(rerun + ["--out", str(tmp_path / "b")])
        assert out2.returncode == 0
        for name in ("errors.csv", "orders.csv", "ratios.csv", "rho_accuracy.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seventeen_significant_digits(self, tmp_path):
        out = run_cli(["linear-benchmark", "--preset", "default", "--out", str(tmp_path / "lin")])
        assert out.returncode == 0
        rows = (tmp_path / "lin" / "rho_accuracy.csv").read_text().splitlines()[1:]
        value = rows[10].split(",")[1]
        assert float(value) == float(format(float(value), ".17g"))
        assert any(len(cell.replace("-", "").replace(".", "").lstrip("0")) >= 16
                   for row in rows for cell in row.split(","))

    def test_unknown_preset_exit_2_with_candidates(self, tmp_path):
        out = run_cli(["linear-benchmark", "--preset", "nope", "--out", str(tmp_path / "x")])
        assert out.returncode == 2
        payload = json.loads(out.stdout)
        assert "candidates" in payload
        assert "default" in payload["candidates"]

    def test_unknown_override_path_rejected(self, tmp_path):
        out = run_cli([
            "linear-benchmark", "--preset", "default",
            "--set", "nonsense.path=3", "--out", str(tmp_path / "x"),
        ])
        assert out.returncode == 2
        assert "unknown override path" in json.loads(out.stdout)["error"]

    def test_override_type_checked(self, tmp_path):
        out = run_cli([
            "linear-benchmark", "--preset", "default",
            "--set", "epsilon=banana", "--out", str(tmp_path / "x"),
        ])
        assert out.returncode == 2
        assert "expected a number" in json.loads(out.stdout)["error"]

    def test_list_override_and_nested_option_groups(self, tmp_path):
        out = run_cli([
            "linear-benchmark", "--preset", "default",
            "--set", "mesh_sizes=[8,16]",
            "--set", "smst.newton_tolerance=1e-10",
            "--out", str(tmp_path / "lin"),
        ])
        assert out.returncode == 0, out.stdout
        summary = json.loads((tmp_path / "lin" / "summary.json").read_text())
        assert summary["inputs"]["config"]["mesh_sizes"] == [8, 16]
        assert summary["inputs"]["config"]["smst"]["newton_tolerance"] == 1e-10

    def test_env_output_root(self, tmp_path):
        out = run_cli(
            ["linear-benchmark", "--preset", "default"],
            env_extra={"SMST_OUT": str(tmp_path / "root")},
        )
        assert out.returncode == 0
        assert (tmp_path / "root" / "linear-benchmark" / "summary.json").exists()

    def test_wrong_experiment_for_preset(self, tmp_path):
        out = run_cli(["return-map", "--preset", "terman_test", "--out", str(tmp_path / "x")])
        assert out.returncode == 2

    def test_unknown_format(self, tmp_path):
        out = run_cli([
            "linear-benchmark", "--preset", "default", "--format", "parquet",
            "--out", str(tmp_path / "x"),
        ])
        assert out.returncode == 2
