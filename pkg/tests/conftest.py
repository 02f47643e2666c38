import os
import time

for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import pytest  # noqa: E402

from smst.models import presets  # noqa: E402


class TimedResult:
    """Experiment result plus the wall time of the fresh computation."""

    def __init__(self, result, seconds):
        self.result = result
        self.seconds = seconds

    def __getattr__(self, name):
        return getattr(self.result, name)


def _run_preset(name, **overrides):
    from smst.experiments import REGISTRY

    preset = presets.get(name)
    config = dict(preset.config)
    config.update(overrides)
    runner = REGISTRY[preset.experiment][0]
    t0 = time.perf_counter()
    result = runner(**config)
    return TimedResult(result, time.perf_counter() - t0)


@pytest.fixture(scope="session")
def linear_benchmark_run():
    return _run_preset("default")


@pytest.fixture(scope="session")
def bracketing_run():
    return _run_preset("terman_test")


@pytest.fixture(scope="session")
def sweep_run():
    return _run_preset("terman_umfld")


@pytest.fixture(scope="session")
def section_scan_run():
    return _run_preset("terman")


@pytest.fixture(scope="session")
def return_map_run():
    return _run_preset("terman_retmap")


@pytest.fixture(scope="session")
def fhn_fast_run():
    return _run_preset("fhn_fast_wave")


@pytest.fixture(scope="session")
def fhn_slow_run():
    return _run_preset("fhn_slow_wave")


@pytest.fixture(scope="session")
def ri_canard_run():
    return _run_preset("ri_section52")


@pytest.fixture(scope="session")
def ml_frame_0002():
    """Slow-manifold frame for the bracketing parameters (k, eps) = (-0.22, 0.002)."""
    from smst.experiments.ml_bursting import compute_manifold_frame

    frame, report = compute_manifold_frame(-0.22, 0.002, (-0.20, -0.06), 200)
    return frame, report
