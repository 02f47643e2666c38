"""Scripted reproductions of the benchmark computations, as parameterized
experiments emitting labeled tables."""

from . import fhn_homoclinic, linear_benchmark, ml_bursting, ri_canard
from .result import ExperimentResult, Table

#: Experiment name -> callable(config) -> ExperimentResult, with one-line help.
REGISTRY = {
    "linear-benchmark": (
        linear_benchmark.run,
        "Closed-form benchmark on the linear model (errors, orders, ratios)",
    ),
    "bracketing-test": (
        ml_bursting.bracketing_test,
        "Displaced-pair accuracy ladder along the strong fibers",
    ),
    "manifold-sweep": (
        ml_bursting.manifold_sweep,
        "Unstable-manifold sweep onto a cross-section plus stable fan",
    ),
    "section-scan": (
        ml_bursting.section_scan,
        "Signed gap between manifold traces on the section across epsilon",
    ),
    "return-map": (
        ml_bursting.return_map,
        "Section-to-section return map with spike counts and jump detection",
    ),
    "fhn-homoclinic": (
        fhn_homoclinic.run,
        "Homoclinic traveling-pulse assembly (fast or slow wave)",
    ),
    "ri-canard": (
        ri_canard.run,
        "Saddle-sheet canard with strong stable/unstable fans",
    ),
}

__all__ = ["REGISTRY", "ExperimentResult", "Table"]
