"""Named parameter presets for the experiment harness.

Each preset bundles the full keyword configuration of one experiment, so
runs reference presets instead of loose numbers; dotted-path overrides on
top of a preset are applied by the CLI.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Preset:
    name: str
    experiment: str
    description: str
    figure: str
    config: dict = field(default_factory=dict)


_PRESETS: dict[str, Preset] = {}


def register(preset: Preset) -> Preset:
    _PRESETS[preset.name] = preset
    return preset


def get(name: str) -> Preset:
    try:
        return _PRESETS[name]
    except KeyError:
        raise KeyError(name) from None


def names() -> list[str]:
    return sorted(_PRESETS)


def all_presets() -> list[Preset]:
    return [_PRESETS[n] for n in names()]


register(
    Preset(
        name="default",
        experiment="linear-benchmark",
        description="Linear closed-form benchmark: exactness, contraction ratio, order",
        figure="(tables only)",
        config={
            "epsilon": 0.1,
            "mesh_sizes": [8, 16, 32, 64],
            "span": 1.0,
            "recurrence_intervals": 16,
            "recurrence_span": 0.8,
            "ratio_samples": 50,
        },
    )
)

register(
    Preset(
        name="terman_test",
        experiment="bracketing-test",
        description="Bracketing-pair accuracy ladder at the bursting-model saddle branch",
        figure="terman_test",
        config={
            "k": -0.22,
            "epsilon": 0.002,
            "v_range": [-0.20, -0.06],
            "mesh_points": 200,
            "base_point_v": -0.11,
            "distances": [1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9],
            "t_span": 0.05,
        },
    )
)

register(
    Preset(
        name="terman_umfld",
        experiment="manifold-sweep",
        description="Unstable-manifold sweep onto the section I = 0.075 with a stable fan",
        figure="terman_umfld, terman_uv",
        config={
            "k": -0.22,
            "epsilon": 0.006366,
            "v_range": [-0.213, -0.17],
            "mesh_points": 200,
            "n_points": 20,
            "displacement": 5e-5,
            "unstable_window": [0.0665, 0.0745],
            "stable_points": 4,
            "stable_displacement": 5e-8,
            "stable_window": [0.0709, 0.0717],
            "section_level": 0.075,
        },
    )
)

register(
    Preset(
        name="terman",
        experiment="section-scan",
        description="Signed unstable-vs-stable manifold gap on the section across epsilon",
        figure="terman_sect",
        config={
            "k": -0.22,
            "epsilons": [0.006362, 0.006366, 0.006367],
            "v_range": [-0.213, -0.17],
            "mesh_points": 200,
            "n_points": 20,
            "displacement": 5e-5,
            "unstable_window": [0.0665, 0.0745],
            "stable_scan_points": 48,
            "stable_displacement": 5e-8,
            "stable_window": [0.0709, 0.0717],
            "section_level": 0.075,
        },
    )
)

register(
    Preset(
        name="terman_retmap",
        experiment="return-map",
        description="Section return map of the segment on the stable-manifold line",
        figure="terman_retmap",
        config={
            "k": -0.22,
            "epsilon": 0.006366,
            "n_points": 300,
            "v_interval": [0.007, 0.01],
            "line_slope": 1.2107,
            "line_intercept": 0.35959,
            "section_level": 0.075,
            "arm_level": 0.08,
            "t_max": 5.0,
        },
    )
)

register(
    Preset(
        name="fhn_fast_wave",
        experiment="fhn-homoclinic",
        description="Fast traveling-pulse homoclinic orbit assembly",
        figure="fhn_fast_orbit",
        config={
            "p": 0.0,
            "s": 1.2463,
            "epsilon": 1e-3,
            "wave_type": "fast",
            "left_range": [-0.32, -6e-4],
            "right_range": [1.02, 0.72],
            "mesh_points": 260,
            "fan_displacement": 1e-8,
            "fan_points": 16,
            "refine_speed": True,
        },
    )
)

register(
    Preset(
        name="fhn_slow_wave",
        experiment="fhn-homoclinic",
        description="Slow traveling-pulse homoclinic orbit (spirals around the middle branch)",
        figure="fhn_slow_orbit",
        config={
            "p": 0.0,
            "s": 0.29491,
            "epsilon": 1e-3,
            "wave_type": "slow",
            "left_range": [-0.32, -6e-4],
            "right_range": [1.02, 0.72],
            "mesh_points": 260,
            "right_points": 100,
            "neighborhood": 1e-3,
            "pulses": 1,
            "t_max_unstable": 4.0,
        },
    )
)

register(
    Preset(
        name="ri_section52",
        experiment="ri-canard",
        description="Fold-initiated canard on the saddle sheet of the coupled-neuron model",
        figure="rifig",
        config={
            "base_point": [-0.16851015831, 0.85854544475, -0.41290838536, -0.062963871],
            "t_span": 0.17,
            "mesh_points": 200,
            "fan_points": 6,
            "fan_displacement": 1e-8,
            "epsilon": 1e-3,
        },
    )
)
