"""Figure builders: each maps run-directory tables to plotted point sets.

Every builder returns the list of (label, x, y, style) layers it drew, so
tests can verify that rendering is a pure function of the CSV inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .io import RunDir, RunDirectoryError  # noqa: E402


@dataclass(frozen=True)
class FigureSpec:
    """One renderable figure: id, source run, projection, and color roles."""

    figure_id: str
    run: RunDir
    projection: tuple[str, ...]
    styling: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.projection) not in (2, 3):
            raise ValueError("projection must be a coordinate pair or triple")


def _layer(ax, label, x, y, **style):
    ax.plot(x, y, label=label, **style)
    return (label, np.asarray(x, dtype=float), np.asarray(y, dtype=float), style)


def _grouped(table, key_cols, x_col, y_col):
    keys = np.stack([table[c] for c in key_cols], axis=1)
    uniq = np.unique(keys, axis=0)
    for key in uniq:
        mask = np.all(keys == key, axis=1)
        yield tuple(key), table[x_col][mask], table[y_col][mask]


def build_terman_test(run: RunDir) -> FigureSpec:
    return FigureSpec(
        "terman_test", run, ("w", "v"),
        styling={0: ("tab:blue", "unstable +"), 1: ("tab:green", "unstable -"),
                 2: ("tab:red", "stable +"), 3: ("magenta", "stable -")},
    )


def render_terman_test(spec: FigureSpec, ax):
    run = spec.run
    layers = []
    manifold = run.table("manifold", spec.figure_id)
    traj = run.table("trajectories", spec.figure_id)
    layers.append(_layer(ax, "critical manifold", manifold["critical_w"], manifold["v"],
                         color="black", linestyle=":", linewidth=1))
    layers.append(_layer(ax, "slow manifold", manifold["w"], manifold["v"],
                         color="black", linewidth=2))
    for (family, distance), w, v in _grouped(traj, ("family", "distance"), "w", "v"):
        color, role = spec.styling[int(family)]
        layers.append(_layer(ax, f"{role} d={distance:.0e}", w, v,
                             color=color, linewidth=0.6))
    ax.set_xlabel("w")
    ax.set_ylabel("v")
    ax.set_title("bracketing ladder along the strong fibers")
    return layers


def build_terman_umfld(run: RunDir) -> FigureSpec:
    return FigureSpec(
        "terman_umfld", run, ("I", "v"),
        styling={0: ("tab:blue", "unstable +"), 1: ("tab:green", "unstable -"),
                 2: ("tab:red", "stable"), 3: ("tab:red", "stable")},
    )


def render_terman_umfld(spec: FigureSpec, ax):
    run = spec.run
    layers = []
    manifold = run.table("manifold", spec.figure_id)
    traj = run.table("trajectories", spec.figure_id)
    layers.append(_layer(ax, "critical manifold", manifold["critical_I"], manifold["v"],
                         color="black", linestyle=":", linewidth=1))
    layers.append(_layer(ax, "slow manifold", manifold["I"], manifold["v"],
                         color="black", linewidth=2.5))
    for (branch, launch), i_vals, v_vals in _grouped(
        traj, ("branch", "launch_time"), "I", "v"
    ):
        color, _ = spec.styling[int(branch)]
        layers.append(_layer(ax, f"branch {int(branch)} t0={launch:.4f}", i_vals, v_vals,
                             color=color, linewidth=0.5))
    ax.set_xlabel("I")
    ax.set_ylabel("v")
    ax.set_title("unstable-manifold sweep to the section")
    return layers


def build_terman_uv(run: RunDir) -> FigureSpec:
    return FigureSpec("terman_uv", run, ("initial_v", "final_v"))


def render_terman_uv(spec: FigureSpec, ax):
    umap = spec.run.table("umap", spec.figure_id)
    layers = [
        (
            "u-map",
            umap["initial_v"],
            umap["final_v"],
            {"marker": "o", "linestyle": "none", "color": "tab:blue", "markersize": 3},
        )
    ]
    ax.plot(umap["initial_v"], umap["final_v"], "o", color="tab:blue", markersize=3)
    ax.set_xlabel("initial v")
    ax.set_ylabel("final v")
    ax.set_title("initial vs final v on the unstable manifold")
    return layers


def _sect_panel(run: RunDir, figure_id: str, eps_value: float, ax):
    hits = run.table("hits", figure_id)
    mask_eps = np.isclose(hits["epsilon"], eps_value, rtol=0, atol=1e-12)
    wu = mask_eps & (hits["branch"] < 0.5)
    ws = mask_eps & (hits["branch"] > 0.5)
    layers = []
    v_u, w_u = hits["v"][wu], hits["w"][wu]
    half = v_u.size // 2
    ax.plot(v_u[:half], w_u[:half], "+", color="tab:blue", markersize=7, label="unstable +")
    layers.append(("wu-cross", v_u[:half], w_u[:half], {"marker": "+"}))
    ax.plot(v_u[half:], w_u[half:], "o", mfc="none", color="tab:green", markersize=6,
            label="unstable -")
    layers.append(("wu-circle", v_u[half:], w_u[half:], {"marker": "o"}))
    order = np.argsort(hits["v"][ws])
    v_s, w_s = hits["v"][ws][order], hits["w"][ws][order]
    ax.plot(v_s, w_s, "s", color="tab:red", markersize=6, label="stable")
    ax.plot(v_s, w_s, ":", color="tab:red", linewidth=1)
    layers.append(("ws-squares", v_s, w_s, {"marker": "s"}))
    layers.append(("ws-interpolant", v_s, w_s, {"linestyle": ":"}))
    ax.set_xlabel("v")
    ax.set_ylabel("w")
    ax.set_title(f"section hits, eps = {eps_value}")
    return layers


def _sect_builder(panel: int):
    def build(run: RunDir) -> FigureSpec:
        eps_vals = sorted(set(np.round(run.table("hits", "terman_sect")["epsilon"], 12)))
        if panel >= len(eps_vals):
            raise RunDirectoryError(
                f"run has only {len(eps_vals)} scan values; panel {panel} unavailable"
            )
        # panel a = the near-crossing middle value, b = below, c = above
        ordered = [eps_vals[len(eps_vals) // 2], eps_vals[0], eps_vals[-1]]
        return FigureSpec(
            f"terman_sect_{'abc'[panel]}", run, ("v", "w"),
            styling={"epsilon": float(ordered[panel])},
        )

    return build


def render_terman_sect(spec: FigureSpec, ax):
    return _sect_panel(spec.run, spec.figure_id, spec.styling["epsilon"], ax)


def build_terman_retmap(run: RunDir) -> FigureSpec:
    return FigureSpec("terman_retmap", run, ("v_initial", "v_final"))


def render_terman_retmap(spec: FigureSpec, ax):
    table = spec.run.table("map", spec.figure_id)
    ok = table["censored"] < 0.5
    layers = [
        ("return map", table["v_initial"][ok], table["v_final"][ok],
         {"marker": ".", "linestyle": "none"})
    ]
    ax.plot(table["v_initial"][ok], table["v_final"][ok], ".", color="tab:blue", markersize=3)
    ax.set_xlabel("initial v")
    ax.set_ylabel("final v")
    ax.set_title("section return map")
    return layers


def _fhn_orbit_figure(figure_id: str):
    def build(run: RunDir) -> FigureSpec:
        wave = run.summary.get("summary", {}).get("wave_type") or run.summary.get(
            "inputs", {}
        ).get("config", {}).get("wave_type", "fast")
        want = "fast" if figure_id == "fhn_fast_orbit" else "slow"
        if wave != want:
            raise RunDirectoryError(
                f"run is a {wave}-wave computation; {figure_id} needs {want}"
            )
        return FigureSpec(figure_id, run, ("x1", "y", "x2"))

    return build


def render_fhn_orbit(spec: FigureSpec, ax):
    run = spec.run
    layers = []
    orbit = run.table("orbit", spec.figure_id)
    for name in ("manifold_left", "manifold_right"):
        man = run.table(name, spec.figure_id)
        ax.plot(man["x1"], man["y"], man["x2"], color="tab:blue", linewidth=1)
        layers.append((name, man["x1"], man["y"], {"kind": "manifold"}))
    ax.plot(orbit["x1"], orbit["y"], orbit["x2"], color="tab:green", linewidth=1.2)
    layers.append(("orbit", orbit["x1"], orbit["y"], {"kind": "orbit"}))
    ax.plot([0.0], [0.0], [0.0], "o", color="tab:red", markersize=6)
    layers.append(("equilibrium", np.array([0.0]), np.array([0.0]), {"kind": "point"}))
    ax.set_xlabel("x1")
    ax.set_ylabel("y")
    ax.set_zlabel("x2")
    ax.set_title("homoclinic traveling pulse")
    return layers


def build_rifig(run: RunDir) -> FigureSpec:
    return FigureSpec("rifig", run, ("v1", "v2"))


def render_rifig(spec: FigureSpec, ax):
    run = spec.run
    layers = []
    gamma = run.table("gamma", spec.figure_id)
    fans = run.table("fan_trajectories", spec.figure_id)
    for (kind, knot, side), v1, v2 in _grouped(
        fans, ("kind", "knot", "side"), "v1", "v2"
    ):
        color = "tab:green" if kind == 0 else "tab:red"
        label = "unstable fan" if kind == 0 else "stable fan"
        layers.append(_layer(ax, f"{label} {int(knot)}/{int(side)}", v1, v2,
                             color=color, linewidth=0.6))
    layers.append(_layer(ax, "canard", gamma["v1"], gamma["v2"], color="black", linewidth=2))
    ax.set_xlabel("v1")
    ax.set_ylabel("v2")
    ax.set_title("saddle-sheet canard with strong fans")
    return layers


#: figure id -> (experiment name, builder, renderer, needs_3d)
FIGURES = {
    "terman_test": ("bracketing-test", build_terman_test, render_terman_test, False),
    "terman_umfld": ("manifold-sweep", build_terman_umfld, render_terman_umfld, False),
    "terman_uv": ("manifold-sweep", build_terman_uv, render_terman_uv, False),
    "terman_sect_a": ("section-scan", _sect_builder(0), render_terman_sect, False),
    "terman_sect_b": ("section-scan", _sect_builder(1), render_terman_sect, False),
    "terman_sect_c": ("section-scan", _sect_builder(2), render_terman_sect, False),
    "terman_retmap": ("return-map", build_terman_retmap, render_terman_retmap, False),
    "fhn_fast_orbit": ("fhn-homoclinic", _fhn_orbit_figure("fhn_fast_orbit"), render_fhn_orbit, True),
    "fhn_slow_orbit": ("fhn-homoclinic", _fhn_orbit_figure("fhn_slow_orbit"), render_fhn_orbit, True),
    "rifig": ("ri-canard", build_rifig, render_rifig, False),
}


def figures_for_run(run: RunDir) -> list[str]:
    out = []
    for figure_id, (experiment, builder, _, _) in FIGURES.items():
        if run.experiment != experiment:
            continue
        try:
            builder(run)
        except RunDirectoryError:
            continue
        out.append(figure_id)
    return out


def render(figure_id: str, run: RunDir, out_path, fmt: str = "png"):
    """Render one figure; returns (path, layers) with the plotted point sets."""
    if figure_id not in FIGURES:
        raise KeyError(figure_id)
    experiment, builder, renderer, needs_3d = FIGURES[figure_id]
    if run.experiment != experiment:
        raise RunDirectoryError(
            f"{figure_id} renders {experiment!r} runs, got {run.experiment!r}"
        )
    spec = builder(run)
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(111, projection="3d" if needs_3d else None)
    try:
        layers = renderer(spec, ax)
        fig.savefig(out_path, format=fmt, dpi=130)
    finally:
        plt.close(fig)
    return out_path, layers
