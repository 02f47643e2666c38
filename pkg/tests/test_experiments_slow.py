"""Behavioral checks of the heavyweight experiment reproductions; the
session fixtures compute each run once and the acceptance suite reuses them."""

import numpy as np
import pytest

from smst.ivp import IvpOptions, displaced_pair
from smst.experiments.common import run_fan_trajectory


class TestBracketing:
    def test_all_pairs_jump_opposite(self, bracketing_run):
        assert bracketing_run.summary["all_pairs_opposite"]
        assert bracketing_run.summary["largest_failed_distance"] == 0.0

    def test_base_point_near_reference(self, bracketing_run):
        assert abs(bracketing_run.summary["base_v"] + 0.11) < 2e-3

    def test_departure_times_monotone_with_equal_increments(self, bracketing_run):
        tab = bracketing_run.tables["ladder"]
        for family in (0, 1):
            mask = tab.column("family") == family
            d = tab.column("distance")[mask]
            order = np.argsort(-d)  # decreasing distance = increasing -log d
            for side in ("time_plus", "time_minus"):
                times = tab.column(side)[mask][order]
                assert np.all(np.diff(times) > 0)
                increments = np.diff(times)
                # consistent with exponential separation: near-equal increments
                assert increments.max() / increments.min() < 2.0

    def test_zero_displacement_control_stays_on_manifold(self, ml_frame_0002):
        frame, _ = ml_frame_0002
        idx = int(np.argmin(np.abs(frame.segment.states[:, 0] + 0.11)))
        base = frame.segment.states[idx]
        _, u_dir = frame.directions_at(base)
        z0, _ = displaced_pair(base, u_dir, 0.0)
        run = run_fan_trajectory(
            frame, z0, 0.05, IvpOptions(rel_tol=1e-12, abs_tol=1e-14), 1e-2
        )
        # the undisplaced control survives longer than any displaced rung
        assert (not run.departed) or run.departure_time > 0.035


class TestManifoldSweep:
    def test_funnel_matches_reference_values(self, sweep_run):
        s = sweep_run.summary
        assert s["unstable_hits"] >= 36
        assert abs(s["funnel_v"] - 0.0072701057) < 1e-3
        assert abs(s["funnel_w"] - 0.3683819196) < 1e-3

    def test_contracted_family_is_large_and_tight(self, sweep_run):
        s = sweep_run.summary
        assert s["cluster_count"] >= 0.5 * s["unstable_hits"]
        assert s["cluster_radius"] < 5e-3

    def test_stable_fan_reaches_section(self, sweep_run):
        assert sweep_run.summary["stable_hits"] >= 2

    def test_hits_on_section(self, sweep_run):
        hits = sweep_run.tables["hits"]
        reached = hits.column("reached") > 0.5
        assert np.all(np.abs(hits.column("hit_I")[reached] - 0.075) < 1e-10)


class TestSectionScan:
    def test_gap_sweeps_upward_with_epsilon(self, section_scan_run):
        # The unstable-manifold trace sweeps across the stable one as the
        # time-scale ratio grows; our crossing sits at ~0.0063671, between
        # the two largest sampled values.
        s = section_scan_run.summary
        meds = [s[f"median_gap_{e}"] for e in ("0.006362", "0.006366", "0.006367")]
        assert meds[0] < 0
        assert meds[0] < meds[1] < meds[2]
        assert abs(meds[2]) < 3e-6  # at the crossing, resolution-limited

    def test_negative_fraction_monotone(self, section_scan_run):
        s = section_scan_run.summary
        fracs = [s[f"negative_fraction_{e}"] for e in ("0.006362", "0.006366", "0.006367")]
        assert fracs[0] >= fracs[1] >= fracs[2]

    def test_gap_rows_present_for_all_epsilons(self, section_scan_run):
        gaps = section_scan_run.tables["gaps"]
        eps_vals = set(np.round(gaps.column("epsilon"), 9))
        assert eps_vals == {0.006362, 0.006366, 0.006367}


class TestReturnMap:
    def test_two_jumps_with_spike_structure(self, return_map_run):
        s = return_map_run.summary
        assert s["jump_count"] == 2
        assert s["inner_spikes"] == 3
        assert s["outer_spikes"] == 2

    def test_minimum_return(self, return_map_run):
        assert 0.0070 <= return_map_run.summary["min_return_v"] <= 0.0076

    def test_no_censoring(self, return_map_run):
        assert return_map_run.summary["censored"] == 0

    def test_single_point_map(self):
        from smst.experiments.ml_bursting import return_map

        res = return_map(n_points=1, v_interval=(0.008, 0.008))
        assert res.tables["map"].n_rows == 1


class TestFhnHomoclinic:
    def test_fast_wave_assembly(self, fhn_fast_run):
        s = fhn_fast_run.summary
        assert s["max_junction_gap"] <= 1e-3
        assert s["start_distance_to_q"] <= 1e-3
        assert s["end_distance_to_q"] <= 1e-3
        assert s["slow_leg_max_critical_distance"] <= 10 * 1e-3

    def test_fast_wave_speed_refinement(self, fhn_fast_run):
        assert abs(fhn_fast_run.summary["s_refined"] - 1.2463) < 5e-4
        assert fhn_fast_run.summary["s_refined"] != 1.2463

    def test_slow_wave_avoids_right_branch(self, fhn_slow_run):
        s = fhn_slow_run.summary
        assert s["orbit_min_distance_right"] > 1e-3
        assert s["unstable_manifold_min_distance_right"] > 1e-3
        assert s["max_junction_gap"] < 1e-3

    def test_slow_wave_closes_through_left_branch(self, fhn_slow_run):
        s = fhn_slow_run.summary
        assert s["junction_wuq_to_left"] < 1e-3
        assert s["end_distance_to_q"] <= 1e-3

    def test_degenerate_speed_rejected(self):
        from smst.experiments.fhn_homoclinic import run

        with pytest.raises(ValueError):
            run(s=0.0, refine_speed=False)


class TestRICanard:
    def test_interior_tracks_graph(self, ri_canard_run):
        s = ri_canard_run.summary
        assert s["interior_max_graph_deviation"] <= s["deviation_bound"]

    def test_membrane_potentials_retained_at_left(self, ri_canard_run):
        assert ri_canard_run.summary["retained_v_error"] == 0.0

    def test_unstable_pairs_separate_oppositely(self, ri_canard_run):
        assert ri_canard_run.summary["unstable_pairs_opposite"]
        fans = ri_canard_run.tables["fans"]
        unstable = fans.column("kind") == 0
        assert np.all(fans.column("final_distance")[unstable] > 1e-2)

    def test_stable_fans_reported(self, ri_canard_run):
        fans = ri_canard_run.tables["fans"]
        assert np.sum(fans.column("kind") == 1) >= 2
