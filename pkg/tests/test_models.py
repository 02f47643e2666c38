import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smst.core import assemble_field, strong_directions
from smst.errors import FoldSingularityError, ModelEvaluationError
from smst.ivp import IvpOptions, integrate, integrate_field
from smst.models import fhn, linear, morris_lecar as ml, reciprocal_inhibition as ri
from smst.models import presets


class TestLinear:
    def test_exact_on_slow_manifold(self):
        eps = 0.01
        for t in (0.0, 0.3, 2.0):
            z = linear.exact(linear.slow_manifold_point(0.7, eps), t, eps)
            assert np.allclose(z, [0.7 - eps + t, 0.0, 0.7 + t])

    def test_exact_at_zero_time(self):
        z0 = np.array([0.3, -0.2, 1.0])
        assert np.allclose(linear.exact(z0, 0.0, 0.5), z0, rtol=0, atol=1e-15)

    def test_exact_origin_example(self):
        z = linear.exact(np.zeros(3), 1.0, 0.01)
        assert np.isclose(z[0], 0.99 + 0.01 * math.exp(-100.0))
        assert z[1] == 0.0
        assert z[2] == 1.0

    def test_exact_overflow_reported(self):
        with pytest.raises(OverflowError):
            linear.exact(np.array([0.0, 1e-8, 0.0]), 10.0, 0.01)
        # zero coefficient on the unstable mode is safe at any span
        z = linear.exact(np.array([0.5, 0.0, 0.5]), 10.0, 0.01)
        assert np.isfinite(z).all()

    def test_ratio_examples(self):
        assert np.isclose(linear.ratio(1.0, 1.0), 7.0 / 19.0)
        rel = (linear.ratio(1.0, 1.0) - math.exp(-1)) / math.exp(-1)
        assert 0 < rel < 0.0015
        assert np.isclose(linear.ratio(1e-9, 1.0), 1.0, atol=1e-8)

    @given(st.floats(1e-6, 1e3), st.floats(1e-6, 1e3))
    @settings(max_examples=200, deadline=None)
    def test_ratio_in_unit_interval(self, delta, eps):
        assert 0.0 < linear.ratio(delta, eps) < 1.0


class TestMorrisLecar:
    def test_gating_kinetics_vanish_at_steady_state(self):
        params = ml.MorrisLecarParams(k=-0.22, epsilon=0.002)
        sys = ml.system(params)
        for v in np.linspace(-0.4, 0.4, 17):
            w = ml.w_inf(v)
            fast = sys.fast_field(np.array([v, w]), np.array([0.1]), params.epsilon)
            assert abs(fast[1]) < 1e-14

    def test_critical_curve_zeroes_fast_field(self):
        params = ml.MorrisLecarParams(k=-0.22, epsilon=0.002)
        sys = ml.system(params)
        for v in np.linspace(-0.3, 0.2, 31):
            z = ml.critical_curve(v)
            fast = sys.fast_field(z[:2], z[2:], params.epsilon)
            assert np.max(np.abs(fast)) <= 1e-12

    def test_reference_point_on_critical_curve(self):
        # the branch point used by the accuracy figure lies within O(eps)
        z = ml.critical_curve(-0.109854033586602)
        assert abs(z[1] - 0.052299738361417) < 2e-4
        assert abs(z[2] - 0.025187193494031) < 2e-4

    def test_saddle_on_middle_branch(self):
        params = ml.MorrisLecarParams(k=-0.22, epsilon=0.002)
        sys = ml.system(params)
        sd = strong_directions(sys, ml.critical_curve(-0.11))
        assert sd.unstable_count == 1

    def test_fold_locations(self):
        folds = ml.fold_points()
        assert len(folds) == 2
        assert abs(folds[1] + 0.034) < 2e-3
        assert folds[0] < -0.2

    def test_rescaled_slow_component_is_one(self):
        params = ml.MorrisLecarParams(k=-0.22, epsilon=0.002)
        rsys = ml.rescaled_system(params)
        rng = np.random.default_rng(0)
        for _ in range(10):
            z = np.array([-0.12, 0.05, 0.03]) + 0.05 * rng.standard_normal(3)
            assert assemble_field(rsys, z)[2] == 1.0

    def test_rescaled_undefined_at_setpoint(self):
        params = ml.MorrisLecarParams(k=-0.22, epsilon=0.002)
        rsys = ml.rescaled_system(params)
        with pytest.raises(ModelEvaluationError):
            rsys.rhs(np.array([-0.22, 0.1, 0.05]))

    def test_candidate_rejects_fold_crossing(self):
        params = ml.MorrisLecarParams(k=-0.22, epsilon=0.002)
        with pytest.raises(ValueError):
            ml.candidate_segment(params, -0.30, -0.06, 50)


class TestFhn:
    def test_fold_values(self):
        lo, hi = fhn.fold_points()
        assert np.isclose(lo, 0.0486870, atol=1e-6)
        assert np.isclose(hi, 0.6846463, atol=1e-6)
        assert np.isclose(fhn.cubic_prime(lo), 0.0, atol=1e-14)
        assert np.isclose(fhn.cubic_prime(hi), 0.0, atol=1e-14)
        # non-degenerate folds: second derivative of the height is nonzero
        for x in (lo, hi):
            assert abs(-6 * x + 2.2) > 0.1

    def test_section_level(self):
        assert np.isclose(fhn.SECTION_LEVEL, 11.0 / 30.0, atol=1e-15)

    def test_equilibrium_unique_for_zero_offset(self):
        q = fhn.equilibrium(0.0)
        assert np.allclose(q, [0.0, 0.0, 0.0], atol=1e-12)

    def test_zero_wave_speed_rejected(self):
        with pytest.raises(ValueError):
            fhn.FhnParams(p=0.0, s=0.0, epsilon=1e-3)

    def test_critical_points_zero_fast_field(self):
        params = fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)
        sys = fhn.system(params)
        for x1 in np.linspace(-0.3, 1.1, 29):
            z = fhn.critical_point_at(x1, params.p)
            assert np.max(np.abs(sys.fast_field(z[:2], z[2:], params.epsilon))) <= 1e-12

    def test_candidate_time_sampling_resolves_crawl(self):
        params = fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)
        cand = fhn.candidate_segment(params, -0.22, -6e-4, 240)
        assert np.max(np.diff(cand.times)) < 0.01
        chart_cand = fhn.candidate_segment(params, -0.22, -6e-4, 240, sampling="chart")
        assert np.max(np.diff(chart_cand.times)) > 0.05


class TestReciprocalInhibition:
    def test_field_is_graph_deviation(self):
        params = ri.RIParams()
        sys = ri.system(params)
        rng = np.random.default_rng(2)
        for _ in range(20):
            v = np.array([-0.2, 0.8]) + 0.2 * rng.standard_normal(2)
            q = rng.standard_normal(2) * 0.3
            fast = sys.fast_field(v, q, params.epsilon)
            assert np.allclose(fast, ri.h(v, params) - q, atol=1e-15)

    def test_lift_zeroes_fast_field(self):
        params = ri.RIParams()
        sys = ri.system(params)
        rng = np.random.default_rng(3)
        for _ in range(20):
            v = np.array([-0.2, 0.7]) + 0.2 * rng.standard_normal(2)
            z = ri.lift(v, params)
            assert np.max(np.abs(sys.fast_field(z[:2], z[2:], params.epsilon))) < 1e-15

    def test_projection_keeps_membrane_potentials(self):
        params = ri.RIParams()
        p = np.array([-0.16851015831, 0.85854544475, -0.41290838536, -0.062963871])
        z = ri.lift(p[:2], params)
        assert np.array_equal(z[:2], p[:2])
        assert np.max(np.abs(z[2:] - p[2:])) < 5e-4  # base point sits near the sheet

    def test_dh_matches_finite_differences(self):
        params = ri.RIParams()
        rng = np.random.default_rng(4)
        for _ in range(30):
            v = np.array([-0.2, 0.7]) + 0.2 * rng.standard_normal(2)
            jac = ri.dh(v, params)
            h = 1e-6
            for j in range(2):
                vp, vm = v.copy(), v.copy()
                vp[j] += h
                vm[j] -= h
                col = (ri.h(vp, params) - ri.h(vm, params)) / (2 * h)
                assert np.max(np.abs(jac[:, j] - col)) < 1e-6

    def test_slow_flow_tracks_full_system_on_attracting_sheet(self):
        # Consistency with the full dynamics can only be checked by forward
        # integration where the sheet attracts; on the saddle sheet the
        # lifted point departs after O(eps log eps) time, which is the very
        # obstruction the boundary-value solver exists to beat.
        params = ri.RIParams(epsilon=1e-3)
        sys = ri.system(params)
        v0 = np.array([1.5, 1.2])
        eigs = np.linalg.eigvals(ri.dh(v0, params))
        assert np.all(eigs.real < 0)
        span = 0.25  # the chart flow reaches a fold near t = 0.36
        _, chart_states, _ = integrate_field(
            (lambda t, u: ri.slow_flow(u, params)), v0, (0.0, span),
            IvpOptions(rel_tol=1e-12, abs_tol=1e-14),
        )
        lifted_end = ri.lift(chart_states[-1], params)
        full = integrate(sys, ri.lift(v0, params), (0.0, span), IvpOptions(rel_tol=1e-10, abs_tol=1e-12))
        assert np.max(np.abs(full.last - lifted_end)) < 10 * params.epsilon

    def test_fold_singularity_raises(self):
        params = ri.RIParams(sigma1=1.0, sigma2=1.0, omega=0.0)
        # with unit gains h'(0) = 0: the sheet folds at the origin
        with pytest.raises(FoldSingularityError):
            ri.slow_flow(np.zeros(2), params)


class TestPresets:
    def test_required_names_present(self):
        names = presets.names()
        for required in ("terman_test", "terman_umfld", "fhn_fast_wave", "fhn_slow_wave", "ri_section52"):
            assert required in names

    def test_registry_nonempty_and_resolvable(self):
        from smst.experiments import REGISTRY

        assert len(REGISTRY) == 7
        for preset in presets.all_presets():
            assert preset.experiment in REGISTRY

    def test_unknown_preset_raises(self):
        with pytest.raises(KeyError):
            presets.get("nope")
