import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smst.errors import SectionMissError, StepLimitError, StiffnessError
from smst.ivp import (
    IvpOptions,
    Section,
    displaced_pair,
    integrate,
    integrate_field,
    integrate_to_section,
)
from smst.models import linear, morris_lecar as ml


class TestIntegrate:
    def test_linear_unit_span(self):
        eps = 0.01
        sys = linear.system(eps)
        y0 = 0.4
        z0 = linear.slow_manifold_point(y0, eps)
        seg = integrate(sys, z0, (0.0, 1.0))
        assert np.max(np.abs(seg.last - np.array([y0 - eps + 1.0, 0.0, y0 + 1.0]))) < 1e-8

    def test_unstable_mode_growth(self):
        eps = 0.01
        sys = linear.system(eps)
        z0 = np.array([0.0, 1e-8, 0.0])
        seg = integrate(sys, z0, (0.0, 0.2))
        want = 1e-8 * math.exp(0.2 / eps)
        assert abs(seg.last[1] - want) / want < 1e-6

    def test_zero_span_returns_initial(self):
        sys = linear.system(0.1)
        z0 = np.array([1.0, 2.0, 3.0])
        seg = integrate(sys, z0, (0.5, 0.5))
        assert seg.times.size == 1
        assert np.array_equal(seg.states[0], z0)

    def test_backward_forward_roundtrip(self):
        sys = linear.system(0.1)
        z0 = np.array([0.3, 0.0, 0.1])
        opts = IvpOptions(rel_tol=1e-10, abs_tol=1e-12)
        back = integrate(sys, z0, (0.0, -0.5), opts)
        fwd = integrate(sys, back.states[0], (-0.5, 0.0), opts)
        assert np.max(np.abs(fwd.last - z0)) < 10 * 1e-10 * max(1.0, np.max(np.abs(z0)))

    def test_global_error_bound_on_slow_manifold(self):
        for eps in (1e-1, 1e-2, 1e-3):
            sys = linear.system(eps)
            z0 = linear.slow_manifold_point(0.2, eps) + np.array([0.05, 0.0, 0.0])
            opts = IvpOptions(rel_tol=1e-10, abs_tol=1e-12)
            seg = integrate(sys, z0, (0.0, 1.0), opts)
            exact = linear.exact(z0, 1.0, eps)
            assert np.max(np.abs(seg.last - exact)) <= 1e3 * 1e-10

    def test_max_steps_guard(self):
        sys = linear.system(1e-4)
        with pytest.raises(StepLimitError):
            integrate(sys, np.array([5.0, 0.0, 0.0]), (0.0, 10.0), IvpOptions(max_steps=10))

    def test_stiffness_guard_near_blowup(self):
        # Bursting model with the membrane potential pushed far off scale:
        # the cosh rate explodes and the step size collapses.
        sys = ml.system(ml.MorrisLecarParams(k=-0.22, epsilon=0.002))
        z0 = np.array([-3.5, 0.5, 0.03])
        with pytest.raises((StiffnessError, StepLimitError)):
            integrate(sys, z0, (0.0, -10.0), IvpOptions(max_steps=20_000))


class TestSections:
    def test_linear_hit_example(self):
        eps = 0.01
        sys = linear.system(eps)
        hit, t_hit, traj = integrate_to_section(
            sys, np.zeros(3), Section(2, 2.0, "increasing"), t_max=5.0
        )
        assert abs(t_hit - 2.0) < 1e-9
        want = linear.exact(np.zeros(3), 2.0, eps)
        assert np.max(np.abs(hit - want)) < 1e-8
        assert abs(hit[0] - 1.99) < 1e-6

    def test_immediate_hit_with_either(self):
        sys = linear.system(0.1)
        hit, t_hit, traj = integrate_to_section(
            sys, np.zeros(3), Section(2, 0.0, "either"), t_max=1.0
        )
        assert t_hit == 0.0
        assert traj.times.size == 1

    def test_directional_start_on_section_skips(self):
        sys = linear.system(0.1)
        # starts exactly on y=0; must leave and cannot come back down
        with pytest.raises(SectionMissError):
            integrate_to_section(sys, np.zeros(3), Section(2, 0.0, "decreasing"), t_max=0.5)

    def test_refinement_tolerance(self):
        sys = linear.system(0.05)
        section = Section(2, 1.3, "increasing")
        hit, t_hit, _ = integrate_to_section(sys, np.zeros(3), section, t_max=3.0)
        assert abs(hit[2] - 1.3) <= 1e-12 * max(1.0, 1.3)

    def test_linear_functional_section(self):
        sys = linear.system(0.1)
        section = Section(np.array([0.0, 0.0, 2.0]), 1.0, "increasing")  # 2y = 1
        hit, t_hit, _ = integrate_to_section(sys, np.zeros(3), section, t_max=2.0)
        assert abs(hit[2] - 0.5) < 1e-12

    def test_ml_spiking_trajectory_reaches_section(self):
        params = ml.MorrisLecarParams(k=-0.22, epsilon=0.006366)
        sys = ml.system(params)
        # start on the spiking side above the section and descend through it
        z0 = np.array([0.1, 0.4, 0.09])
        hit, t_hit, _ = integrate_to_section(
            sys, z0, Section(2, 0.075, "decreasing"),
            IvpOptions(rel_tol=1e-8, abs_tol=1e-10), t_max=3.0,
        )
        assert abs(hit[2] - 0.075) < 1e-12
        assert t_hit < 3.0

    def test_miss_raises(self):
        sys = linear.system(0.1)
        with pytest.raises(SectionMissError):
            integrate_to_section(sys, np.zeros(3), Section(2, 10.0, "increasing"), t_max=1.0)


class TestDisplacedPair:
    def test_basic(self):
        a, b = displaced_pair(np.zeros(3), np.array([1.0, 0.0, 0.0]), 1e-4)
        assert np.allclose(a, [1e-4, 0, 0])
        assert np.allclose(b, [-1e-4, 0, 0])

    def test_zero_distance_control(self):
        a, b = displaced_pair(np.ones(2), np.array([0.0, 1.0]), 0.0)
        assert np.array_equal(a, b)

    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            displaced_pair(np.zeros(2), np.array([1.0, 1.0]), 1e-3)

    @given(
        st.floats(-1.0, 1.0),
        st.floats(-1.0, 1.0),
        st.floats(min_value=1e-12, max_value=1e-2),
    )
    @settings(max_examples=50, deadline=None)
    def test_midpoint_and_separation(self, c1, c2, d):
        base = np.array([c1, c2, 0.0])
        direction = np.array([0.6, 0.8, 0.0])
        a, b = displaced_pair(base, direction, d)
        assert np.allclose(0.5 * (a + b), base)
        assert np.isclose(np.linalg.norm(a - b), 2 * d)


class TestLadderDistances:
    def test_decade_ladder(self):
        base = np.zeros(3)
        direction = np.array([0.0, 1.0, 0.0])
        for k in range(4, 12):
            a, b = displaced_pair(base, direction, 10.0 ** (-k))
            assert np.isclose(a[1], 10.0 ** (-k))
            assert np.isclose(b[1], -(10.0 ** (-k)))


def test_integrate_field_callback_stops():
    sys = linear.system(0.1)
    times, states, _ = integrate_field(
        (lambda t, z: sys.rhs(z)), np.zeros(3), (0.0, 10.0),
        IvpOptions(), callback=lambda t, z: z[2] > 1.0,
    )
    assert times[-1] < 10.0
    assert states[-1][2] > 1.0
