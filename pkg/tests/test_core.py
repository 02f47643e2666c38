import numpy as np
import pytest

from smst.core import (
    BoundaryManifold,
    Mesh,
    TrajectorySegment,
    assemble_field,
    critical_point,
    fd_full_jacobian,
    segment_from_arrays,
    slow_flow_field,
    strong_directions,
)
from smst.errors import FoldSingularityError, ModelEvaluationError, NormalHyperbolicityError
from smst.models import fhn, linear, morris_lecar as ml, reciprocal_inhibition as ri


def _all_systems():
    return [
        linear.system(0.1),
        ml.system(ml.MorrisLecarParams(k=-0.22, epsilon=0.002)),
        ml.rescaled_system(ml.MorrisLecarParams(k=-0.22, epsilon=0.002)),
        fhn.system(fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)),
        ri.system(ri.RIParams()),
    ]


def _sample_states(system, rng, n):
    base = {
        "linear": [0.3, 0.1, 0.5],
        "morris-lecar": [-0.12, 0.05, 0.03],
        "morris-lecar-rescaled": [-0.12, 0.05, 0.03],
        "fhn": [-0.1, 0.01, 0.02],
        "reciprocal-inhibition": [-0.15, 0.8, -0.4, -0.06],
    }[system.name]
    return np.asarray(base) + 0.05 * rng.standard_normal((n, len(base)))


class TestAssembleField:
    def test_linear_origin(self):
        sys = linear.system(0.1)
        out = assemble_field(sys, np.zeros(3))
        assert np.allclose(out, [0.0, 0.0, 1.0])

    def test_linear_example(self):
        sys = linear.system(0.5)
        out = assemble_field(sys, np.array([1.0, 2.0, 3.0]))
        assert np.allclose(out, [4.0, 4.0, 1.0])

    def test_fhn_equilibrium_field_vanishes(self):
        sys = fhn.system(fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3))
        q = fhn.equilibrium(0.0)
        assert np.allclose(q, [0.0, 0.0, 0.0])
        assert np.max(np.abs(assemble_field(sys, q))) < 1e-14

    def test_eps_scaling_reproduces_fast_field(self):
        rng = np.random.default_rng(7)
        for sys in _all_systems():
            for z in _sample_states(sys, rng, 10):
                full = assemble_field(sys, z)
                x, y = sys.split(z)
                fast = np.asarray(sys.fast_field(x, y, sys.epsilon), dtype=float)
                scale = max(1.0, np.max(np.abs(fast)))
                assert np.max(np.abs(sys.epsilon * full[: sys.fast_dim] - fast)) < 1e-14 * scale
                slow = np.asarray(sys.slow_field(x, y, sys.epsilon), dtype=float)
                assert np.max(np.abs(full[sys.fast_dim :] - slow)) < 1e-14 * max(1.0, np.max(np.abs(slow)))

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            assemble_field(linear.system(0.1), np.zeros(4))

    def test_nonfinite_state_rejected(self):
        with pytest.raises(ModelEvaluationError):
            assemble_field(linear.system(0.1), np.array([np.nan, 0.0, 0.0]))


class TestJacobians:
    def test_fast_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        for sys in _all_systems():
            for z in _sample_states(sys, rng, 20):
                x, y = sys.split(z)
                analytic = np.asarray(sys.fast_jacobian(x, y, sys.epsilon))
                h = 1e-6
                cols = []
                for j in range(sys.fast_dim):
                    xp, xm = x.copy(), x.copy()
                    xp[j] += h
                    xm[j] -= h
                    cols.append(
                        (np.asarray(sys.fast_field(xp, y, sys.epsilon))
                         - np.asarray(sys.fast_field(xm, y, sys.epsilon))) / (2 * h)
                    )
                fd = np.column_stack(cols)
                denom = max(1.0, np.max(np.abs(analytic)))
                assert np.max(np.abs(analytic - fd)) / denom < 1e-5, sys.name

    def test_full_jacobian_matches_finite_differences(self):
        rng = np.random.default_rng(13)
        for sys in _all_systems():
            for z in _sample_states(sys, rng, 25):
                analytic = np.asarray(sys.full_jacobian(z))
                fd = fd_full_jacobian(sys, z)
                denom = max(1.0, np.max(np.abs(analytic)))
                assert np.max(np.abs(analytic - fd)) / denom < 1e-5, sys.name


class TestStrongDirections:
    def test_linear_diagonal_split(self):
        sys = linear.system(0.1)
        sd = strong_directions(sys, np.array([0.0, 0.0, 0.0]))
        assert sd.unstable_count == 1
        assert np.isclose(sd.stable_values[0].real, -1.0)
        assert np.isclose(sd.unstable_values[0].real, 1.0)
        assert np.allclose(sd.stable_vectors[0], [1.0, 0.0, 0.0])
        assert np.allclose(sd.unstable_vectors[0], [0.0, 1.0, 0.0])

    def test_ml_saddle_at_reference_point(self):
        sys = ml.system(ml.MorrisLecarParams(k=-0.22, epsilon=0.002))
        point = np.array([-0.109854033586602, 0.052299738361417, 0.025187193494031])
        sd = strong_directions(sys, point)
        assert sd.unstable_count == 1
        assert sd.stable_count == 1

    def test_fhn_middle_branch_fully_unstable(self):
        params = fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)
        sys = fhn.system(params)
        x1 = 0.35  # between the folds
        sd = strong_directions(sys, fhn.critical_point_at(x1, params.p))
        assert sd.unstable_count == 2
        assert sd.stable_count == 0

    def test_eigenvector_residuals(self):
        rng = np.random.default_rng(3)
        for sys in _all_systems():
            for z in _sample_states(sys, rng, 5):
                try:
                    sd = strong_directions(sys, z)
                except NormalHyperbolicityError:
                    continue
                jac = sys.fast_jacobian_at(z)
                norm = np.linalg.norm(jac)
                for lam, vec in zip(sd.stable_values, sd.stable_vectors):
                    if abs(lam.imag) > 0:
                        continue
                    v = vec[: sys.fast_dim]
                    assert np.linalg.norm(jac @ v - lam.real * v) <= 1e-8 * norm
                for lam, vec in zip(sd.unstable_values, sd.unstable_vectors):
                    if abs(lam.imag) > 0:
                        continue
                    v = vec[: sys.fast_dim]
                    assert np.linalg.norm(jac @ v - lam.real * v) <= 1e-8 * norm

    def test_rescaling_invariance(self):
        base = fhn.system(fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3))
        scale = 3.7
        from smst.core import SlowFastSystem

        scaled = SlowFastSystem(
            name="fhn-scaled",
            fast_dim=base.fast_dim,
            slow_dim=base.slow_dim,
            epsilon=base.epsilon,
            fast_field=lambda x, y, e: scale * np.asarray(base.fast_field(x, y, e)),
            slow_field=base.slow_field,
            fast_jacobian=lambda x, y, e: scale * np.asarray(base.fast_jacobian(x, y, e)),
        )
        z = fhn.critical_point_at(-0.1, 0.0)
        sd1 = strong_directions(base, z)
        sd2 = strong_directions(scaled, z)
        assert np.allclose(sd1.unstable_vectors, sd2.unstable_vectors, atol=1e-10)
        assert np.allclose(sd1.stable_vectors, sd2.stable_vectors, atol=1e-10)
        assert np.allclose(scale * sd1.unstable_values, sd2.unstable_values)

    def test_fold_proximity_raises(self):
        params = fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)
        sys = fhn.system(params)
        fold = fhn.critical_point_at(fhn.FOLD_LOWER, params.p)
        with pytest.raises(NormalHyperbolicityError):
            strong_directions(sys, fold)


class TestCriticalPoint:
    def test_linear_explicit_root(self):
        sys = linear.system(0.1)
        x = critical_point(sys, np.array([2.0]), np.array([0.0, 0.5]))
        assert np.allclose(x, [2.0, 0.0], atol=1e-12)

    def test_fhn_chart_value(self):
        # height of the cubic at x1 = 0.5: -0.125 + 0.275 - 0.05 = 0.1
        assert np.isclose(fhn.c_of(0.5, 0.0), 0.1)
        params = fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)
        sys = fhn.system(params)
        x = critical_point(sys, np.array([0.1]), np.array([0.5, 0.0]))
        assert np.isclose(fhn.c_of(x[0], 0.0), 0.1, atol=1e-12)
        assert abs(x[1]) < 1e-12

    def test_ri_matches_closed_form(self):
        params = ri.RIParams()
        sys = ri.system(params)
        rng = np.random.default_rng(5)
        for _ in range(50):
            v = np.array([-0.2, 0.8]) + 0.1 * rng.standard_normal(2)
            q = ri.h(v, params)
            x = critical_point(sys, q, v + 1e-3 * rng.standard_normal(2))
            assert np.max(np.abs(x - v)) < 1e-9

    @pytest.mark.parametrize(
        "maker,chart_points",
        [
            ("linear", None),
            ("ml", (-0.20, -0.05)),
            ("fhn_left", (-0.3, 0.0)),
            ("fhn_right", (0.75, 1.1)),
            ("ri", None),
        ],
    )
    def test_residual_small_at_random_chart_points(self, maker, chart_points):
        rng = np.random.default_rng(17)
        n = 1000
        if maker == "linear":
            sys = linear.system(0.1)
            for y in rng.uniform(-2, 2, n):
                x = critical_point(sys, np.array([y]), np.array([y + 0.1, 0.2]))
                assert np.max(np.abs(sys.fast_field(x, np.array([y]), 0.0))) <= 1e-12
        elif maker == "ml":
            sys = ml.system(ml.MorrisLecarParams(k=-0.22, epsilon=0.002))
            for v in rng.uniform(*chart_points, n):
                z = ml.critical_curve(v)
                x = critical_point(sys, z[2:], z[:2] + 1e-4)
                assert np.max(np.abs(sys.fast_field(x, z[2:], 0.0))) <= 1e-12
        elif maker.startswith("fhn"):
            params = fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)
            sys = fhn.system(params)
            for x1 in rng.uniform(*chart_points, n):
                z = fhn.critical_point_at(x1, params.p)
                x = critical_point(sys, z[2:], z[:2] + 1e-5)
                assert np.max(np.abs(sys.fast_field(x, z[2:], 0.0))) <= 1e-12
        else:
            params = ri.RIParams()
            sys = ri.system(params)
            for _ in range(n):
                v = np.array([-0.2, 0.7]) + 0.15 * rng.standard_normal(2)
                q = ri.h(v, params)
                x = critical_point(sys, q, v + 1e-5)
                assert np.max(np.abs(sys.fast_field(x, q, 0.0))) <= 1e-12


class TestDomainTypes:
    def test_mesh_must_increase(self):
        with pytest.raises(ValueError):
            Mesh(np.array([0.0, 1.0, 0.5]))

    def test_single_knot_mesh_allowed(self):
        assert Mesh(np.array([0.0])).intervals == 0

    def test_segment_count_mismatch(self):
        with pytest.raises(ValueError):
            TrajectorySegment(Mesh(np.array([0.0, 1.0])), np.zeros((3, 2)))

    def test_segment_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            segment_from_arrays([0.0, 1.0], [[0.0, np.inf], [0.0, 0.0]])

    def test_boundary_manifold_rank(self):
        with pytest.raises(ValueError):
            BoundaryManifold(np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), np.zeros(3))

    def test_boundary_residual(self):
        bm = BoundaryManifold(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]), np.array([1.0, 2.0, 3.0]))
        assert bm.codimension == 2
        assert np.allclose(bm.residual(np.array([1.5, 9.0, 3.25])), [0.5, 0.25])


class TestSlowFlowCharts:
    def test_linear_slow_flow_is_one(self):
        chart = linear.chart(0.1)
        for y in np.linspace(-5, 5, 11):
            assert np.allclose(slow_flow_field(chart, [y]), [1.0])

    def test_fhn_chart_chain_rule(self):
        params = fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)
        chart = fhn.x1_chart(params)
        x1 = -0.1
        expected = (x1 - fhn.c_of(x1, 0.0)) / (params.s * fhn.cubic_prime(x1))
        assert np.isclose(slow_flow_field(chart, [x1])[0], expected)

    def test_fhn_fold_singularity(self):
        params = fhn.FhnParams(p=0.0, s=1.2463, epsilon=1e-3)
        chart = fhn.x1_chart(params)
        with pytest.raises(FoldSingularityError):
            slow_flow_field(chart, [fhn.FOLD_LOWER])

    def test_ri_chart_consistency(self):
        params = ri.RIParams()
        chart = ri.v_chart(params)
        v = np.array([-0.16851015831, 0.85854544475])
        vdot = slow_flow_field(chart, v)
        # Dh(v) vdot must equal the slow field s v - h(v)
        lhs = ri.dh(v, params) @ vdot
        rhs = params.s * v - ri.h(v, params)
        assert np.max(np.abs(lhs - rhs)) < 1e-12
