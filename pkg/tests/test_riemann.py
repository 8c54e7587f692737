import math

import numpy as np
import pytest

from sjlab import jacobi as jc
from sjlab import riemann as rm
from sjlab import siegel as sg
from sjlab.errors import NoConvergence, NotPositiveDefinite, StepOverflow

POINCARE = sg.siegel_metric_field(1)


def conformal_u(X):
    # Hermitian for the pairing (x, y), (u, v) but d omega != 0
    e = np.exp(X[:, 2])
    G = np.zeros((len(X), 4, 4))
    G[:, 0, 0] = G[:, 1, 1] = e
    G[:, 2, 2] = G[:, 3, 3] = 1.0
    return G


class TestMetricField:
    def test_checked_rejects(self):
        bad = rm.MetricField(2, lambda X: np.broadcast_to(np.diag([1.0, -1.0]), (len(X), 2, 2)).copy())
        with pytest.raises(NotPositiveDefinite):
            bad.checked([0.0, 0.0])
        with pytest.raises(NotPositiveDefinite):
            rm.christoffel(bad, [0.0, 0.0])

    def test_speed(self):
        assert POINCARE.speed([0.0, 2.0], [1.0, 0.0]) == pytest.approx(0.5)


class TestChristoffel:
    def test_euclidean(self):
        np.testing.assert_allclose(rm.christoffel(rm.euclidean_field(3), [1.0, 2.0, 3.0]), 0, atol=1e-14)

    def test_poincare(self):
        y = 1.7
        G = rm.christoffel(POINCARE, [0.4, y])
        assert G[0, 0, 1] == pytest.approx(-1 / y, abs=1e-6)
        assert G[1, 0, 0] == pytest.approx(1 / y, abs=1e-6)
        assert G[1, 1, 1] == pytest.approx(-1 / y, abs=1e-6)
        assert G[0, 0, 0] == pytest.approx(0, abs=1e-6)

    def test_lower_symmetry_jacobi(self):
        g = jc.jacobi_metric_field(1, 1, jc.JacobiMetricParams(2.0, 3.0))
        G = rm.christoffel(g, jc.random_siegel_jacobi_point(1, 1, 1).chart())
        assert np.abs(G - G.transpose(0, 2, 1)).max() <= 1e-8

    def test_batch_matches_single(self):
        g = sg.siegel_metric_field(2)
        X = np.array([sg.random_siegel_point(k, 2).chart() for k in range(3)])
        B = rm.christoffel_batch(g, X)
        for k in range(3):
            np.testing.assert_allclose(B[k], rm.christoffel(g, X[k]), atol=1e-14)


class TestGeodesics:
    def test_euclidean_line(self):
        p = rm.geodesic_integrate(rm.euclidean_field(2), [1.0, -1.0], [0.5, 2.0], T=2.0)
        np.testing.assert_allclose(p.end, [2.0, 3.0], atol=1e-12)

    def test_poincare_vertical(self):
        p = rm.geodesic_integrate(POINCARE, [0.0, 1.0], [0.0, 1.0])
        assert p.end[0] == pytest.approx(0.0, abs=1e-6)
        assert p.end[1] == pytest.approx(math.e, abs=1e-6)

    def test_step_floor(self):
        with pytest.raises(ValueError):
            rm.geodesic_integrate(POINCARE, [0.0, 1.0], [0.0, 1.0], steps=32)

    def test_fourth_order(self):
        x0, v0 = [0.0, 1.0], [1.0, 0.5]
        ref = rm.geodesic_integrate(POINCARE, x0, v0, steps=1024).end
        e1 = np.abs(rm.geodesic_integrate(POINCARE, x0, v0, steps=64).end - ref).max()
        e2 = np.abs(rm.geodesic_integrate(POINCARE, x0, v0, steps=128).end - ref).max()
        assert e2 * 8 <= e1

    def test_special_geodesic_n2(self):
        a = np.exp(np.array([0.6, -0.8]))
        g = sg.siegel_metric_field(2)
        v0 = sg.SiegelTangent(np.zeros((2, 2)), np.diag(np.log(a))).chart()
        p = rm.geodesic_integrate(g, sg.SiegelPoint.identity(2).chart(), v0)
        for t, x in zip(p.times[::32], p.points[::32]):
            assert np.abs(x - sg.special_geodesic(a, t).chart()).max() <= 1e-5

    def test_speed_conserved(self):
        rng = np.random.default_rng(3)
        for n in (1, 2):
            g = sg.siegel_metric_field(n)
            w = sg.random_siegel_point(rng, n)
            v = rng.normal(size=sg.chart_dim(n))
            v /= g.speed(w.chart(), v)
            s = rm.geodesic_integrate(g, w.chart(), v).speeds(g)
            assert np.abs(s / s[0] - 1).max() <= 1e-4
        gj = jc.jacobi_metric_field(1, 1, jc.JacobiMetricParams(1.0, 2.0))
        p = jc.random_siegel_jacobi_point(rng, 1, 1)
        v = rng.normal(size=4)
        s = rm.geodesic_integrate(gj, p.chart(), v / gj.speed(p.chart(), v)).speeds(gj)
        assert np.abs(s / s[0] - 1).max() <= 1e-4

    def test_leaves_cone(self):
        with pytest.raises(StepOverflow):
            rm.geodesic_integrate(rm.euclidean_field(2), [0.0, 0.0], [2e6, 0.0])
        flat_cone = rm.MetricField(2, rm.euclidean_field(2).evaluate_batch, admissible=lambda X: X[:, 1] > 0)
        with pytest.raises(StepOverflow):
            rm.geodesic_integrate(flat_cone, [0.0, 1.0], [0.0, -2.0])

    def test_json(self):
        p = rm.geodesic_integrate(POINCARE, [0.0, 1.0], [0.0, 1.0], steps=64)
        obj = p.to_json()
        assert len(obj["times"]) == len(obj["points"]) == 65


class TestShooting:
    def test_euclidean(self):
        d, v = rm.geodesic_shoot_bvp(rm.euclidean_field(3), [0.0, 0, 0], [1.0, 2, 2])
        assert d == pytest.approx(3.0, abs=1e-12)

    def test_poincare_log2(self):
        d, _ = rm.geodesic_shoot_bvp(POINCARE, [0.0, 1.0], [0.0, 2.0])
        assert d == pytest.approx(math.log(2), abs=1e-5)

    def test_matches_series(self):
        rng = np.random.default_rng(8)
        g = sg.siegel_metric_field(2)
        a = sg.random_siegel_point(rng, 2)
        b = sg.SiegelPoint(a.X + 0.2, a.Y * 1.3)
        d, _ = rm.geodesic_shoot_bvp(g, a.chart(), b.chart())
        assert d == pytest.approx(sg.siegel_distance(a, b), abs=1e-5)

    def test_jacobi_symmetric(self):
        g = jc.jacobi_metric_field(1, 1)
        p = jc.SiegelJacobiPoint.origin(1, 1)
        q = jc.SiegelJacobiPoint(sg.SiegelPoint.from_omega([[2j]]), [[0.3 + 0.1j]])
        d1, _ = rm.geodesic_shoot_bvp(g, p.chart(), q.chart())
        d2, _ = rm.geodesic_shoot_bvp(g, q.chart(), p.chart())
        assert d1 == pytest.approx(d2, abs=1e-5)

    def test_continuation_fallback(self):
        # thin-Y pair where Newton from the chord alone leaves its basin
        g = jc.jacobi_metric_field(1, 1)
        a = np.array([-0.24419027, 0.10915204, -0.34250559, -0.71609118])
        b = np.array([0.16766485, 0.09554168, -0.26452796, -0.27309023])
        d1, v = rm.geodesic_shoot_bvp(g, a, b)
        d2, _ = rm.geodesic_shoot_bvp(g, b, a)
        assert d1 == pytest.approx(d2, abs=1e-5)
        np.testing.assert_allclose(rm.geodesic_integrate(g, a, v).end, b, atol=1e-8)

    def test_iteration_cap(self):
        with pytest.raises(NoConvergence):
            rm.geodesic_shoot_bvp(POINCARE, [0.0, 1.0], [3.0, 0.5], max_iter=1)


class TestCurvature:
    def test_euclidean(self):
        rep = rm.curvature(rm.euclidean_field(3), [0.1, 0.2, 0.3])
        assert rep.scalar == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose(rep.riemann, 0, atol=1e-10)

    def test_poincare(self):
        rep = rm.curvature(POINCARE, [0.3, 0.8])
        assert rep.gaussian == pytest.approx(-1.0, abs=1e-4)
        assert rep.scalar == pytest.approx(-2.0, abs=2e-4)
        assert rep.convention == "trace-ricci"

    def test_symmetries(self):
        rep = rm.curvature(sg.siegel_metric_field(2), sg.random_siegel_point(5, 2).chart())
        assert np.abs(rep.ricci - rep.ricci.T).max() <= 1e-6
        assert np.abs(rep.riemann + rep.riemann.transpose(0, 1, 3, 2)).max() <= 1e-8
        assert rep.gaussian is None

    def test_jacobi_constant(self):
        for A in (1.0, 2.0):
            g = jc.jacobi_metric_field(1, 1, jc.JacobiMetricParams(A, 5.0))
            s = [rm.curvature(g, jc.random_siegel_jacobi_point(k, 1, 1).chart()).scalar for k in range(4)]
            np.testing.assert_allclose(s, -3.0 / A, atol=1e-3)

    def test_scalar_constant_along_geodesic(self):
        g = jc.jacobi_metric_field(1, 1, jc.JacobiMetricParams(1.0, 3.0))
        p = rm.geodesic_integrate(g, jc.random_siegel_jacobi_point(2, 1, 1).chart(), [0.3, 0.2, -0.5, 0.4])
        s = [rm.curvature(g, x).scalar for x in p.points[::64]]
        assert max(s) - min(s) <= 1e-3

    def test_json(self):
        obj = rm.curvature(POINCARE, [0.0, 1.0]).to_json()
        assert {"scalar", "convention", "ricci", "einstein_constant", "einstein_residual", "gaussian"} <= set(obj)


class TestLaplaceBeltrami:
    def test_euclidean(self):
        assert rm.laplace_beltrami(rm.euclidean_field(2), lambda x: x[0] ** 2, [0.3, 0.4]) == pytest.approx(2.0, abs=1e-7)

    def test_poincare(self):
        for y in (0.5, 2.0):
            v = rm.laplace_beltrami(POINCARE, lambda x: x[1] ** 2, [0.1, y])
            assert v == pytest.approx(2 * y * y, rel=1e-7)


class TestKahler:
    def test_euclidean(self):
        c, d = rm.kahler_check(rm.euclidean_field(2), [0.0, 0.0])
        assert c == 0.0 and d == 0.0

    def test_poincare(self):
        c, d = rm.kahler_check(POINCARE, [0.2, 1.3])
        assert c <= 1e-6 and d <= 1e-6

    def test_jacobi(self):
        g = jc.jacobi_metric_field(1, 1, jc.JacobiMetricParams(2.0, 5.0))
        c, d = rm.kahler_check(g, jc.random_siegel_jacobi_point(4, 1, 1).chart())
        assert c <= 1e-4 and d <= 1e-4

    def test_detects_non_closed(self):
        g = rm.MetricField(4, conformal_u, complex_pairs=((0, 1), (2, 3)))
        c, d = rm.kahler_check(g, [0.0, 0.0, 0.3, 0.0])
        assert c <= 1e-14 and d == pytest.approx(math.exp(0.3), rel=1e-6)

    def test_complex_structure_squares_to_minus_one(self):
        J = rm.complex_structure(4, ((0, 1), (2, 3)))
        np.testing.assert_array_equal(J @ J, -np.eye(4))
        with pytest.raises(ValueError):
            rm.kahler_check(rm.MetricField(3, lambda X: np.broadcast_to(np.eye(3), (len(X), 3, 3)).copy()),
                            [0.0, 0.0, 0.0])
