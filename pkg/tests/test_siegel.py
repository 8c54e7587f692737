import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sjlab import riemann as rm
from sjlab import siegel as sg
from sjlab.errors import DistanceOutOfRange, InvariantViolation, NormalizationViolated
from sjlab.numerics import FDConfig, cholesky, fd_jacobian, fd_partial

PUSH = FDConfig(h=1e-5)


def point(z):
    return sg.SiegelPoint.from_omega(np.atleast_2d(z))


class TestPoint:
    def test_rejects_asymmetric(self):
        with pytest.raises(InvariantViolation):
            sg.SiegelPoint(np.array([[0, 1.0], [0, 0]]), np.eye(2))

    def test_rejects_indefinite(self):
        with pytest.raises(InvariantViolation, match="positive definite"):
            sg.SiegelPoint(np.zeros((2, 2)), np.diag([1.0, -1.0]))

    def test_chart_roundtrip(self):
        w = sg.random_siegel_point(1, 3)
        x = w.chart()
        assert x.size == sg.chart_dim(3) == 12
        v = sg.SiegelPoint.from_chart(3, x)
        np.testing.assert_array_equal(v.omega, w.omega)

    def test_json_roundtrip(self):
        w = sg.random_siegel_point(2, 2)
        v = sg.SiegelPoint.from_json(w.to_json())
        np.testing.assert_array_equal(v.omega, w.omega)
        with pytest.raises(InvariantViolation):
            sg.SiegelPoint.from_json({"n": 3, **{k: w.to_json()[k] for k in ("X", "Y")}})


class TestSymplectic:
    def test_rejects_non_symplectic(self):
        with pytest.raises(InvariantViolation):
            sg.SymplecticElement(np.diag([2.0, 1.0]))

    def test_seed_stability(self):
        a, b = sg.random_symplectic(17, 2), sg.random_symplectic(17, 2)
        np.testing.assert_array_equal(a.M, b.M)

    def test_residual_and_cone_on_draws(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            n = int(rng.integers(1, 4))
            assert sg.random_symplectic(rng, n).residual() <= 1e-10
            cholesky(sg.random_siegel_point(rng, n).Y)

    def test_json_roundtrip(self):
        M = sg.random_symplectic(4, 2)
        np.testing.assert_array_equal(sg.SymplecticElement.from_json(M.to_json()).M, M.M)


class TestAction:
    def test_translation(self):
        B0 = np.array([[0.3, -0.1], [-0.1, 0.7]])
        w = sg.random_siegel_point(3, 2)
        np.testing.assert_allclose(sg.sp_act(sg.SymplecticElement.translation(B0), w).omega,
                                   w.omega + B0, atol=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_J_fixes_iI(self, n):
        w = sg.sp_act(sg.SymplecticElement.J(n), sg.SiegelPoint.identity(n))
        np.testing.assert_allclose(w.omega, 1j * np.eye(n), atol=1e-14)

    def test_identity_exact(self):
        w = sg.random_siegel_point(5, 3)
        np.testing.assert_array_equal(sg.sp_act(sg.SymplecticElement.identity(3), w).omega, w.omega)

    def test_random_outputs_valid_and_compatible(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n = int(rng.integers(1, 4))
            M1, M2 = sg.random_symplectic(rng, n), sg.random_symplectic(rng, n)
            w = sg.random_siegel_point(rng, n)
            a = sg.sp_act(M1 @ M2, w)
            b = sg.sp_act(M1, sg.sp_act(M2, w))
            assert np.abs(a.omega - b.omega).max() <= 1e-9 * max(1.0, np.abs(a.omega).max())

    def test_degree_mismatch(self):
        with pytest.raises(InvariantViolation):
            sg.sp_act(sg.SymplecticElement.J(2), sg.SiegelPoint.identity(1))


class TestWirtinger:
    def test_x(self):
        D, Db = sg.wirtinger_matrix_apply(lambda w: w.X[0, 0], point(0.3 + 2j))
        assert D[0, 0] == pytest.approx(0.5) and Db[0, 0] == pytest.approx(0.5)

    def test_y(self):
        D, Db = sg.wirtinger_matrix_apply(lambda w: w.Y[0, 0], point(0.3 + 2j))
        assert D[0, 0] == pytest.approx(1 / 2j) and Db[0, 0] == pytest.approx(-1 / 2j)

    def test_det_y(self):
        w = sg.SiegelPoint(np.array([[0.1, 0.2], [0.2, -0.3]]), np.array([[2.0, 0.5], [0.5, 1.0]]))
        D, Db = sg.wirtinger_matrix_apply(lambda q: np.linalg.det(q.Y), w)
        # d det Y = det Y tr(Y^-1 dY) and d/dOmega = (1/2i) d/dY on Y-only functions
        expected = 0.5 * np.linalg.det(w.Y) * np.linalg.inv(w.Y)
        np.testing.assert_allclose(D.imag, -expected, atol=1e-9)
        np.testing.assert_allclose(D.real, 0, atol=1e-9)
        np.testing.assert_allclose(Db, D.conj(), atol=1e-12)

    def test_differential_identity(self):
        # real f: df(t) = 2 Re tr(dOmega D f)
        w = sg.random_siegel_point(8, 2)
        f = lambda q: float(np.trace(q.X @ q.Y) + np.linalg.det(q.Y))
        D, _ = sg.wirtinger_matrix_apply(f, w)
        t = sg.SiegelTangent(np.array([[1.0, 0.4], [0.4, -0.2]]), np.array([[0.3, -0.5], [-0.5, 0.1]]))
        df = fd_partial(lambda s: f(sg.SiegelPoint.from_chart(2, w.chart() + s[0] * t.chart())),
                        np.zeros(1), 0)
        assert 2 * np.trace(t.d_omega @ D).real == pytest.approx(df, abs=1e-8)


class TestMetric:
    def test_poincare_quadratic(self):
        for A in (1.0, 2.5):
            q = sg.siegel_metric_quadratic(point(0.4 + 3j), sg.SiegelTangent([[1.0]], [[0.0]]),
                                           sg.SiegelMetricParams(A))
            assert q == pytest.approx(A / 9.0, rel=1e-14)

    def test_identity_E11(self):
        n = 3
        E = np.zeros((n, n))
        E[0, 0] = 1
        q = sg.siegel_metric_quadratic(sg.SiegelPoint.identity(n), sg.SiegelTangent(E, 0 * E),
                                       sg.SiegelMetricParams(2.0))
        assert q == pytest.approx(2.0)

    def test_poincare_tensor(self):
        g = sg.metric_tensor_siegel(point(-1 + 0.5j), sg.SiegelMetricParams(3.0))
        np.testing.assert_allclose(g, 12.0 * np.eye(2), rtol=1e-14)

    def test_polarization_and_pd(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            n = int(rng.integers(1, 4))
            w = sg.random_siegel_point(rng, n)
            g = sg.metric_tensor_siegel(w)
            cholesky(g)
            v = rng.normal(size=sg.chart_dim(n))
            q = sg.siegel_metric_quadratic(w, sg.SiegelTangent.from_chart(n, v))
            assert v @ g @ v == pytest.approx(q, rel=1e-10, abs=1e-12)

    def test_pushforward_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = int(rng.integers(1, 3))
            M, w = sg.random_symplectic(rng, n), sg.random_siegel_point(rng, n)
            v = rng.normal(size=sg.chart_dim(n))
            J = fd_jacobian(sg.chart_action(M), w.chart(), PUSH)
            lhs = sg.siegel_metric_quadratic(sg.sp_act(M, w), sg.SiegelTangent.from_chart(n, J @ v))
            rhs = sg.siegel_metric_quadratic(w, sg.SiegelTangent.from_chart(n, v))
            assert lhs == pytest.approx(rhs, rel=1e-6)


class TestLaplacian:
    def test_constant(self):
        w = sg.random_siegel_point(0, 2)
        assert sg.siegel_laplacian_apply(lambda q: 3.0, w) == 0.0

    def test_y_squared(self):
        assert sg.siegel_laplacian_apply(lambda q: q.Y[0, 0] ** 2, point(1j)) == pytest.approx(2.0, abs=1e-6)

    @pytest.mark.parametrize("s", [1.5, 2.0, 2.5])
    def test_eigenfunctions(self, s):
        rng = np.random.default_rng(10)
        for _ in range(10):
            w = sg.random_siegel_point(rng, 1)
            f = sg.y_power(s)
            assert sg.siegel_laplacian_apply(f, w) / f(w) == pytest.approx(s * (s - 1), rel=1e-5)

    def test_parameter_scaling(self):
        w = sg.random_siegel_point(2, 2)
        f = sg.siegel_test_fields(2)["gauss_y"]
        a = sg.siegel_laplacian_apply(f, w, sg.SiegelMetricParams(1.0))
        b = sg.siegel_laplacian_apply(f, w, sg.SiegelMetricParams(4.0))
        assert b == pytest.approx(a / 4.0, rel=1e-12)

    def test_matches_laplace_beltrami(self):
        for n in (1, 2):
            w = sg.random_siegel_point(20 + n, n)
            g = sg.siegel_metric_field(n)
            for name, f in sg.siegel_test_fields(n).items():
                a = sg.siegel_laplacian_apply(f, w)
                b = rm.laplace_beltrami(g, lambda x: f(sg.SiegelPoint.from_chart(n, x)), w.chart())
                assert abs(a - b) <= 1e-4 * max(1.0, abs(b)), name

    def test_invariance(self):
        rng = np.random.default_rng(12)
        for k in range(20):
            n = 1 + k % 2
            M, w = sg.random_symplectic(rng, n), sg.random_siegel_point(rng, n)
            fields = list(sg.siegel_test_fields(n).values())
            f = fields[k % len(fields)]
            lhs = sg.siegel_laplacian_apply(lambda q: f(sg.sp_act(M, q)), w)
            rhs = sg.siegel_laplacian_apply(f, sg.sp_act(M, w))
            assert abs(lhs - rhs) <= 1e-4 * max(1.0, abs(rhs))

    def test_operator_fd_scaling(self):
        cfg = FDConfig()
        assert sg.operator_fd(cfg, np.eye(2)) is cfg
        big = sg.operator_fd(cfg, np.diag([50.0, 40.0]))
        assert big.h == pytest.approx(50 * cfg.h)
        # capped so the stencil stays inside the cone
        thin = sg.operator_fd(cfg, np.diag([50.0, 2e-3]))
        assert thin.h * 2 ** thin.richardson_levels <= 0.25 * 2e-3 + 1e-18 or thin is cfg


class TestVolume:
    def test_values(self):
        assert sg.volume_density(sg.SiegelPoint.identity(3)) == pytest.approx(1.0)
        assert sg.volume_density(point(2j)) == pytest.approx(0.25)

    def test_invariance(self):
        rng = np.random.default_rng(13)
        for k in range(50):
            n = 1 + k % 2
            M, w = sg.random_symplectic(rng, n), sg.random_siegel_point(rng, n)
            J = fd_jacobian(sg.chart_action(M), w.chart(), PUSH)
            lhs = sg.volume_density(sg.sp_act(M, w)) * abs(np.linalg.det(J))
            assert lhs == pytest.approx(sg.volume_density(w), rel=1e-5)


class TestCrossRatio:
    def test_coincident(self):
        w = sg.random_siegel_point(3, 2)
        np.testing.assert_allclose(sg.cross_ratio(w, w), 0, atol=1e-15)

    def test_i_2i(self):
        assert sg.cross_ratio(point(1j), point(2j))[0, 0] == pytest.approx(1 / 9)

    def test_normalized_similar(self):
        a, b = sg.random_siegel_point(1, 3), sg.random_siegel_point(2, 3)
        R, Rn = sg.cross_ratio(a, b), sg.normalized_cross_ratio(a, b)
        assert np.trace(Rn) == pytest.approx(np.trace(R), abs=1e-12)
        assert np.linalg.norm(Rn, 2) < 1


class TestDistance:
    def test_zero(self):
        w = sg.random_siegel_point(4, 3)
        assert sg.siegel_distance(w, w) == 0.0

    def test_log2(self):
        assert sg.siegel_distance(point(1j), point(2j)) == pytest.approx(math.log(2), abs=1e-12)

    def test_special_pair(self):
        d = sg.siegel_distance(sg.SiegelPoint.identity(2), point(1j * math.exp(1 / math.sqrt(2)) * np.eye(2)))
        assert d == pytest.approx(1.0, abs=1e-12)

    def test_poincare_forms(self):
        assert sg.poincare_distance(point(1j), point(1j)) == 0.0
        assert math.cosh(sg.poincare_distance(point(1j), point(2j))) == pytest.approx(1.25)
        rng = np.random.default_rng(14)
        for _ in range(100):
            a, b = sg.random_siegel_point(rng, 1), sg.random_siegel_point(rng, 1)
            forms = sg.poincare_distance_forms(a, b)
            assert max(forms) - min(forms) <= 1e-12 * max(1.0, max(forms))
            assert sg.siegel_distance(a, b) == pytest.approx(forms[1], abs=1e-9)

    def test_far_points_rejected(self):
        with pytest.raises(DistanceOutOfRange):
            sg.siegel_distance(point(1j), point(1e12j))

    def test_symmetric_and_invariant(self):
        rng = np.random.default_rng(15)
        for _ in range(30):
            n = int(rng.integers(1, 4))
            a, b, M = sg.random_siegel_point(rng, n), sg.random_siegel_point(rng, n), sg.random_symplectic(rng, n)
            d = sg.siegel_distance(a, b)
            assert sg.siegel_distance(b, a) == pytest.approx(d, abs=1e-10)
            assert sg.siegel_distance(sg.sp_act(M, a), sg.sp_act(M, b)) == pytest.approx(d, abs=1e-8)


class TestSpecialGeodesic:
    def test_endpoints(self):
        a = np.array([math.e])
        np.testing.assert_allclose(sg.special_geodesic(a, 0).omega, [[1j]])
        np.testing.assert_allclose(sg.special_geodesic(a, 1).omega, [[1j * math.e]])
        assert sg.siegel_distance(sg.special_geodesic(a, 0), sg.special_geodesic(a, 1)) == pytest.approx(1.0)

    def test_normalization(self):
        with pytest.raises(NormalizationViolated):
            sg.special_geodesic([2.0, 3.0], 0.5)

    def test_unit_speed(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            n = int(rng.integers(1, 4))
            a = sg.random_unit_logs(rng, n)
            for t in (-1.0, 0.0, 2.0):
                v = fd_partial(lambda s: sg.special_geodesic(a, s[0]).chart(), np.array([t]), 0)
                q = sg.siegel_metric_quadratic(sg.special_geodesic(a, t), sg.SiegelTangent.from_chart(n, v))
                assert q == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.2, 5), st.floats(-3, 3), st.floats(0.2, 5))
def test_distance_matches_poincare(x1, y1, x2, y2):
    a, b = point(x1 + 1j * y1), point(x2 + 1j * y2)
    try:
        d = sg.siegel_distance(a, b)
    except DistanceOutOfRange:
        return
    assert d == pytest.approx(sg.poincare_distance(a, b), abs=1e-9)
