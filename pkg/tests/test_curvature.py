import math

import numpy as np
import pytest

from finslerlab import (
    DegenerateFlagError,
    einstein_classify,
    flag_curvature,
    fundamental_tensor,
    make_metric,
    ricci_scalar,
    ricci_tensor,
    riemann_curvature,
    scalar_curvature_residual,
)
from finslerlab.geodesics import _spray_values


def fd_riemann(S, x, y):
    """R^i_k from central differences of the spray, one Richardson halving.

    Fully independent of the jet engine: only the closed-form spray values
    are consumed.
    """
    n = S.dimension
    x = np.asarray(x, float)
    y = np.asarray(y, float)

    def G(xx, yy):
        return _spray_values(S, xx, yy)

    def d_x(k, h=1e-3):
        e = np.zeros(n)
        e[k] = 1.0

        def at(hh):
            return (G(x + hh * e, y) - G(x - hh * e, y)) / (2.0 * hh)

        return (4.0 * at(h / 2.0) - at(h)) / 3.0

    def d_y(k, h=1e-3):
        e = np.zeros(n)
        e[k] = 1.0

        def at(hh):
            return (G(x, y + hh * e) - G(x, y - hh * e)) / (2.0 * hh)

        return (4.0 * at(h / 2.0) - at(h)) / 3.0

    def second(outer_in_x, k, j, h=2e-3):
        ek = np.zeros(n)
        ek[k] = 1.0
        ej = np.zeros(n)
        ej[j] = 1.0

        def gy(xx, yy, hh):
            return (G(xx, yy + hh * ek) - G(xx, yy - hh * ek)) / (2.0 * hh)

        def mixed(hh):
            if outer_in_x:
                return (gy(x + hh * ej, y, hh) - gy(x - hh * ej, y, hh)) / (2.0 * hh)
            return (gy(x, y + hh * ej, hh) - gy(x, y - hh * ej, hh)) / (2.0 * hh)

        return (4.0 * mixed(h / 2.0) - mixed(h)) / 3.0

    G0 = G(x, y)
    Gx = np.stack([d_x(k) for k in range(n)], axis=1)
    Gy = np.stack([d_y(k) for k in range(n)], axis=1)
    R = 2.0 * Gx
    for i in range(n):
        for k in range(n):
            for j in range(n):
                R[i, k] -= y[j] * second(True, k, j)[i]
                R[i, k] += 2.0 * G0[j] * second(False, k, j)[i]
                R[i, k] -= Gy[i, j] * Gy[j, k]
    return R


def curved_config():
    zero = [[0.0, 0, 0]]
    g11 = [[1.0, 0, 0], [0.3, 0, 2]]
    g22 = [[1.0, 0, 0], [0.3, 2, 0]]
    return {
        "family": "riemannian",
        "dimension": 2,
        "riemannian": {"metric": [[g11, zero], [zero, g22]]},
    }


class TestRiemann:
    def test_euclidean_flat(self, euclid2):
        R = riemann_curvature(euclid2, [0.2, -0.4], [0.3, 1.0])
        assert np.max(np.abs(R.matrix)) <= 1e-12

    def test_klein_center_closed_form(self, klein2):
        y = np.array([0.6, 0.8])
        R = riemann_curvature(klein2, [0.0, 0.0], y)
        want = np.outer(y, y) - float(y @ y) * np.eye(2)
        assert np.max(np.abs(R.matrix - want)) <= 1e-12

    def test_flagpole_annihilation(self, klein2, funk2, klein3):
        rng = np.random.default_rng(1)
        for S in (klein2, funk2, klein3):
            for _ in range(20):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                R = riemann_curvature(S, x, y)
                scale = float(np.max(np.abs(R.matrix))) * float(np.max(np.abs(y)))
                assert R.flagpole_residual() <= 1e-6 * max(scale, 1e-30)

    def test_two_homogeneity(self, klein2, funk2):
        rng = np.random.default_rng(2)
        for S in (klein2, funk2):
            for _ in range(10):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                R1 = riemann_curvature(S, x, y).matrix
                R2 = riemann_curvature(S, x, 2.0 * y).matrix
                scale = max(1.0, float(np.max(np.abs(R2))))
                assert np.max(np.abs(R2 - 4.0 * R1)) <= 1e-9 * scale

    def test_finite_difference_oracle_spots(self, klein2, funk2, klein3):
        rng = np.random.default_rng(3)
        spots = []
        for S in (klein2, funk2, klein3):
            spots.append((S, S.sample_point(rng, 0.6), S.sample_direction(rng)))
        spots.append((klein2, np.array([0.3, -0.2]), np.array([1.0, 0.5])))
        spots.append((funk2, np.array([-0.1, 0.4]), np.array([0.5, -1.0])))
        for S, x, y in spots:
            R_fd = fd_riemann(S, x, y)
            R_jet = riemann_curvature(S, x, y).matrix
            scale = max(1.0, float(np.max(np.abs(R_jet))))
            assert np.max(np.abs(R_fd - R_jet)) <= 1e-4 * scale

    def test_fast_and_generic_routes_agree(self, klein2, funk2):
        rng = np.random.default_rng(4)
        for S in (klein2, funk2):
            for _ in range(5):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                fast = riemann_curvature(S, x, y, via="fast").matrix
                generic = riemann_curvature(S, x, y, via="f2").matrix
                scale = max(1.0, float(np.max(np.abs(fast))))
                assert np.max(np.abs(fast - generic)) <= 1e-8 * scale


class TestFlag:
    def test_euclidean_zero(self, euclid2):
        assert flag_curvature(euclid2, [0.1, 0.1], [1.0, 0.0], [0.0, 1.0]) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_klein_constant_minus_one(self, klein2, klein3):
        rng = np.random.default_rng(5)
        for S in (klein2, klein3):
            for _ in range(100):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                u = S.sample_direction(rng)
                if abs(float(u @ y)) > 0.99 * float(np.linalg.norm(u) * np.linalg.norm(y)):
                    continue
                assert flag_curvature(S, x, y, u) == pytest.approx(-1.0, abs=1e-5)

    def test_funk_constant_minus_quarter(self, funk2):
        rng = np.random.default_rng(6)
        for _ in range(100):
            x = funk2.sample_point(rng)
            y = funk2.sample_direction(rng)
            u = funk2.sample_direction(rng)
            if abs(float(u @ y)) > 0.99 * float(np.linalg.norm(u) * np.linalg.norm(y)):
                continue
            assert flag_curvature(funk2, x, y, u) == pytest.approx(-0.25, abs=1e-4)

    def test_flag_invariance(self, klein2, funk2):
        rng = np.random.default_rng(7)
        for S in (klein2, funk2):
            for _ in range(10):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                u = S.sample_direction(rng)
                if abs(float(u @ y)) > 0.9:
                    continue
                base = flag_curvature(S, x, y, u)
                assert abs(flag_curvature(S, x, y, u + 0.7 * y) - base) <= 1e-8
                assert abs(flag_curvature(S, x, y, 2.5 * u) - base) <= 1e-8

    def test_degenerate_flag_rejected(self, klein2):
        with pytest.raises(DegenerateFlagError):
            flag_curvature(klein2, [0.1, 0.2], [1.0, 0.5], [2.0, 1.0])


class TestRicci:
    def test_euclidean_zero(self, euclid2):
        data = ricci_tensor(euclid2, [0.1, -0.2], [0.7, 0.3])
        assert abs(data.ric) <= 1e-12
        assert np.max(np.abs(data.ric_tensor)) <= 1e-12

    def test_klein_scalar_values(self, klein2, klein3):
        rng = np.random.default_rng(8)
        for S, want in ((klein2, -1.0), (klein3, -2.0)):
            for _ in range(10):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                assert ricci_scalar(S, x, y) == pytest.approx(want, abs=1e-5)

    def test_zero_homogeneity_of_scalar(self, klein2, funk2):
        rng = np.random.default_rng(9)
        for S in (klein2, funk2):
            x = S.sample_point(rng)
            y = S.sample_direction(rng)
            a = ricci_scalar(S, x, y)
            b = ricci_scalar(S, x, 3.0 * y)
            assert abs(a - b) <= 1e-9 * max(1.0, abs(a))

    def test_klein_tensor_center(self, klein2):
        data = ricci_tensor(klein2, [0.0, 0.0], [1.0, 0.0])
        assert np.max(np.abs(data.ric_tensor + np.eye(2))) <= 1e-4

    def test_tensor_proportional_to_g(self, klein2, klein3, funk2):
        rng = np.random.default_rng(10)
        for S, lam in ((klein2, -1.0), (klein3, -2.0), (funk2, -0.25)):
            for _ in range(5):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                data = ricci_tensor(S, x, y)
                g = fundamental_tensor(S, x, y).g
                resid = np.max(np.abs(data.ric_tensor - lam * g)) / np.max(np.abs(g))
                assert resid <= 1e-4
                assert np.max(np.abs(data.ric_tensor - data.ric_tensor.T)) <= 1e-12

    def test_scalar_matches_trace_route(self, klein2, funk2):
        rng = np.random.default_rng(11)
        for S in (klein2, funk2):
            for _ in range(5):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                via_tensor = ricci_tensor(S, x, y).ric
                via_trace = ricci_scalar(S, x, y)
                assert abs(via_tensor - via_trace) <= 1e-6 * max(1.0, abs(via_trace))

    def test_tensor_contraction_equals_trace(self, klein2, funk2, klein3):
        # Ric_ij y^i y^j = R^k_k follows from 2-homogeneity of the trace;
        # the projective module leans on this equivalence when it evaluates
        # the geodesic coefficient through the cheaper scalar route.
        rng = np.random.default_rng(12)
        for S in (klein2, funk2, klein3):
            for _ in range(5):
                x = S.sample_point(rng)
                y = S.sample_direction(rng)
                data = ricci_tensor(S, x, y)
                quadform = float(y @ data.ric_tensor @ y)
                trace = data.ric * float(S.F2(x, y))
                assert abs(quadform - trace) <= 1e-9 * max(1.0, abs(trace))


class TestScalarShape:
    def test_euclidean_zero_lambda(self, euclid2):
        assert scalar_curvature_residual(euclid2, [0.1, 0.0], [1.0, 0.2], 0.0) <= 1e-12

    def test_klein_matching_lambda(self, klein2):
        rng = np.random.default_rng(13)
        for _ in range(10):
            x = klein2.sample_point(rng)
            y = klein2.sample_direction(rng)
            assert scalar_curvature_residual(klein2, x, y, -1.0) <= 1e-5

    def test_funk_matching_lambda(self, funk2):
        rng = np.random.default_rng(14)
        for _ in range(10):
            x = funk2.sample_point(rng)
            y = funk2.sample_direction(rng)
            assert scalar_curvature_residual(funk2, x, y, -0.25) <= 1e-4

    def test_wrong_lambda_detected(self, klein2):
        resid = scalar_curvature_residual(klein2, [0.3, -0.1], [1.0, 0.4], 1.0)
        assert resid >= 0.1


class TestEinsteinClassify:
    def test_klein2(self, klein2):
        report = einstein_classify(klein2, x_samples=8, seed=0)
        assert report.is_einstein
        assert report.fit_factor == pytest.approx(-1.0, abs=1e-4)
        assert report.einstein_constant_c == pytest.approx(1.0, abs=1e-4)
        assert report.flag_constant == pytest.approx(-1.0, abs=1e-4)

    def test_klein3(self, klein3):
        report = einstein_classify(klein3, x_samples=6, seed=0)
        assert report.is_einstein
        assert report.einstein_constant_c == pytest.approx(math.sqrt(2.0), abs=1e-4)

    def test_funk2(self, funk2):
        report = einstein_classify(funk2, x_samples=8, seed=0)
        assert report.is_einstein
        assert report.fit_factor == pytest.approx(-0.25, abs=1e-3)
        assert report.einstein_constant_c == pytest.approx(0.5, abs=1e-3)

    def test_euclid_flat_no_constant(self, euclid2):
        report = einstein_classify(euclid2, x_samples=4, seed=0)
        assert report.is_einstein
        assert report.einstein_constant_c is None
        assert abs(report.ric_mean) <= 1e-10

    def test_curved_riemannian_no_constant(self):
        S = make_metric(curved_config())
        report = einstein_classify(S, x_samples=6, seed=0)
        # two-dimensional Riemannian metrics always have y-independent Ricci,
        # but the factor varies with x, so no Einstein normal form is reported
        assert report.is_einstein
        assert report.einstein_constant_c is None
        assert report.ric_x_spread > 1e-3

    def test_report_serializes(self, klein2):
        doc = einstein_classify(klein2, x_samples=4, seed=0).to_dict()
        assert doc["family"] == "klein_ball"
        assert doc["seed"] == 0
