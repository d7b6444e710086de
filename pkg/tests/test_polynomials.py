"""Tests for the polynomial engine: arithmetic, Sylvester resultants by
FFT evaluation-interpolation, and the Aberth root finder."""

import numpy as np
import pytest
from numpy.polynomial import polynomial as npp

from arclink.errors import (
    ConditioningError,
    DomainError,
    ZeroResultantError,
)
from arclink.polynomials import (
    BivariatePoly,
    UnivariatePoly,
    aberth_roots,
    coeffs_in_second_var,
    evaluate_matrix,
    fft_evaluation_interpolation,
    newton_polish,
    real_positive_roots,
    sylvester_matrix,
    sylvester_resultant,
)


class TestUnivariate:
    def test_trailing_trim(self):
        p = UnivariatePoly(np.array([1.0, 2.0, 1e-20]))
        assert p.degree == 1
        assert p.coeffs.tolist() == [1.0, 2.0]

    def test_zero_poly(self):
        z = UnivariatePoly(np.zeros(5))
        assert z.is_zero and z.degree == 0

    def test_arithmetic_matches_pointwise(self, rng):
        for _ in range(50):
            a = UnivariatePoly(rng.normal(size=rng.integers(1, 7)))
            b = UnivariatePoly(rng.normal(size=rng.integers(1, 7)))
            x = rng.normal(size=8)
            np.testing.assert_allclose((a + b)(x), a(x) + b(x), rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose((a - b)(x), a(x) - b(x), rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose((a * b)(x), a(x) * b(x), rtol=1e-10, atol=1e-10)
            np.testing.assert_allclose((2.5 * a)(x), 2.5 * a(x), rtol=1e-12)

    def test_derivative(self):
        p = UnivariatePoly(np.array([1.0, -3.0, 0.0, 2.0]))  # 1 - 3x + 2x^3
        assert p.derivative().coeffs.tolist() == [-3.0, 0.0, 6.0]
        assert UnivariatePoly.constant(4.0).derivative().is_zero


class TestBivariate:
    def test_arithmetic_matches_pointwise(self, rng):
        for _ in range(50):
            a = BivariatePoly(rng.normal(size=(rng.integers(1, 5), rng.integers(1, 5))))
            b = BivariatePoly(rng.normal(size=(rng.integers(1, 5), rng.integers(1, 5))))
            x, y = rng.normal(size=6), rng.normal(size=6)
            np.testing.assert_allclose((a + b)(x, y), a(x, y) + b(x, y), atol=1e-12)
            np.testing.assert_allclose((a - b)(x, y), a(x, y) - b(x, y), atol=1e-12)
            np.testing.assert_allclose(
                (a * b)(x, y), a(x, y) * b(x, y), rtol=1e-10, atol=1e-10
            )

    def test_total_degree(self):
        p = BivariatePoly.x() * BivariatePoly.y() + 3.0  # xy + 3
        assert p.total_degree == 2
        assert p.degree_x == 1 and p.degree_y == 1

    def test_coeffs_in_second_var_reconstructs(self, rng):
        p = BivariatePoly(rng.normal(size=(4, 3)))
        a = coeffs_in_second_var(p)
        x, y = rng.normal(size=5), rng.normal(size=5)
        rebuilt = sum(a[j](x) * y**j for j in range(len(a)))
        np.testing.assert_allclose(rebuilt, p(x, y), rtol=1e-12)


class TestFFTInterpolation:
    """Pins the node/transform convention on matrices with known dets."""

    def test_one_by_one_identity(self):
        p = UnivariatePoly(np.array([3.0, -1.0, 0.5, 2.0]))
        out = fft_evaluation_interpolation([[p]], n_points=8)
        np.testing.assert_allclose(out.coeffs, p.coeffs, atol=1e-13)

    def test_two_by_two(self):
        # det [[x, 1], [1, x]] = x^2 - 1
        x = UnivariatePoly(np.array([0.0, 1.0]))
        one = UnivariatePoly.constant(1.0)
        out = fft_evaluation_interpolation([[x, one], [one, x]], n_points=8)
        np.testing.assert_allclose(out.coeffs, [-1.0, 0.0, 1.0], atol=1e-13)

    def test_random_matrix_against_direct_det(self, rng):
        for _ in range(20):
            size = int(rng.integers(2, 5))
            S = [
                [UnivariatePoly(rng.normal(size=rng.integers(1, 3))) for _ in range(size)]
                for _ in range(size)
            ]
            out = fft_evaluation_interpolation(S, n_points=16)
            for x0 in rng.normal(size=4):
                direct = np.linalg.det(evaluate_matrix(S, x0))
                assert abs(out(x0) - direct) < 1e-9 * max(1.0, abs(direct)), (
                    f"interpolated det {out(x0)} != direct {direct} at x={x0}"
                )

    def test_steeply_graded_columns_still_interpolate(self, rng):
        """Column scaling alone must not trip the zero screen: the
        determinant of a well-conditioned matrix with columns scaled over
        24 orders of magnitude is tiny against the raw Hadamard bound but
        perfectly recoverable."""
        size = 4
        base = [
            [UnivariatePoly(rng.normal(size=2) + 0.5) for _ in range(size)]
            for _ in range(size)
        ]
        reference = fft_evaluation_interpolation(base, n_points=16)
        factors = [10.0 ** (-8 * j) for j in range(size)]
        graded = [
            [base[i][j] * factors[j] for j in range(size)] for i in range(size)
        ]
        out = fft_evaluation_interpolation(graded, n_points=16)
        total = np.prod(factors)
        np.testing.assert_allclose(
            out.coeffs, reference.coeffs * total, rtol=1e-9,
            atol=1e-9 * abs(total) * np.max(np.abs(reference.coeffs)))

    def test_rejects_bad_point_counts(self):
        p = [[UnivariatePoly.constant(1.0)]]
        with pytest.raises(DomainError):
            fft_evaluation_interpolation(p, n_points=12)
        with pytest.raises(DomainError):
            fft_evaluation_interpolation(p, n_points=8, degree_bound=8)

    def test_degree_bound_violation_raises(self):
        # det = x^2 - 1 genuinely exceeds a claimed bound of 1
        x = UnivariatePoly(np.array([0.0, 1.0]))
        one = UnivariatePoly.constant(1.0)
        with pytest.raises(ConditioningError):
            fft_evaluation_interpolation([[x, one], [one, x]], n_points=8, degree_bound=1)


class TestSylvesterResultant:
    def test_textbook_pair(self):
        # p = y^2 - x, q = y - x  =>  Res_y = x^2 - x
        p = BivariatePoly(np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0]]))
        q = BivariatePoly(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        res = sylvester_resultant(p, q, n_points=8)
        np.testing.assert_allclose(res.coeffs, [0.0, -1.0, 1.0], atol=1e-12)

    def test_matrix_layout(self):
        p = BivariatePoly(np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0]]))
        q = BivariatePoly(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        S = sylvester_matrix(p, q)
        assert len(S) == 3
        # first column: y-coefficients of p descending from the top row
        assert S[0][0].coeffs.tolist() == [1.0]
        assert S[1][0].is_zero
        assert S[2][0].coeffs.tolist() == [0.0, -1.0]
        # remaining columns: q's coefficients, shifted one row per column
        assert S[0][1].coeffs.tolist() == [1.0]
        assert S[1][1].coeffs.tolist() == [0.0, -1.0]
        assert S[1][2].coeffs.tolist() == [1.0]
        assert S[2][2].coeffs.tolist() == [0.0, -1.0]

    def test_product_over_roots_identity(self, rng):
        """Res(x0) = (-1)^{mn} lc_q(x0)^m prod_i p(x0, beta_i) over q's roots."""
        for _ in range(25):
            m, n = int(rng.integers(2, 5)), int(rng.integers(1, 4))
            pc = rng.uniform(0.5, 1.5, size=(3, m + 1)) * rng.choice([-1, 1], size=(3, m + 1))
            qc = rng.uniform(0.5, 1.5, size=(2, n + 1)) * rng.choice([-1, 1], size=(2, n + 1))
            p, q = BivariatePoly(pc), BivariatePoly(qc)
            res = sylvester_resultant(p, q, n_points=32)
            for x0 in rng.uniform(-1.5, 1.5, size=3):
                qy = np.array([UnivariatePoly(qc[:, j])(x0) for j in range(n + 1)])
                beta = npp.polyroots(qy)
                oracle = (-1.0) ** (m * n) * qy[-1] ** m * np.prod(p(x0, beta))
                assert abs(res(x0) - oracle.real) < 1e-8 * max(1.0, abs(oracle)), (
                    f"resultant {res(x0)} vs product-over-roots {oracle} at x={x0}"
                )

    def test_common_factor_gives_zero_resultant(self):
        # p = (y - x)(y + 1), q = (y - x)(y - 2) share a root curve
        y_minus_x = BivariatePoly(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        p = y_minus_x * BivariatePoly(np.array([[1.0, 1.0]]))
        q = y_minus_x * BivariatePoly(np.array([[-2.0, 1.0]]))
        with pytest.raises(ZeroResultantError):
            sylvester_resultant(p, q, n_points=16)

    def test_rejects_degenerate_degrees(self):
        p = BivariatePoly(np.array([[1.0], [1.0]]))  # no y dependence
        q = BivariatePoly(np.array([[0.0, 1.0]]))
        with pytest.raises(DomainError):
            sylvester_matrix(p, q)


class TestAberth:
    def test_known_real_roots(self):
        p = UnivariatePoly(npp.polyfromroots([1.0, 2.0, 3.0]))
        z = np.sort(aberth_roots(p).real)
        np.testing.assert_allclose(z, [1.0, 2.0, 3.0], rtol=1e-12)

    def test_degree_twenty_random_roots(self, rng):
        for _ in range(10):
            true = rng.uniform(0.2, 3.0, size=10) * rng.choice([-1, 1], size=10)
            true = np.concatenate([true, rng.normal(size=5) + 1j * rng.uniform(0.3, 2.0, size=5)])
            true = np.concatenate([true, np.conj(true[10:])])
            coeffs = npp.polyfromroots(true)
            assert np.max(np.abs(coeffs.imag)) < 1e-9 * np.max(np.abs(coeffs.real))
            z = aberth_roots(UnivariatePoly(coeffs.real))
            got = np.sort_complex(np.round(z, 7))
            want = np.sort_complex(np.round(true, 7))
            np.testing.assert_allclose(got, want, atol=1e-6)

    def test_wide_magnitude_spread(self):
        p = UnivariatePoly(npp.polyfromroots([1e-3, 1e3]))
        z = np.sort(aberth_roots(p).real)
        np.testing.assert_allclose(z, [1e-3, 1e3], rtol=1e-9)

    def test_double_root(self):
        # A double root converges to ~sqrt(eps) accuracy; both iterates must
        # land near it (they may or may not merge under the 1e-9 dedup).
        p = UnivariatePoly(npp.polyfromroots([2.0, 2.0, -1.0]))
        pos = real_positive_roots(aberth_roots(p))
        assert 1 <= len(pos) <= 2
        assert np.max(np.abs(pos - 2.0)) < 1e-6, f"double root drifted: {pos}"

    def test_exact_zero_roots_deflate(self):
        # x^2 (x - 5)
        p = UnivariatePoly(np.array([0.0, 0.0, -5.0, 1.0]))
        z = aberth_roots(p)
        assert np.sum(np.abs(z) < 1e-12) == 2
        assert np.min(np.abs(z - 5.0)) < 1e-10

    def test_constant_has_no_roots(self):
        assert aberth_roots(UnivariatePoly.constant(7.0)).size == 0


class TestRealPositiveRoots:
    def test_filters_complex_and_negative(self):
        roots = np.array([1.5 + 1e-12j, -2.0, 0.5 + 0.3j, 0.5 - 0.3j, 3.0])
        out = real_positive_roots(roots)
        np.testing.assert_allclose(out, [1.5, 3.0])

    def test_real_tolerance_is_relative(self):
        roots = np.array([100.0 + 5e-5j])  # |Im| < 1e-6 * |Re|
        assert len(real_positive_roots(roots, real_tol=1e-6)) == 1
        assert len(real_positive_roots(np.array([1.0 + 5e-5j]), real_tol=1e-6)) == 0

    def test_dedup(self):
        roots = np.array([2.0, 2.0 + 1e-12, 2.0 + 1.0])
        out = real_positive_roots(roots)
        np.testing.assert_allclose(out, [2.0, 3.0])


class TestNewtonPolish:
    def test_square_root(self):
        f = lambda x: x * x - 2.0
        df = lambda x: 2.0 * x
        x = newton_polish(f, df, 1.4, steps=3)
        assert abs(x - np.sqrt(2.0)) < 1e-12

    def test_zero_derivative_bails(self):
        x = newton_polish(lambda x: x * x + 1.0, lambda x: 0.0, 3.0)
        assert x == 3.0
