import numpy as np
import pytest
from numpy.testing import assert_allclose

from emit_mimo.physics.specfun import (
    X_MIN,
    bessel_j,
    bessel_j_prime,
    bessel_y,
    bessel_y_prime,
    hankel1,
    hankel1_prime,
    hankel1_table,
)
from emit_mimo.utils.errors import DomainError
from emit_mimo.validation.oracles import specfun_errors, specfun_oracle

ORDERS = [0, 1, 2, 5, 10, 20, 50]
ARGS = [0.1, 1.0, 2.5, 10.0, 50.0, 100.0, 1000.0]


def _check_against_oracle(n: int, x: float) -> None:
    j_ref, y_ref = (float(v) for v in specfun_oracle(n, x, digits=30))
    if not np.isfinite(y_ref):
        pytest.skip(f"Y_{n}({x}) overflows double precision")
    # 大引數時相位約損失 eps·x
    rtol = 1e-12 * max(1.0, x / 100.0)
    err_j, err_y = specfun_errors(n, x, bessel_j(n, x), bessel_y(n, x))
    assert err_j <= rtol
    assert err_y <= rtol


class TestBesselValues:
    def test_j0_at_one(self):
        assert_allclose(bessel_j(0, 1.0), 0.7651976865579666, rtol=1e-14)

    @pytest.mark.parametrize("n", [0, 1, 5, 20])
    @pytest.mark.parametrize("x", [1.0, 10.0, 100.0])
    def test_matches_oracle(self, n, x):
        _check_against_oracle(n, x)

    @pytest.mark.slow
    @pytest.mark.parametrize("n", ORDERS)
    @pytest.mark.parametrize("x", [1e-3] + ARGS)
    def test_matches_oracle_full_grid(self, n, x):
        _check_against_oracle(n, x)

    @pytest.mark.parametrize("n", [0, 1, 2, 5, 10])
    @pytest.mark.parametrize("x", [0.5, 1.0, 10.0, 100.0])
    def test_wronskian(self, n, x):
        # J_{n+1} Y_n - J_n Y_{n+1} = 2 / (π x)
        lhs = bessel_j(n + 1, x) * bessel_y(n, x) - bessel_j(n, x) * bessel_y(n + 1, x)
        target = 2.0 / (np.pi * x)
        assert abs(lhs - target) <= 1e-10 * target

    def test_at_zero(self):
        assert bessel_j(0, 0.0) == 1.0
        assert bessel_j(3, 0.0) == 0.0
        assert bessel_j(-2, 0.0) == 0.0

    def test_scalar_in_scalar_out(self):
        assert isinstance(bessel_j(1, 2.0), float)
        assert isinstance(hankel1(1, 2.0), complex)
        assert bessel_j(1, np.array([1.0, 2.0])).shape == (2,)


class TestIdentities:
    @pytest.mark.parametrize("n", [1, 2, 3, 7])
    def test_negative_order_parity(self, n):
        sign = (-1) ** n
        assert bessel_j(-n, 2.3) == sign * bessel_j(n, 2.3)
        assert bessel_y(-n, 2.3) == sign * bessel_y(n, 2.3)
        assert hankel1(-n, 2.3) == sign * hankel1(n, 2.3)

    def test_hankel_is_j_plus_iy(self):
        for n, x in [(0, 0.7), (2, 3.0), (-3, 12.5)]:
            assert hankel1(n, x) == bessel_j(n, x) + 1j * bessel_y(n, x)

    def test_j0_derivative(self):
        xs = np.linspace(0.0, 30.0, 61)
        assert np.array_equal(bessel_j_prime(0, xs), -bessel_j(1, xs))

    def test_derivatives_match_finite_difference(self):
        x, h = 4.2, 1e-5
        for n in (0, 1, 4):
            fd_j = (bessel_j(n, x + h) - bessel_j(n, x - h)) / (2 * h)
            fd_y = (bessel_y(n, x + h) - bessel_y(n, x - h)) / (2 * h)
            assert_allclose(bessel_j_prime(n, x), fd_j, atol=1e-8)
            assert_allclose(bessel_y_prime(n, x), fd_y, atol=1e-8)
            assert_allclose(hankel1_prime(n, x), fd_j + 1j * fd_y, atol=1e-8)

    def test_hankel_table_matches_pointwise(self):
        xs = np.array([1e-7, 0.3, 2.0, 5.5, 17.0, 120.0])
        table = hankel1_table(12, xs)
        assert table.shape == (6, 13)
        for n in range(13):
            assert_allclose(table[:, n], hankel1(n, xs), rtol=1e-13)

    def test_hankel_table_broadcasts_shape(self):
        xs = np.array([[0.5, 3.0], [9.0, 40.0]])
        table = hankel1_table(4, xs)
        assert table.shape == (2, 2, 5)
        assert_allclose(table[1, 0], hankel1(np.arange(5), 9.0), rtol=1e-13)


class TestDomain:
    def test_non_integer_order(self):
        with pytest.raises(DomainError):
            bessel_j(1.5, 1.0)

    @pytest.mark.parametrize("x", [np.nan, np.inf, -1.0])
    def test_bad_argument(self, x):
        with pytest.raises(DomainError):
            bessel_j(0, x)

    def test_y_needs_positive_argument(self):
        with pytest.raises(DomainError):
            bessel_y(0, 0.0)
        with pytest.raises(DomainError):
            hankel1(1, X_MIN / 10.0)

    def test_domain_error_is_value_error(self):
        with pytest.raises(ValueError):
            hankel1(0, -2.0)
