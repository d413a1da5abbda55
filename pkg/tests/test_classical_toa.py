import math
from fractions import Fraction as F

import numpy as np
import pytest

from moyaltoa.classical_toa import (
    ArrivalStatus,
    classical_toa_quadrature,
    ltoa_series,
    successive_approximation,
)
from moyaltoa.core_series import (
    PhaseSeries,
    PolynomialPotential,
    QPoly,
    series_eval,
)
from moyaltoa.errors import MomentumSingularityError
from moyaltoa.specfun import HypergeomSpec, hyp_pfq

QUARTIC = PolynomialPotential.from_coeffs([0, 0, 0, 0, 1])


def test_free_particle_quadrature():
    res = classical_toa_quadrature(PolynomialPotential.zero(), 1.0, -2.0, 1.0)
    assert res.status is ArrivalStatus.ARRIVED
    assert res.value == pytest.approx(2.0, rel=1e-12)


def test_quartic_quadrature_matches_hypergeometric_route():
    mu, q, p = 1.0, -1.0, 3.0
    res = classical_toa_quadrature(QUARTIC, mu, q, p)
    z = -2.0 * mu * q**4 / p**2
    closed = -(mu * q / p) * hyp_pfq(HypergeomSpec((0.5, 1.0), (1.25,), z))
    assert res.arrived
    assert res.value == pytest.approx(closed, rel=1e-8)


def test_inverted_quartic_bound_region():
    V = PolynomialPotential.from_coeffs([0, 0, 0, 0, -1])
    res = classical_toa_quadrature(V, 1.0, -2.0, 1.0)  # 2|lam|q^4/p^2 = 32
    assert res.status is ArrivalStatus.NON_CLASSICAL
    assert math.isnan(res.value)


def test_moving_away_status():
    res = classical_toa_quadrature(PolynomialPotential.zero(), 1.0, -2.0, -1.0)
    assert res.status is ArrivalStatus.MOVING_AWAY
    assert res.value == pytest.approx(-2.0, rel=1e-12)


def test_quadrature_rejects_zero_momentum():
    with pytest.raises(MomentumSingularityError):
        classical_toa_quadrature(QUARTIC, 1.0, -1.0, 0.0)


def test_successive_n0_is_free_term():
    s = successive_approximation(QUARTIC, 1, 0)
    assert dict(s.entries) == {(0, -1): QPoly((0, -1))}


def test_successive_n2_matches_expanded_closed_form():
    # the n = 2 iterate in closed form: the k <= 2 partial of the local series
    mu = F(3, 2)
    s = successive_approximation(QUARTIC, mu, 2, k_max=21)
    expected = {}
    for k in range(3):
        from moyaltoa.core_series import double_factorial_odd, potential_difference_power

        coeff = -F((-1) ** k * double_factorial_odd(k), math.factorial(k))
        expected[(0, -(2 * k + 1))] = potential_difference_power(QUARTIC, k).scale(
            coeff * mu ** (k + 1)
        )
    assert dict(s.entries) == expected


def test_successive_equals_truncated_ltoa():
    V = PolynomialPotential.from_coeffs([0, F(1, 2), 0, 2])
    full = ltoa_series(V, F(2, 3), k_max=21)
    for j in (1, 3, 5):
        s = successive_approximation(V, F(2, 3), j, k_max=21)
        for k in range(j + 1):
            key = (0, -(2 * k + 1))
            assert s.entries.get(key) == full.entries.get(key)
        assert all(-m <= 2 * j + 1 for (_, m) in s.entries)


def test_ltoa_free_particle():
    s = ltoa_series(PolynomialPotential.zero(), 1, k_max=21)
    assert dict(s.entries) == {(0, -1): QPoly((0, -1))}


def test_ltoa_quartic_first_correction_term():
    lam = F(2, 3)
    V = PolynomialPotential.from_coeffs([0, 0, 0, 0, lam])
    mu = F(1)
    s = ltoa_series(V, mu, k_max=5)
    # k = 1 term: +(4/5) mu^2 lam q^5 p^-3
    assert s.entries[(0, -3)] == QPoly((0, 0, 0, 0, 0, F(4, 5) * lam))


def test_ltoa_linear_potential_taylor_fit():
    # fit T(q,p) * p as a polynomial in 1/p^2 from quadrature samples and
    # compare the leading coefficients against the exact series entries
    V = PolynomialPotential.from_coeffs([0, 2])
    q = -1.0
    x_max = 1.0 / 15.0**2
    n_pts, deg = 14, 6
    xs = x_max * 0.5 * (1 + np.cos(np.pi * np.arange(n_pts) / (n_pts - 1)))
    xs = xs[xs > 1e-7]
    ps = 1.0 / np.sqrt(xs)
    ys = np.array(
        [classical_toa_quadrature(V, 1.0, q, float(p), node_count=192).value * p
         for p in ps]
    )
    coef_t = np.polynomial.polynomial.polyfit(xs / x_max, ys, deg)
    series = ltoa_series(V, 1, k_max=21)
    for k in range(3):
        fitted = coef_t[k] / x_max**k
        exact = series.entries[(0, -(2 * k + 1))].eval_float(q)
        assert fitted == pytest.approx(exact, rel=1e-8)


def test_ltoa_partial_sums_converge_in_region():
    # |V(q) - V(q')| < p^2 / 2mu along the path: partial sums approach the
    # quadrature value; outside, they blow up
    mu, q = 1.0, -1.0
    quad = classical_toa_quadrature(QUARTIC, mu, q, 3.0).value

    def partial(k_top, p):
        s = ltoa_series(QUARTIC, 1, k_max=2 * k_top + 1)
        return series_eval(s, q, p, 1.0)

    in_devs = [abs(partial(k, 3.0) - quad) for k in (2, 5, 10, 15)]
    assert in_devs == sorted(in_devs, reverse=True)
    assert in_devs[-1] < 1e-10

    # out of region (2 mu q^4 / p^2 > 1): terms grow without bound
    out_vals = [abs(partial(k, 1.0)) for k in (5, 10, 15, 20)]
    assert all(b > 2 * a for a, b in zip(out_vals, out_vals[1:]))


def test_ltoa_parity_odd_in_momentum():
    V = PolynomialPotential.from_coeffs([0, 1, 0, F(1, 4)])
    s = ltoa_series(V, 1, k_max=15)
    assert all(m % 2 != 0 for (_, m) in s.entries)
    for p in (2.5, 4.0):
        left = series_eval(s, -0.5, p, 1.0)
        right = series_eval(s, -0.5, -p, 1.0)
        assert left == pytest.approx(-right, rel=1e-14)
