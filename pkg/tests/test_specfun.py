import math
import random

import numpy as np
import pytest
from scipy import integrate as sci_integrate

from moyaltoa.errors import ConvergenceError, DomainError, EvaluationError
from moyaltoa.specfun import (
    HypergeomSpec,
    QuadratureSpec,
    erfi,
    erfi_scaled,
    hyp_pfq,
    integrate,
)


def test_hyp_z_zero_cases():
    assert hyp_pfq(HypergeomSpec((0.5, 1.0), (1.25,), 0.0)) == 1.0
    assert hyp_pfq(HypergeomSpec((), (1.0,), 0.0)) == 1.0


def test_hyp_2f1_against_direct_summation():
    z = -0.5
    total, term = 1.0, 1.0
    for k in range(200):
        term *= z * (0.5 + k) * (1.0 + k) / ((1.25 + k) * (1.0 + k))
        total += term
    got = hyp_pfq(HypergeomSpec((0.5, 1.0), (1.25,), z))
    assert got == pytest.approx(total, rel=1e-12)


def test_hyp_outside_convergence_region():
    with pytest.raises(DomainError):
        hyp_pfq(HypergeomSpec((0.5, 1.0), (1.25,), 1.0))
    with pytest.raises(DomainError):
        hyp_pfq(HypergeomSpec((0.5, 1.0), (1.25,), -1.2))


def test_hyp_rejects_bad_lower_parameter():
    with pytest.raises(ValueError):
        HypergeomSpec((1.0,), (0.0,), 0.5)
    with pytest.raises(ValueError):
        HypergeomSpec((1.0,), (-2.0,), 0.5)


def test_hyp_term_ratio_eventually_contracts():
    # inside the convergence region the term ratio approaches |z| < 1
    a, b, z = (0.5, 1.0), (1.25,), -0.8
    term = 1.0
    ratios = []
    for k in range(60):
        nxt = term * z * (a[0] + k) * (a[1] + k) / ((b[0] + k) * (1.0 + k))
        if term != 0:
            ratios.append(abs(nxt / term))
        term = nxt
    assert all(r < 1.0 for r in ratios[5:])
    assert hyp_pfq(HypergeomSpec(a, b, z)) == pytest.approx(
        sum_series(a, b, z), rel=1e-11
    )


def sum_series(a, b, z, terms=4000):
    total, term = 1.0, 1.0
    for k in range(terms):
        term *= z / (k + 1)
        for x in a:
            term *= x + k
        for y in b:
            term /= y + k
        total += term
    return total


def test_erfi_zero_and_oddness():
    assert erfi(0.0) == 0.0
    for x in (0.5, 2.0, 5.0):
        assert erfi(-x) == -erfi(x)


def test_erfi_against_quadrature_oracle():
    val, _ = sci_integrate.quad(lambda t: math.exp(t * t), 0.0, 1.0)
    oracle = 2.0 / math.sqrt(math.pi) * val
    assert erfi(1.0) == pytest.approx(oracle, rel=1e-12)


def test_erfi_series_asymptotic_seam():
    # both branches around the cutoff agree with an independent quadrature
    for x in (9.5, 10.5, 12.0):
        val, _ = sci_integrate.quad(lambda t: math.exp(t * t - x * x), 0.0, x)
        oracle = 2.0 / math.sqrt(math.pi) * val
        assert erfi_scaled(x) == pytest.approx(oracle, rel=1e-11)


def test_gauss_legendre_polynomial_exactness():
    spec = QuadratureSpec("gauss-legendre", 8, (-1.0, 1.0))
    assert integrate(lambda x: x * x, spec) == pytest.approx(2.0 / 3.0, abs=1e-14)
    rng = random.Random(3)
    for _ in range(10):
        coeffs = [rng.uniform(-2, 2) for _ in range(15)]  # degree 14 <= 2*8-1

        def poly(x):
            return sum(c * x**i for i, c in enumerate(coeffs))

        exact = sum(
            c * (1.0 ** (i + 1) - (-1.0) ** (i + 1)) / (i + 1)
            for i, c in enumerate(coeffs)
        )
        assert integrate(poly, spec) == pytest.approx(exact, rel=1e-13, abs=1e-13)


def test_gauss_legendre_odd_function_vanishes():
    spec = QuadratureSpec("gauss-legendre", 24, (-3.0, 3.0))
    assert abs(integrate(lambda x: x**3 * math.sin(x) ** 0 * x**2, spec)) < 1e-13


def test_gauss_hermite_moments():
    # weight exp(-((x-2)/2)^2): zeroth moment 2 sqrt(pi), first moment 4 sqrt(pi)
    spec = QuadratureSpec("gauss-hermite", 32, (2.0, 2.0))
    assert integrate(lambda x: 1.0, spec) == pytest.approx(2 * math.sqrt(math.pi), rel=1e-13)
    assert integrate(lambda x: x, spec) == pytest.approx(4 * math.sqrt(math.pi), rel=1e-13)


def test_pv_gaussian_against_erfi_closed_form():
    spec = QuadratureSpec("pv-symmetric", 128, (-8.0, 10.0), center=0.0)
    got = integrate(lambda p: math.exp(-((p - 1.0) ** 2)) / p, spec)
    want = math.pi * math.exp(-1.0) * erfi(1.0)
    assert got == pytest.approx(want, abs=1e-8)


def test_pv_even_integrand_drops_pole():
    # f(p) = cos(p)/p has an odd singular part; an even numerator g(p)=p*h(p)
    # makes f regular -- here instead: even integrand about the pole keeps
    # only the pole-free part of the pair sum
    spec = QuadratureSpec("pv-symmetric", 96, (-2.0, 2.0), center=0.0)

    def f(p):
        return math.cos(p) / p  # odd integrand: PV is exactly zero

    assert integrate(f, spec) == pytest.approx(0.0, abs=1e-12)

    def g(p):
        return math.cos(p) / p + p * p  # same plus a regular even part

    assert integrate(g, spec) == pytest.approx(16.0 / 3.0, rel=1e-10)


def test_pv_requires_interior_pole():
    with pytest.raises(ValueError):
        QuadratureSpec("pv-symmetric", 64, (1.0, 2.0), center=0.0)


def test_nan_integrand_raises():
    spec = QuadratureSpec("gauss-legendre", 8, (0.0, 1.0))
    with pytest.raises(EvaluationError):
        integrate(lambda x: math.nan, spec)


def test_unknown_rule_rejected():
    with pytest.raises(ValueError):
        QuadratureSpec("monte-carlo", 8, (0.0, 1.0))
