"""Exact rational polynomial algebra and graded phase-space series.

Everything in this module is closed over arbitrary-precision rationals:
no floating point enters until a series or polynomial is explicitly
evaluated at numeric arguments.  Phase-space series carry two independent
truncation cutoffs, the hbar^2 grade ``n_max`` and the maximum magnitude
``k_max`` of the (negative, odd) momentum exponents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Sequence, Union

from .errors import GradingError, MomentumSingularityError

Rational = Fraction

RationalLike = Union[int, str, Fraction]

#: documented default truncation cutoffs
DEFAULT_N_MAX = 3
DEFAULT_K_MAX = 21


def rat(value: RationalLike) -> Fraction:
    """Coerce ints, rational strings like ``"4/5"`` or Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


def _trim(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    n = len(coeffs)
    while n > 0 and coeffs[n - 1] == 0:
        n -= 1
    return tuple(coeffs[:n])


@dataclass(frozen=True)
class QPoly:
    """Polynomial in the position variable with exact rational coefficients.

    ``coeffs[i]`` is the coefficient of q**i.  The representation is
    canonical: no trailing zeros, and the zero polynomial is the empty
    tuple.
    """

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim([rat(c) for c in self.coeffs]))

    @staticmethod
    def zero() -> "QPoly":
        return QPoly(())

    @staticmethod
    def monomial(power: int, coeff: RationalLike = 1) -> "QPoly":
        c = rat(coeff)
        if c == 0:
            return QPoly(())
        return QPoly((Fraction(0),) * power + (c,))

    @property
    def degree(self) -> int:
        """Degree of the polynomial; -1 for the zero polynomial."""
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "QPoly") -> "QPoly":
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return QPoly(out)

    def __neg__(self) -> "QPoly":
        return QPoly(tuple(-c for c in self.coeffs))

    def __sub__(self, other: "QPoly") -> "QPoly":
        return self + (-other)

    def __mul__(self, other: "QPoly") -> "QPoly":
        if self.is_zero() or other.is_zero():
            return QPoly(())
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return QPoly(out)

    def scale(self, factor: RationalLike) -> "QPoly":
        f = rat(factor)
        if f == 0:
            return QPoly(())
        return QPoly(tuple(c * f for c in self.coeffs))

    def derivative(self, order: int = 1) -> "QPoly":
        poly = self
        for _ in range(order):
            poly = QPoly(tuple(c * i for i, c in enumerate(poly.coeffs) if i >= 1))
        return poly

    def integrate0(self) -> "QPoly":
        """Antiderivative with zero constant term: the integral from 0 to q."""
        if self.is_zero():
            return QPoly(())
        out = [Fraction(0)] * (len(self.coeffs) + 1)
        for i, c in enumerate(self.coeffs):
            out[i + 1] = c / (i + 1)
        return QPoly(out)

    def stretch_arg(self, factor: RationalLike) -> "QPoly":
        """Substitute q -> factor * q."""
        f = rat(factor)
        return QPoly(tuple(c * f**i for i, c in enumerate(self.coeffs)))

    def subs_sum_scaled(self, cx: RationalLike, cy: RationalLike) -> "BiPoly":
        """Substitute q -> cx*x + cy*y, expanding binomially."""
        cx, cy = rat(cx), rat(cy)
        terms: dict[tuple[int, int], Fraction] = {}
        for i, c in enumerate(self.coeffs):
            if c == 0:
                continue
            for j in range(i + 1):
                val = c * math.comb(i, j) * cx ** (i - j) * cy**j
                key = (i - j, j)
                terms[key] = terms.get(key, Fraction(0)) + val
        return BiPoly(terms)

    def eval_rational(self, x: RationalLike) -> Fraction:
        x = rat(x)
        acc = Fraction(0)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_float(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + float(c)
        return acc

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        parts = [f"({c})q^{i}" for i, c in enumerate(self.coeffs) if c != 0]
        return " + ".join(parts)


@dataclass(frozen=True)
class BiPoly:
    """Bivariate polynomial with exact rational coefficients.

    Coefficients are keyed by (power of first variable, power of second).
    Canonical form stores no zero values.  The same structure serves the
    (q, q') scratch algebra behind the correction recursion and the (u, v)
    kernel factors, u = q + q', v = q - q'.
    """

    coeffs: Mapping[tuple[int, int], Fraction] = field(default_factory=dict)

    def __post_init__(self):
        clean = {k: rat(v) for k, v in self.coeffs.items() if v != 0}
        object.__setattr__(self, "coeffs", clean)

    @staticmethod
    def zero() -> "BiPoly":
        return BiPoly({})

    @staticmethod
    def one() -> "BiPoly":
        return BiPoly({(0, 0): Fraction(1)})

    @staticmethod
    def from_x_poly(p: QPoly) -> "BiPoly":
        return BiPoly({(i, 0): c for i, c in enumerate(p.coeffs) if c != 0})

    @staticmethod
    def from_y_poly(p: QPoly) -> "BiPoly":
        return BiPoly({(0, i): c for i, c in enumerate(p.coeffs) if c != 0})

    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other: "BiPoly") -> "BiPoly":
        out = dict(self.coeffs)
        for k, v in other.coeffs.items():
            out[k] = out.get(k, Fraction(0)) + v
        return BiPoly(out)

    def __neg__(self) -> "BiPoly":
        return BiPoly({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "BiPoly") -> "BiPoly":
        return self + (-other)

    def __mul__(self, other: "BiPoly") -> "BiPoly":
        out: dict[tuple[int, int], Fraction] = {}
        for (i1, j1), a in self.coeffs.items():
            for (i2, j2), b in other.coeffs.items():
                key = (i1 + i2, j1 + j2)
                out[key] = out.get(key, Fraction(0)) + a * b
        return BiPoly(out)

    def scale(self, factor: RationalLike) -> "BiPoly":
        f = rat(factor)
        if f == 0:
            return BiPoly({})
        return BiPoly({k: v * f for k, v in self.coeffs.items()})

    def shift_y_power(self, delta: int) -> "BiPoly":
        return BiPoly({(i, j + delta): v for (i, j), v in self.coeffs.items()})

    def dx(self) -> "BiPoly":
        return BiPoly({(i - 1, j): v * i for (i, j), v in self.coeffs.items() if i >= 1})

    def dy(self) -> "BiPoly":
        return BiPoly({(i, j - 1): v * j for (i, j), v in self.coeffs.items() if j >= 1})

    def integrate_y_0_to_x(self) -> QPoly:
        """Integrate the second variable from 0 up to the first variable.

        The antiderivative in y gains one power; evaluating y at x merges
        the exponents, so the result is univariate.
        """
        out: dict[int, Fraction] = {}
        for (i, j), v in self.coeffs.items():
            power = i + j + 1
            out[power] = out.get(power, Fraction(0)) + v / (j + 1)
        if not out:
            return QPoly(())
        coeffs = [Fraction(0)] * (max(out) + 1)
        for p, v in out.items():
            coeffs[p] = v
        return QPoly(coeffs)

    def is_even_in_y(self) -> bool:
        return all(j % 2 == 0 for (_, j) in self.coeffs)

    def min_x_power(self) -> int:
        if not self.coeffs:
            return 0
        return min(i for (i, _) in self.coeffs)

    def eval_float(self, x: float, y: float) -> float:
        return sum(float(v) * x**i * y**j for (i, j), v in sorted(self.coeffs.items()))

    def eval_rational(self, x: RationalLike, y: RationalLike) -> Fraction:
        x, y = rat(x), rat(y)
        acc = Fraction(0)
        for (i, j), v in sorted(self.coeffs.items()):
            acc += v * x**i * y**j
        return acc

    def max_abs_coeff(self) -> Fraction:
        if not self.coeffs:
            return Fraction(0)
        return max(abs(v) for v in self.coeffs.values())


@dataclass(frozen=True)
class PolynomialPotential:
    """Interaction potential V(q) with exact rational coefficients a0..ad."""

    coeffs: tuple[Fraction, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _trim([rat(c) for c in self.coeffs]))

    @staticmethod
    def from_coeffs(values: Sequence[RationalLike]) -> "PolynomialPotential":
        return PolynomialPotential(tuple(rat(v) for v in values))

    @staticmethod
    def zero() -> "PolynomialPotential":
        return PolynomialPotential(())

    @property
    def degree(self) -> int:
        return max(len(self.coeffs) - 1, 0)

    def is_linear_system(self) -> bool:
        """True iff V has no terms above q^2, i.e. V = a + b q + c q^2."""
        return self.degree <= 2

    def as_qpoly(self) -> QPoly:
        return QPoly(self.coeffs)

    def derivative(self, order: int = 1) -> QPoly:
        return self.as_qpoly().derivative(order)

    def delta_bipoly(self) -> BiPoly:
        """V(x) - V(y) as a bivariate polynomial."""
        p = self.as_qpoly()
        return BiPoly.from_x_poly(p) - BiPoly.from_y_poly(p)

    def eval_float(self, x: float) -> float:
        return self.as_qpoly().eval_float(x)

    def eval_rational(self, x: RationalLike) -> Fraction:
        return self.as_qpoly().eval_rational(x)


def poly_integrate_zero_to_q(p: QPoly) -> QPoly:
    """Definite integral of p from 0 to q, as a polynomial in q."""
    return p.integrate0()


def potential_difference_power(V: PolynomialPotential, k: int) -> QPoly:
    """Integral from 0 to q of (V(q) - V(q'))**k dq', expanded exactly.

    The k = 0 case is the empty product, giving q itself.
    """
    if k < 0:
        raise ValueError("power must be >= 0")
    delta = V.delta_bipoly()
    acc = BiPoly.one()
    for _ in range(k):
        acc = acc * delta
    return acc.integrate_y_0_to_x()


def double_factorial_odd(k: int) -> int:
    """(2k - 1)!! with the empty-product convention (k = 0 -> 1)."""
    return math.factorial(2 * k) // (2**k * math.factorial(k))


@dataclass(frozen=True)
class PhaseSeries:
    """Graded series sum_n hbar^(2n) sum_m c_{n,m}(q) p^m.

    Entries are keyed by (n, m) where n >= 0 is the hbar^2 grade and m is
    the momentum exponent.  A well-graded series has every m odd, negative
    and satisfying |m| >= 4n + 1; intermediate results of momentum
    differentiation may break oddness and are marked ``graded=False``.
    """

    entries: Mapping[tuple[int, int], QPoly]
    mu: Fraction = Fraction(1)
    n_max: int = DEFAULT_N_MAX
    k_max: int = DEFAULT_K_MAX
    graded: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mu", rat(self.mu))
        clean = {}
        for (n, m), poly in self.entries.items():
            if not isinstance(poly, QPoly):
                poly = QPoly(tuple(poly))
            if poly.is_zero():
                continue
            if n < 0:
                raise GradingError(f"negative grade {n}")
            if m >= 0:
                raise GradingError(f"non-negative momentum exponent {m}")
            clean[(n, m)] = poly
        object.__setattr__(self, "entries", clean)
        if self.graded:
            self._assert_graded()

    def _assert_graded(self):
        for (n, m) in self.entries:
            if m % 2 == 0:
                raise GradingError(f"even momentum exponent {m} at grade {n}")
            if -m < 4 * n + 1:
                raise GradingError(
                    f"exponent {m} at grade {n} violates |m| >= 4n + 1"
                )
            if n > self.n_max or -m > self.k_max:
                raise GradingError(f"entry ({n}, {m}) lies beyond the cutoffs")

    def grade(self, n: int) -> dict[int, QPoly]:
        """All entries of one hbar^2 grade, keyed by momentum exponent."""
        return {m: poly for (g, m), poly in self.entries.items() if g == n}

    def terms(self) -> Iterator[tuple[int, int, QPoly]]:
        for (n, m) in sorted(self.entries):
            yield n, m, self.entries[(n, m)]

    def p_exponents(self) -> set[int]:
        return {m for (_, m) in self.entries}

    def is_empty(self) -> bool:
        return not self.entries

    def with_entries(self, extra: Mapping[tuple[int, int], QPoly]) -> "PhaseSeries":
        merged = dict(self.entries)
        for key, poly in extra.items():
            merged[key] = merged.get(key, QPoly.zero()) + poly
        return PhaseSeries(merged, self.mu, self.n_max, self.k_max, self.graded)


def series_diff(s: PhaseSeries, var: str, order: int = 1) -> PhaseSeries:
    """Term-wise exact differentiation of a phase-space series.

    Differentiation in q preserves the momentum grading.  Odd-order
    differentiation in p produces even exponents, so the result is
    returned ungraded; callers restore oddness after the 1/p factors of
    the recursion are applied.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    out: dict[tuple[int, int], QPoly] = {}
    if var == "q":
        for (n, m), poly in s.entries.items():
            d = poly.derivative(order)
            if not d.is_zero():
                out[(n, m)] = d
        return PhaseSeries(out, s.mu, s.n_max, s.k_max, graded=s.graded)
    if var == "p":
        for (n, m), poly in s.entries.items():
            mult = Fraction(1)
            for i in range(order):
                mult *= m - i
            if mult == 0:
                continue
            out[(n, m - order)] = poly.scale(mult)
        still_graded = s.graded and order % 2 == 0
        return PhaseSeries(out, s.mu, s.n_max, s.k_max, graded=still_graded)
    raise ValueError("var must be 'q' or 'p'")


def series_eval(s: PhaseSeries, q: float, p: float, hbar: float) -> float:
    """Numeric value of the series at a phase-space point.

    Exactness stops here: rational coefficients are converted to float
    and the graded terms are accumulated in a fixed (sorted) order.
    """
    if p == 0:
        raise MomentumSingularityError("momentum singularity: p = 0 never arrives")
    total = 0.0
    for n, m, poly in s.terms():
        total += hbar ** (2 * n) * poly.eval_float(q) * p**m
    return total
