"""Construction and verification of the deformed arrival-time series.

The quantum image of the classical arrival time is a series in hbar^2
whose grade-n part follows recursively from the lower grades:

    tau_n = mu * sum_{r=1..n} (-1)^r / (2^(2r) (2r+1)!)
            * integral_0^q dq' exp[(V(q) - V(q')) (mu/p) d/dp]
              (1/p) V^(2r+1)(q') d^(2r+1) tau_{n-r}(q', p) / dp^(2r+1)

with the local arrival time as grade 0.  All algebra is exact over the
rationals, so the defining conjugacy with the Hamiltonian - the deformed
bracket equalling exactly 1 - can be verified as structural cancellation
rather than a floating-point tolerance check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .classical_toa import ltoa_series
from .core_series import (
    BiPoly,
    PhaseSeries,
    PolynomialPotential,
    QPoly,
    RationalLike,
    rat,
)
from .errors import GradingError

TermSet = Mapping[int, BiPoly]


def inv_p_dp_power(m: int, j: int) -> tuple[Fraction, int]:
    """Apply ((1/p) d/dp)^j to p^m: returns (coefficient, new exponent).

    Each application maps p^m to m p^(m-2), so j applications of the
    operator on p^(-b) give (-1)^j b (b+2) ... (b+2j-2) p^(-b-2j).
    """
    coeff = Fraction(1)
    for i in range(j):
        coeff *= m - 2 * i
    return coeff, m - 2 * j


def exp_shift_apply(delta_v: BiPoly, mu: RationalLike, terms: TermSet,
                    k_max: int) -> dict[int, BiPoly]:
    """Expand exp[delta_v * (mu/p) d/dp] on a set of momentum terms.

    ``terms`` maps momentum exponents to bivariate polynomials in
    (q, q'); the operator acts on the momentum part only, each order j
    contributing delta_v^j mu^j / j! times the j-fold (1/p) d/dp power
    rule.  Output exponents beyond the cutoff are dropped; everything
    kept is exact.
    """
    mu = rat(mu)
    if any(m >= 0 for m in terms):
        raise GradingError("exp-shift input must have negative momentum exponents")
    out: dict[int, BiPoly] = {}
    min_b = min((-m for m in terms), default=0)
    dv_power = BiPoly.one()
    j = 0
    while terms and min_b + 2 * j <= k_max:
        if j > 0:
            dv_power = dv_power * delta_v
            if dv_power.is_zero():
                break
        scale = mu**j / math.factorial(j)
        for m, poly in terms.items():
            coeff, m_out = inv_p_dp_power(m, j)
            if -m_out > k_max or coeff == 0:
                continue
            contribution = (dv_power * poly).scale(coeff * scale)
            if contribution.is_zero():
                continue
            out[m_out] = out.get(m_out, BiPoly.zero()) + contribution
        j += 1
    return {m: poly for m, poly in out.items() if not poly.is_zero()}


def _max_bracket_r(V: PolynomialPotential) -> int:
    """Largest r with a surviving V^(2r+1) factor; 0 for linear systems."""
    return max((V.degree - 1) // 2, 0)


def moyal_correction(V: PolynomialPotential, mu: RationalLike, n: int,
                     prior: PhaseSeries) -> PhaseSeries:
    """Grade-n quantum correction from grades 0..n-1 of ``prior``.

    For each r, the source grade n-r is differentiated 2r+1 times in p,
    multiplied by V^(2r+1)(q')/p, pushed through the exponential shift
    operator and integrated over q' from 0 to q.  Linear systems have no
    odd derivatives above the first, so every grade comes out empty.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    mu = rat(mu)
    k_max = prior.k_max
    if not prior.grade(0):
        raise ValueError("prior series is missing grade 0")
    if not V.is_linear_system():
        # a nonlinear potential populates every grade whose leading
        # exponent 4g + 1 fits the cutoff, so a gap means a malformed prior
        for g in range(1, n):
            if not prior.grade(g) and 4 * g + 1 <= k_max:
                raise ValueError(f"prior series is missing grade {g}")
    delta_v = V.delta_bipoly()
    grade_terms: dict[int, BiPoly] = {}
    for r in range(1, n + 1):
        order = 2 * r + 1
        if order > V.degree:
            break
        v_deriv = V.derivative(order)
        source = prior.grade(n - r)
        if not source:
            continue
        shifted_input: dict[int, BiPoly] = {}
        for m, poly in source.items():
            # d^(2r+1)/dp^(2r+1) then a 1/p factor: exponent m - 2r - 2
            mult = Fraction(1)
            for i in range(order):
                mult *= m - i
            m_base = m - order - 1
            if -m_base > k_max:
                continue
            base_poly = BiPoly.from_y_poly((poly * v_deriv).scale(mult))
            if base_poly.is_zero():
                continue
            shifted_input[m_base] = shifted_input.get(m_base, BiPoly.zero()) + base_poly
        if not shifted_input:
            continue
        shifted = exp_shift_apply(delta_v, mu, shifted_input, k_max)
        prefactor = mu * Fraction((-1) ** r, 2 ** (2 * r) * math.factorial(order))
        for m_out, bipoly in shifted.items():
            poly_q = bipoly.integrate_y_0_to_x().scale(prefactor)
            if poly_q.is_zero():
                continue
            grade_terms[m_out] = grade_terms.get(m_out, QPoly.zero()) + poly_q
    entries = {(n, m): poly for m, poly in grade_terms.items() if not poly.is_zero()}
    return PhaseSeries(entries, mu=mu, n_max=n, k_max=k_max)


def build_moyal_toa(V: PolynomialPotential, mu: RationalLike, n_max: int,
                    k_max: int) -> PhaseSeries:
    """Full graded arrival-time series through hbar^(2 n_max).

    Grade 0 is the local arrival time; higher grades follow from the
    correction recursion.  Only even powers of hbar exist by
    construction - the grading index counts hbar^2.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    mu = rat(mu)
    base = ltoa_series(V, mu, k_max)
    entries = dict(base.entries)
    series = PhaseSeries(entries, mu=mu, n_max=n_max, k_max=k_max)
    for n in range(1, n_max + 1):
        grade_n = moyal_correction(V, mu, n, series)
        entries.update(grade_n.entries)
        series = PhaseSeries(entries, mu=mu, n_max=n_max, k_max=k_max)
    return series


@dataclass(frozen=True)
class BracketReport:
    """Outcome of the exact bracket verification.

    ``constant_term`` is the coefficient of hbar^0 p^0 q^0.  Residual
    entries are orders that failed to cancel; the check passes when the
    constant is exactly 1 and every residual sits on the declared
    truncation boundary.
    """

    constant_term: Fraction
    residual_entries: tuple[tuple[int, int, QPoly], ...]
    boundary_orders: frozenset[tuple[int, int]]

    @property
    def passed(self) -> bool:
        return self.constant_term == 1 and all(
            (g, m) in self.boundary_orders for (g, m, _) in self.residual_entries
        )

    def interior_residuals(self) -> list[tuple[int, int, QPoly]]:
        return [
            (g, m, poly)
            for (g, m, poly) in self.residual_entries
            if (g, m) not in self.boundary_orders
        ]


def moyal_bracket(V: PolynomialPotential, mu: RationalLike, T: PhaseSeries,
                  r_max: int | None = None) -> BracketReport:
    """Exact deformed bracket of H = p^2/2mu + V(q) with a graded series.

    Only the terms surviving for this Hamiltonian are present: the
    Poisson part V' dT/dp - (p/mu) dT/dq plus, for r >= 1, the
    (1/4)^r (-1)^r/(2r+1)! V^(2r+1) d^(2r+1)T/dp^(2r+1) ladder that moves
    a source grade up by r.  Orders whose contributing terms are not all
    inside the cutoffs are reported as boundary, never asserted on.
    """
    mu = rat(mu)
    natural_cap = _max_bracket_r(V)
    cap = natural_cap if r_max is None else min(r_max, natural_cap)
    v_prime = V.derivative(1)
    out: dict[tuple[int, int], QPoly] = {}

    def add(g: int, m: int, poly: QPoly):
        if poly.is_zero():
            return
        key = (g, m)
        out[key] = out.get(key, QPoly.zero()) + poly

    for n, m, poly in T.terms():
        # V' dT/dp
        add(n, m - 1, (v_prime * poly).scale(m))
        # -(p/mu) dT/dq
        add(n, m + 1, poly.derivative(1).scale(-1 / mu))
        # higher bracket ladder
        for r in range(1, cap + 1):
            order = 2 * r + 1
            if order > V.degree:
                break
            mult = Fraction(1)
            for i in range(order):
                mult *= m - i
            if mult == 0:
                continue
            factor = Fraction((-1) ** r, 2 ** (2 * r) * math.factorial(order))
            add(n + r, m - order, (V.derivative(order) * poly).scale(mult * factor))

    constant = Fraction(0)
    residuals: list[tuple[int, int, QPoly]] = []
    for (g, m), poly in sorted(out.items()):
        if poly.is_zero():
            continue
        if (g, m) == (0, 0):
            constant = poly.coeffs[0] if poly.coeffs else Fraction(0)
            rest = poly - QPoly((constant,))
            if not rest.is_zero():
                residuals.append((g, m, rest))
        else:
            residuals.append((g, m, poly))

    boundary = frozenset(
        (g, m)
        for (g, m) in out
        if g > T.n_max or abs(m) >= T.k_max
    )
    return BracketReport(constant, tuple(residuals), boundary)


def check_time_reversal(T: PhaseSeries) -> bool:
    """True iff every stored momentum exponent is odd.

    Odd negative exponents are equivalent to the stored series flipping
    sign under p -> -p.
    """
    return all(m % 2 != 0 for m in T.p_exponents())
