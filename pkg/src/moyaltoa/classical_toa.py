"""Classical and local time-of-arrival at the origin.

The global arrival time follows from inverting the equation of motion:
a quadrature of 1/sqrt(H(q,p) - V(q')) along the path.  Its expansion
about the free arrival time -mu q / p (the local time of arrival) is a
grade-0 phase-space series with exact rational coefficients; the same
series arises as the fixed point of a successive-approximation
recurrence, which is kept as an independent construction for
cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .core_series import (
    PhaseSeries,
    PolynomialPotential,
    QPoly,
    RationalLike,
    double_factorial_odd,
    potential_difference_power,
    rat,
)
from .errors import MomentumSingularityError
from .specfun import gauss_legendre_nodes


class ArrivalStatus(str, Enum):
    ARRIVED = "arrived"
    NON_CLASSICAL = "non-classical-region"
    MOVING_AWAY = "moving-away"


@dataclass(frozen=True)
class ClassicalTOAResult:
    value: float
    status: ArrivalStatus

    @property
    def arrived(self) -> bool:
        return self.status is ArrivalStatus.ARRIVED


def classical_toa_quadrature(V: PolynomialPotential, mu: float, q: float, p: float,
                             node_count: int = 128) -> ClassicalTOAResult:
    """Arrival time -sgn(p) sqrt(mu/2) * integral of (H - V)^(-1/2) from 0 to q.

    The radicand H(q, p) - V(q') is sign-sampled densely along the path
    before integrating; any non-positive sample marks the point as
    classically forbidden (a turning point lies between the start and the
    origin) and no quadrature is attempted.  Negative arrival times are
    reported as moving-away, with the value kept for diagnostics.
    """
    if p == 0:
        raise MomentumSingularityError("momentum singularity: p = 0 never arrives")
    energy = p * p / (2.0 * mu) + V.eval_float(q)

    def radicand(x: float) -> float:
        return energy - V.eval_float(x)

    # Chebyshev-spaced samples bracket sign changes of the polynomial
    # radicand reliably at desk-scale degrees.
    n_samples = 10 * (V.degree + 1)
    mid, half = 0.5 * q, 0.5 * abs(q)
    samples = [0.0, q]
    for i in range(n_samples):
        theta = math.pi * (i + 0.5) / n_samples
        samples.append(mid + half * math.cos(theta))
    if any(radicand(x) <= 0.0 for x in samples):
        return ClassicalTOAResult(math.nan, ArrivalStatus.NON_CLASSICAL)

    nodes, weights = gauss_legendre_nodes(0.0, q, node_count)
    integral = 0.0
    for x, w in zip(nodes, weights):
        integral += w / math.sqrt(radicand(float(x)))
    value = -math.copysign(1.0, p) * math.sqrt(mu / 2.0) * integral
    status = ArrivalStatus.ARRIVED if value >= 0.0 else ArrivalStatus.MOVING_AWAY
    return ClassicalTOAResult(value, status)


def ltoa_series(V: PolynomialPotential, mu: RationalLike,
                k_max: int = 21) -> PhaseSeries:
    """Local time of arrival as an exact grade-0 phase-space series.

    Term k carries the coefficient -(-1)^k (2k-1)!!/k! mu^(k+1) p^(-2k-1)
    times the path integral of (V(q) - V(q'))^k.
    """
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    mu = rat(mu)
    entries: dict[tuple[int, int], QPoly] = {}
    k = 0
    while 2 * k + 1 <= k_max:
        w_k = potential_difference_power(V, k)
        if not w_k.is_zero():
            coeff = -Fraction((-1) ** k * double_factorial_odd(k), math.factorial(k))
            entries[(0, -(2 * k + 1))] = w_k.scale(coeff * mu ** (k + 1))
        k += 1
    return PhaseSeries(entries, mu=mu, n_max=0, k_max=k_max)


def successive_approximation(V: PolynomialPotential, mu: RationalLike, n: int,
                             k_max: int = 21) -> PhaseSeries:
    """n-th successive approximation of the arrival time, grade 0 only.

    Built literally from the recurrence
        T_n = -mu q / p + (mu / p) * integral_0^q V'(q') dT_{n-1}(q', p)/dp dq'
    with T_0 = -mu q / p.  The k-th momentum order stabilizes at step k,
    so the result agrees entry-for-entry with the local-arrival series
    truncated at k <= n.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    mu = rat(mu)
    v_prime = V.derivative(1)
    free = QPoly.monomial(1, -mu)
    current: dict[int, QPoly] = {-1: free}
    for _ in range(n):
        nxt: dict[int, QPoly] = {-1: free}
        for m, poly in current.items():
            if -(m - 2) > k_max:
                continue
            integral = (v_prime * poly).integrate0()
            if integral.is_zero():
                continue
            key = m - 2
            term = integral.scale(mu * m)
            nxt[key] = nxt.get(key, QPoly.zero()) + term
        current = nxt
    entries = {(0, m): poly for m, poly in current.items() if not poly.is_zero()}
    return PhaseSeries(entries, mu=mu, n_max=0, k_max=k_max)
