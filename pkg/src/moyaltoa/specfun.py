"""Numerical special functions and quadrature rules.

Generalized hypergeometric sums are evaluated by direct series with a
hard term cap; requests outside the convergence region fail loudly
instead of being analytically continued.  Principal-value integrals use
symmetric exclusion of the pole with Richardson extrapolation in the
exclusion radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, EvaluationError

MAX_HYP_TERMS = 100_000
DEFAULT_REL_TOL = 1e-12


@dataclass(frozen=True)
class HypergeomSpec:
    """Parameters (a1..ap; b1..bq; z) of a generalized hypergeometric sum."""

    a_params: tuple[float, ...]
    b_params: tuple[float, ...]
    z: float

    def __post_init__(self):
        object.__setattr__(self, "a_params", tuple(float(a) for a in self.a_params))
        object.__setattr__(self, "b_params", tuple(float(b) for b in self.b_params))
        object.__setattr__(self, "z", float(self.z))
        for b in self.b_params:
            if b <= 0 and b == round(b):
                raise ValueError(f"lower parameter {b} is a non-positive integer")


@dataclass(frozen=True)
class QuadratureSpec:
    """A quadrature rule, its node count and its domain.

    For the ``pv-symmetric`` rule, ``center`` locates the (simple) pole,
    which must lie strictly inside the domain.  For ``gauss-hermite`` the
    domain is read as (center, scale) of the weight exp(-((x-c)/s)^2).
    """

    rule: str
    node_count: int
    domain: tuple[float, float]
    center: float | None = None

    def __post_init__(self):
        if self.rule not in ("gauss-legendre", "gauss-hermite", "pv-symmetric"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.node_count < 2:
            raise ValueError("node_count must be >= 2")
        if self.rule == "pv-symmetric":
            if self.center is None:
                raise ValueError("pv-symmetric rule needs the pole location")
            a, b = self.domain
            if not (a < self.center < b):
                raise ValueError("pole must lie strictly inside the domain")


def hyp_pfq(spec: HypergeomSpec, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Sum of the generalized hypergeometric series pFq(a; b; z).

    Partial sums are accumulated until two successive terms fall below
    ``rel_tol`` relative to the running sum.  When p = q + 1 the series
    has unit radius of convergence and a branch point at z = 1; arguments
    with |z| >= 1 raise ``DomainError``.  When p <= q any finite argument
    is accepted.
    """
    p, q = len(spec.a_params), len(spec.b_params)
    z = spec.z
    if z == 0.0:
        return 1.0
    if p == q + 1 and abs(z) >= 1.0:
        raise DomainError(
            f"outside convergence region: |z| = {abs(z)} >= 1 for {p}F{q}"
        )
    if p > q + 1:
        raise DomainError(f"{p}F{q} series diverges for any nonzero argument")
    term = 1.0
    total = 1.0
    small_streak = 0
    for k in range(MAX_HYP_TERMS):
        ratio = z / (k + 1)
        for a in spec.a_params:
            ratio *= a + k
        for b in spec.b_params:
            ratio /= b + k
        term *= ratio
        total += term
        if abs(term) <= rel_tol * max(abs(total), 1e-300):
            small_streak += 1
            if small_streak >= 2:
                return total
        else:
            small_streak = 0
    raise ConvergenceError(
        f"hypergeometric series did not converge within {MAX_HYP_TERMS} terms"
    )


def _hyp0f1_regular_array(b: float, z: np.ndarray, rel_tol: float = 1e-14,
                          max_terms: int = 400) -> np.ndarray:
    """Vectorized 0F1(; b; z) for real array arguments (entire function)."""
    z = np.asarray(z, dtype=float)
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(max_terms):
        term = term * z / ((b + k) * (k + 1))
        total += term
        if np.all(np.abs(term) <= rel_tol * np.maximum(np.abs(total), 1e-300)):
            return total
    raise ConvergenceError("0F1 array evaluation did not converge")


_ERFI_SERIES_CUTOFF = 10.0
_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


def _erfi_series(x: float) -> float:
    # Maclaurin series; all terms share the sign of x, so no cancellation.
    x2 = x * x
    term = x
    total = x
    k = 0
    while True:
        k += 1
        term *= x2 / k
        contrib = term / (2 * k + 1)
        total += contrib
        if abs(contrib) <= 1e-17 * abs(total):
            return _TWO_OVER_SQRT_PI * total


def _erfi_asymptotic_scaled(x: float) -> float:
    # exp(-x^2) * erfi(x) ~ (1/(x sqrt(pi))) * sum (2k-1)!! / (2 x^2)^k,
    # truncated at the smallest term.
    inv2x2 = 1.0 / (2.0 * x * x)
    term = 1.0
    total = 1.0
    for k in range(1, 60):
        nxt = term * (2 * k - 1) * inv2x2
        if abs(nxt) >= abs(term):
            break
        term = nxt
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total / (x * math.sqrt(math.pi))


def erfi(x: float) -> float:
    """Imaginary error function, odd in x.

    A Maclaurin series covers small arguments; beyond that the scaled
    asymptotic form is multiplied back by exp(x^2).
    """
    if x == 0.0:
        return 0.0
    if x < 0:
        return -erfi(-x)
    if x <= _ERFI_SERIES_CUTOFF:
        return _erfi_series(x)
    return math.exp(x * x) * _erfi_asymptotic_scaled(x)


def erfi_scaled(x: float) -> float:
    """exp(-x^2) * erfi(x), stable for large arguments."""
    if x == 0.0:
        return 0.0
    if x < 0:
        return -erfi_scaled(-x)
    if x <= _ERFI_SERIES_CUTOFF:
        return math.exp(-x * x) * _erfi_series(x)
    return _erfi_asymptotic_scaled(x)


def gauss_legendre_nodes(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to the interval [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _gauss_sum(f: Callable[[float], float], nodes: np.ndarray,
               weights: np.ndarray) -> float:
    total = 0.0
    for x, w in zip(nodes, weights):
        fx = f(float(x))
        if not math.isfinite(fx):
            raise EvaluationError(f"integrand returned {fx} at node {x}")
        total += w * fx
    return float(total)


def _richardson_limit(values: Sequence[float], exponents: Sequence[int]) -> tuple[float, float]:
    """Extrapolate f(eps) -> f(0) from samples at eps, eps/2, eps/4, ...

    ``exponents`` lists the powers of eps present in the error expansion,
    lowest first.  Returns the limit and a crude error estimate.
    """
    table = list(values)
    prev_last = table[-1]
    for level, e in enumerate(exponents):
        if len(table) < 2:
            break
        factor = 2.0**e
        table = [
            (factor * table[i + 1] - table[i]) / (factor - 1.0)
            for i in range(len(table) - 1)
        ]
    est = abs(table[-1] - prev_last)
    return table[-1], est


def _pv_symmetric(f: Callable[[float], float], center: float, a: float, b: float,
                  n: int) -> tuple[float, float]:
    """Principal value of f over [a, b] with a simple pole at ``center``.

    Symmetric-pair sums exclude an eps-ball around the pole; halving eps
    and Richardson-extrapolating in the odd powers of eps recovers the
    limit.  The leftover one-sided segment is pole-free and handled by
    plain Gauss-Legendre.
    """
    radius = min(center - a, b - center)

    def fold(t: float) -> float:
        return f(center + t) + f(center - t)

    eps0 = radius / 8.0
    samples = []
    for level in range(6):
        eps = eps0 / 2.0**level
        nodes, weights = gauss_legendre_nodes(eps, radius, n)
        samples.append(_gauss_sum(fold, nodes, weights))
    value, est = _richardson_limit(samples, exponents=[1, 3, 5, 7])

    if center - a < b - center:
        lo, hi = center + radius, b
    else:
        lo, hi = a, center - radius
    if hi > lo:
        nodes, weights = gauss_legendre_nodes(lo, hi, n)
        value += _gauss_sum(f, nodes, weights)
    return value, est


def integrate(f: Callable[[float], float], spec: QuadratureSpec) -> float:
    """Integrate ``f`` according to a quadrature specification.

    Gauss rules return plain weighted node sums.  The ``pv-symmetric``
    rule returns the Cauchy principal value around ``spec.center``.
    """
    a, b = spec.domain
    if spec.rule == "gauss-legendre":
        nodes, weights = gauss_legendre_nodes(a, b, spec.node_count)
        return _gauss_sum(f, nodes, weights)
    if spec.rule == "gauss-hermite":
        # f is the integrand divided by the Gaussian weight; (a, b) are
        # the weight's center and scale.
        center, scale = a, b
        t, w = np.polynomial.hermite.hermgauss(spec.node_count)
        total = 0.0
        for ti, wi in zip(t, w):
            fx = f(float(center + scale * ti))
            if not math.isfinite(fx):
                raise EvaluationError(f"integrand returned {fx} at node {ti}")
            total += wi * fx
        return float(scale * total)
    value, _ = _pv_symmetric(f, float(spec.center), a, b, spec.node_count)
    return value


def integrate_pv_with_error(f: Callable[[float], float],
                            spec: QuadratureSpec) -> tuple[float, float]:
    """Principal-value integral together with the extrapolation residual."""
    if spec.rule != "pv-symmetric":
        raise ValueError("error estimate is only defined for the pv-symmetric rule")
    a, b = spec.domain
    return _pv_symmetric(f, float(spec.center), a, b, spec.node_count)
