"""Wigner functions of Gaussian packets and arrival-time expectations.

Expectation values are phase-space integrals of an arrival-time function
against the Wigner function of the state.  The momentum integral carries
the 1/p singularity of arrival times and is taken as a principal value;
for the free particle it closes in terms of the imaginary error
function, and the quadrature route is kept fully independent of that
closed form so the two can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core_series import PhaseSeries, PolynomialPotential, series_eval
from .errors import ConvergenceError
from .specfun import (
    QuadratureSpec,
    erfi_scaled,
    gauss_legendre_nodes,
    integrate_pv_with_error,
)


@dataclass(frozen=True)
class GaussianState:
    """Gaussian wave packet: center q0, wave number k0, spread sigma."""

    q0: float
    k0: float
    sigma: float
    hbar: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0 or self.hbar <= 0 or self.mu <= 0:
            raise ValueError("sigma, hbar and mu must be strictly positive")

    @property
    def p0(self) -> float:
        return self.hbar * self.k0


@dataclass(frozen=True)
class ExpectationResult:
    value: float
    method: str
    est_error: float

    def __post_init__(self):
        if self.est_error < 0:
            raise ValueError("est_error must be non-negative")


def wigner_gaussian(state: GaussianState, q: float, p: float) -> float:
    """Wigner function of a Gaussian packet; Gaussian and positive."""
    dq = q - state.q0
    dp = p - state.p0
    return (
        math.exp(-dq * dq / (2.0 * state.sigma**2))
        * math.exp(-2.0 * state.sigma**2 * dp * dp / state.hbar**2)
        / (math.pi * state.hbar)
    )


@dataclass
class WignerGrid:
    q_nodes: tuple[float, ...]
    p_nodes: tuple[float, ...]
    values: np.ndarray
    est_error: float


def wigner_from_wavefunction(psi: Callable[[float], complex], hbar: float,
                             q_nodes: Sequence[float], p_nodes: Sequence[float],
                             half_width: float, node_count: int = 128) -> WignerGrid:
    """Wigner transform of a position-space wave function, by quadrature.

    Per output node the y-integral of psi*(q + y) psi(q - y) e^(2ipy/hbar)
    is evaluated with Gauss-Legendre over [-half_width, half_width].  The
    wave function must have decayed at the offset boundary; the largest
    boundary magnitude relative to the peak is reported in ``est_error``.
    """
    y, w = gauss_legendre_nodes(-half_width, half_width, node_count)
    peak = max(abs(psi(float(q))) for q in q_nodes)
    edge = 0.0
    values = np.empty((len(q_nodes), len(p_nodes)))
    for i, q in enumerate(q_nodes):
        left = np.array([psi(float(q) + float(t)) for t in y])
        right = np.array([psi(float(q) - float(t)) for t in y])
        edge = max(edge, abs(left[0]), abs(left[-1]), abs(right[0]), abs(right[-1]))
        corr = np.conj(left) * right
        for j, p in enumerate(p_nodes):
            phase = np.exp(2j * p * y / hbar)
            values[i, j] = float(np.real(np.dot(w, corr * phase))) / (math.pi * hbar)
    est = float(edge / peak) if peak > 0 else 0.0
    return WignerGrid(
        tuple(float(x) for x in q_nodes),
        tuple(float(x) for x in p_nodes),
        values,
        est_error=est,
    )


def toa_expectation(T: Callable[[float, float], float],
                    W: Callable[[float, float], float],
                    quad: QuadratureSpec, *,
                    q_domain: tuple[float, float],
                    q_node_count: int = 96) -> ExpectationResult:
    """Phase-space average of T against a Wigner evaluator.

    The momentum integral follows ``quad`` (a pv-symmetric rule whose
    pole sits at p = 0); per momentum node the position integral is a
    plain Gauss-Legendre sum over ``q_domain``.
    """
    if quad.rule != "pv-symmetric":
        raise ValueError("the momentum integral must use the pv-symmetric rule")
    q_nodes, q_weights = gauss_legendre_nodes(q_domain[0], q_domain[1], q_node_count)

    def marginal(p: float) -> float:
        total = 0.0
        for x, w in zip(q_nodes, q_weights):
            total += w * T(float(x), p) * W(float(x), p)
        return total

    value, est = integrate_pv_with_error(marginal, quad)
    if not math.isfinite(value):
        raise ConvergenceError("principal-value extrapolation did not converge")
    return ExpectationResult(value, "pv-quadrature", est)


@dataclass(frozen=True)
class FreeToaResult:
    """Closed-form free-particle expectation and its two factors.

    ``value = classical_factor * quantum_factor``; the quantum factor
    depends only on the product k0 * sigma and tends to 1 deep in the
    classical regime.  Both factors are NaN for k0 = 0, where the
    expectation itself vanishes by parity.
    """

    value: float
    classical_factor: float
    quantum_factor: float

    @property
    def quantum_factor_defined(self) -> bool:
        return not math.isnan(self.quantum_factor)


def quantum_arrival_factor(k0_sigma: float) -> float:
    """sqrt(2 pi) y e^(-2 y^2) erfi(sqrt(2) y) for y = k0 sigma."""
    x = math.sqrt(2.0) * k0_sigma
    return math.sqrt(2.0 * math.pi) * k0_sigma * erfi_scaled(x)


def free_toa_closed_form(state: GaussianState) -> FreeToaResult:
    """Expected free-particle arrival time of a Gaussian packet.

    -(mu q0 / p0) sqrt(2 pi) k0 sigma e^(-2 sigma^2 k0^2) erfi(sqrt(2) sigma k0),
    evaluated through the scaled erfi to stay finite at large k0 sigma.
    """
    if state.k0 == 0.0:
        return FreeToaResult(0.0, math.nan, math.nan)
    classical = -state.mu * state.q0 / state.p0
    quantum = quantum_arrival_factor(state.k0 * state.sigma)
    return FreeToaResult(classical * quantum, classical, quantum)


def free_toa_pv_quadrature(state: GaussianState, *, p_node_count: int = 160,
                           q_node_count: int = 96,
                           sigma_cover: float = 10.0) -> ExpectationResult:
    """Free-particle expectation by the independent quadrature route."""
    p_sigma = state.hbar / (2.0 * state.sigma)
    half = abs(state.p0) + sigma_cover * p_sigma
    quad = QuadratureSpec(
        "pv-symmetric", p_node_count, (-half, half), center=0.0
    )
    q_domain = (
        state.q0 - sigma_cover * state.sigma,
        state.q0 + sigma_cover * state.sigma,
    )

    def free_toa(q: float, p: float) -> float:
        return -state.mu * q / p

    def wigner(q: float, p: float) -> float:
        return wigner_gaussian(state, q, p)

    return toa_expectation(
        free_toa, wigner, quad, q_domain=q_domain, q_node_count=q_node_count
    )


def moyal_toa_expectation(series: PhaseSeries, V: PolynomialPotential,
                          state: GaussianState, *, node_count: int = 160,
                          sigma_cover: float = 8.0,
                          margin: float = 0.9) -> ExpectationResult:
    """Average of a graded arrival-time series for an interacting system.

    The series only converges where the potential drop along the path
    stays below the kinetic energy, so the integral runs over the grid
    points satisfying |V(q) - V(q')| < margin * p^2 / 2mu along the path;
    ``est_error`` carries the Wigner mass of the excluded region.  No
    regularization is attempted where the series diverges.
    """
    q_lo = state.q0 - sigma_cover * state.sigma
    q_hi = state.q0 + sigma_cover * state.sigma
    p_sigma = state.hbar / (2.0 * state.sigma)
    p_lo = state.p0 - sigma_cover * p_sigma
    p_hi = state.p0 + sigma_cover * p_sigma
    q_nodes, q_weights = gauss_legendre_nodes(q_lo, q_hi, node_count)
    p_nodes, p_weights = gauss_legendre_nodes(p_lo, p_hi, node_count)

    def in_region(q: float, p: float) -> bool:
        if p == 0.0:
            return False
        bound = margin * p * p / (2.0 * state.mu)
        vq = V.eval_float(q)
        samples = np.linspace(0.0, q, 24)
        return all(abs(vq - V.eval_float(float(x))) < bound for x in samples)

    value = 0.0
    excluded_mass = 0.0
    for q, wq in zip(q_nodes, q_weights):
        for p, wp in zip(p_nodes, p_weights):
            weight = wq * wp * wigner_gaussian(state, float(q), float(p))
            if in_region(float(q), float(p)):
                value += weight * series_eval(
                    series, float(q), float(p), state.hbar
                )
            else:
                excluded_mass += weight
    return ExpectationResult(value, "pv-quadrature", abs(excluded_mass))


def expectation_record(state: GaussianState, result) -> dict:
    """JSON-ready record of an expectation computation."""
    if isinstance(result, FreeToaResult):
        method, value, est = "closed-form", result.value, 0.0
    else:
        method, value, est = result.method, result.value, result.est_error
    return {
        "state": {
            "q0": state.q0,
            "k0": state.k0,
            "sigma": state.sigma,
            "hbar": state.hbar,
            "mu": state.mu,
        },
        "method": method,
        "value": value,
        "est_error": est,
    }
