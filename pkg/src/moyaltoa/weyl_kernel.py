"""Weyl mapping between phase-space series and time-kernel factors.

A graded series term c(q) p^(-a) (a odd) maps, through the distributional
identity for the Fourier transform of p^(-a), to the kernel-factor
contribution

    (-1)^((a+1)/2) * c(u/2) * v^(a-1) / (2 mu (a-1)!) * hbar^(1-a)

in the coordinates u = q + q', v = q - q'.  Collecting powers of
1/hbar^2 gives a ladder of pure rational bivariate polynomials; the
overall mu/(i hbar) sgn(q - q') prefactor of the full coordinate kernel
is a presentation convention and is never stored.

The same factors can be reached by nested quadrature: the closed
hypergeometric form for the leading factor and a recursion in the grade
for the corrections.  Keeping both routes independent turns their
agreement, the kernel boundary conditions and the grade-wise kernel
differential equation into checkable statements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .core_series import BiPoly, PhaseSeries, PolynomialPotential, QPoly, rat
from .errors import GradingError
from .specfun import _hyp0f1_regular_array, gauss_legendre_nodes


@dataclass(frozen=True)
class KernelSeries:
    """Kernel factor as a ladder of bivariate polynomials in (u, v).

    ``grades[j]`` multiplies hbar^(-2j); hbar never appears numerically
    inside the polynomials (``hbar_symbolic``).  Every polynomial is even
    in v, so the stored factor times sgn(v) is odd, as hermiticity and
    time-reversal demand.
    """

    grades: Mapping[int, BiPoly]
    mu: Fraction
    source_n_max: int
    k_max: int
    hbar_symbolic: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mu", rat(self.mu))
        clean = {}
        for j, poly in self.grades.items():
            if poly.is_zero():
                continue
            if not poly.is_even_in_y():
                raise GradingError(f"kernel grade {j} is not even in v")
            clean[j] = poly
        object.__setattr__(self, "grades", clean)

    def grade(self, j: int) -> BiPoly:
        return self.grades.get(j, BiPoly.zero())

    def eval_total(self, q: float, qp: float, hbar: float) -> float:
        """Numeric kernel factor T(q, q') with all inverse-hbar^2 powers summed."""
        u, v = q + qp, q - qp
        total = 0.0
        for j in sorted(self.grades):
            total += hbar ** (-2 * j) * self.grades[j].eval_float(u, v)
        return total

    def eval_source_grade(self, n: int, q: float, qp: float, hbar: float) -> float:
        """Numeric image of the single series grade n.

        Within kernel grade j, the part with v-power 2(j + n) descends
        from series grade n, so the split is unambiguous.
        """
        u, v = q + qp, q - qp
        total = 0.0
        for j in sorted(self.grades):
            beta = 2 * (j + n)
            part = sum(
                float(c) * u**i * v**bb
                for (i, bb), c in sorted(self.grades[j].coeffs.items())
                if bb == beta
            )
            total += hbar ** (-2 * j) * part
        return total


def weyl_map_series(T: PhaseSeries) -> KernelSeries:
    """Kernel factors of a graded phase-space series, exactly.

    Requires odd negative momentum exponents throughout; an even exponent
    has no sgn-kernel image of the stored form and raises.
    """
    grades: dict[int, BiPoly] = {}
    for n, m, poly in T.terms():
        a = -m
        if a % 2 == 0:
            raise GradingError(f"even momentum exponent {m} has no kernel image")
        k = (a - 1) // 2
        j = k - n
        if j < 0:
            raise GradingError(f"entry ({n}, {m}) violates the grade structure")
        scale = Fraction((-1) ** (k + 1), 2 * math.factorial(2 * k)) / T.mu
        contrib = BiPoly.from_x_poly(poly.stretch_arg(Fraction(1, 2))).shift_y_power(
            2 * k
        ).scale(scale)
        grades[j] = grades.get(j, BiPoly.zero()) + contrib
    return KernelSeries(grades, T.mu, T.n_max, T.k_max)


def inverse_weyl_roundtrip(K: KernelSeries) -> PhaseSeries:
    """Invert the kernel map back to the graded phase-space series.

    Each monomial u^alpha v^(2k) in inverse-hbar^2 grade j restores the
    series entry at grade k - j with momentum exponent -(2k + 1).  Odd
    v-powers, or monomials that would need a negative series grade, have
    no preimage and raise.
    """
    entries: dict[tuple[int, int], dict[int, Fraction]] = {}
    for j in sorted(K.grades):
        for (alpha, beta), coeff in sorted(K.grades[j].coeffs.items()):
            if beta % 2 != 0:
                raise GradingError("v-odd kernel term is non-invertible")
            k = beta // 2
            n = k - j
            if n < 0:
                raise GradingError(
                    f"kernel monomial u^{alpha} v^{beta} at grade {j} has no preimage"
                )
            c = coeff * (-1) ** (k + 1) * 2 * K.mu * math.factorial(2 * k) * 2**alpha
            slot = entries.setdefault((n, -(2 * k + 1)), {})
            slot[alpha] = slot.get(alpha, Fraction(0)) + c
    series_entries = {}
    for key, coeff_map in entries.items():
        coeffs = [Fraction(0)] * (max(coeff_map) + 1)
        for power, c in coeff_map.items():
            coeffs[power] = c
        poly = QPoly(coeffs)
        if not poly.is_zero():
            series_entries[key] = poly
    return PhaseSeries(series_entries, mu=K.mu, n_max=K.source_n_max, k_max=K.k_max)


def check_kernel_boundary(K: KernelSeries) -> dict[str, bool]:
    """Boundary and symmetry conditions, checked exactly on the ladder.

    On the diagonal (v = 0) only the leading grade survives and must be
    u/4, i.e. T(q, q) = q/2; on the antidiagonal (u = 0) the factor must
    vanish; evenness in v is symmetry under q <-> q'.
    """
    diag = True
    for j, poly in K.grades.items():
        v0 = {i: c for (i, bb), c in poly.coeffs.items() if bb == 0}
        if j == 0:
            diag = diag and v0 == {1: Fraction(1, 4)}
        else:
            diag = diag and not v0
    antidiag = all(poly.min_x_power() >= 1 for poly in K.grades.values())
    symmetric = all(poly.is_even_in_y() for poly in K.grades.values())
    return {
        "diagonal_q_half": diag,
        "antidiagonal_zero": antidiag,
        "symmetric_qqprime": symmetric,
    }


# ---------------------------------------------------------------------------
# quadrature route


def _delta_v_half(V: PolynomialPotential, u: float, s: np.ndarray) -> np.ndarray:
    return V.eval_float(u / 2.0) - np.array([V.eval_float(float(x) / 2.0) for x in s])


def kernel_T0_quadrature(V: PolynomialPotential, mu: float, hbar: float,
                         q: float, qp: float, node_count: int = 64) -> float:
    """Leading kernel factor by its closed hypergeometric form.

    (1/4) * integral_0^(q+q') 0F1(; 1; (mu/2 hbar^2)(q-q')^2 [V((q+q')/2) - V(s/2)]) ds
    """
    u, v = q + qp, q - qp
    if u == 0.0:
        return 0.0
    nodes, weights = gauss_legendre_nodes(0.0, u, node_count)
    z = (mu / (2.0 * hbar**2)) * v * v * _delta_v_half(V, u, nodes)
    vals = _hyp0f1_regular_array(1.0, z)
    return 0.25 * float(np.dot(weights, vals))


def _g_weight(V: PolynomialPotential, mu: float, hbar: float, u: float, v: float,
              s: np.ndarray, w: np.ndarray) -> np.ndarray:
    """0F1 weight coupling the outer coordinates to the inner ones."""
    z = (mu / (2.0 * hbar**2)) * np.subtract.outer(
        np.full(len(s), v * v), w * w
    )
    z *= _delta_v_half(V, u, s)[:, None]
    return _hyp0f1_regular_array(1.0, z)


def kernel_Tn_quadrature(V: PolynomialPotential, mu: float, hbar: float, n: int,
                         q: float, qp: float,
                         prior: Sequence[Callable[[float, float], float]],
                         node_count: int = 64) -> float:
    """Grade-n kernel factor by the nested quadrature recursion.

    ``prior[k]`` must evaluate the grade-k factor at inner coordinates
    (s, w); the recursion weighs it with w^(2r+1), the odd potential
    derivative at s/2 and the hypergeometric coupling weight.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(prior) < n:
        raise ValueError(f"need prior factors for grades 0..{n - 1}")
    u, v = q + qp, q - qp
    if u < 0:
        raise ValueError("quadrature route requires q + q' >= 0")
    if u == 0.0 or v == 0.0:
        return 0.0
    s_nodes, s_weights = gauss_legendre_nodes(0.0, u, node_count)
    w_nodes, w_weights = gauss_legendre_nodes(0.0, v, node_count)
    total = 0.0
    for r in range(1, n + 1):
        order = 2 * r + 1
        if order > V.degree:
            break
        v_deriv = V.derivative(order)
        deriv_vals = np.array(
            [v_deriv.eval_float(float(s) / 2.0) for s in s_nodes]
        )
        g_vals = _g_weight(V, mu, hbar, u, v, s_nodes, w_nodes)
        source = prior[n - r]
        if hasattr(source, "eval_mesh"):
            inner_vals = source.eval_mesh(s_nodes, w_nodes)
        else:
            inner_vals = np.array(
                [[source(float(s), float(w)) for w in w_nodes] for s in s_nodes]
            )
        w_pow = w_nodes**order
        inner = (g_vals * inner_vals) @ (w_weights * w_pow)
        contrib = float(np.dot(s_weights, deriv_vals * inner))
        total += contrib / (math.factorial(order) * 2 ** (2 * r))
    return (mu / (2.0 * hbar**2)) * total


def _chebyshev_nodes(a: float, b: float, count: int) -> np.ndarray:
    k = np.arange(count)
    x = np.cos(np.pi * k / (count - 1))
    return 0.5 * (a + b) + 0.5 * (b - a) * x


class _Barycentric2D:
    """Polynomial interpolation on a tensor Chebyshev grid.

    Exact for polynomials up to the grid degree and numerically stable on
    Chebyshev points; queries clamp w to |w| because every kernel factor
    is even in the second coordinate.
    """

    def __init__(self, s_nodes: np.ndarray, w_nodes: np.ndarray,
                 values: np.ndarray):
        self.s_nodes = s_nodes
        self.w_nodes = w_nodes
        self.values = values
        self.s_weights = self._weights(s_nodes)
        self.w_weights = self._weights(w_nodes)

    @staticmethod
    def _weights(nodes: np.ndarray) -> np.ndarray:
        n = len(nodes)
        w = np.ones(n)
        w[1::2] = -1.0
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @staticmethod
    def _basis(x: float, nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
        diff = x - nodes
        hit = np.where(diff == 0.0)[0]
        basis = np.zeros(len(nodes))
        if len(hit):
            basis[hit[0]] = 1.0
            return basis
        basis = weights / diff
        return basis / basis.sum()

    def __call__(self, s: float, w: float) -> float:
        bs = self._basis(s, self.s_nodes, self.s_weights)
        bw = self._basis(abs(w), self.w_nodes, self.w_weights)
        return float(bs @ self.values @ bw)

    def eval_mesh(self, s: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Values on the tensor mesh s x w, one matrix product per axis."""
        bs = np.array([self._basis(float(x), self.s_nodes, self.s_weights)
                       for x in s])
        bw = np.array([self._basis(abs(float(x)), self.w_nodes, self.w_weights)
                       for x in w])
        return bs @ self.values @ bw.T


def make_kernel_evaluators(V: PolynomialPotential, mu: float, hbar: float,
                           levels: int, u_max: float, v_max: float,
                           cheb_degree: int = 24,
                           node_count: int = 48) -> list[Callable[[float, float], float]]:
    """Memoized evaluators for the kernel factors of grades 0..levels.

    Each grade is sampled on a Chebyshev tensor grid over
    [0, u_max] x [0, v_max] and wrapped in a barycentric interpolant;
    grade n consumes the interpolants of the lower grades, capping the
    quadrature nesting depth at two levels regardless of n.  Negative w
    is served through the even symmetry of the factors.
    """
    count = cheb_degree + 1
    s_nodes = _chebyshev_nodes(0.0, u_max, count)
    w_nodes = _chebyshev_nodes(0.0, v_max, count)
    evaluators: list[Callable[[float, float], float]] = []
    for n in range(levels + 1):
        values = np.empty((count, count))
        for i, s in enumerate(s_nodes):
            for j, w in enumerate(w_nodes):
                point_q = float(s) / 2.0 + float(w) / 2.0
                point_qp = float(s) / 2.0 - float(w) / 2.0
                if n == 0:
                    values[i, j] = kernel_T0_quadrature(
                        V, mu, hbar, point_q, point_qp, node_count
                    )
                else:
                    values[i, j] = kernel_Tn_quadrature(
                        V, mu, hbar, n, point_q, point_qp, evaluators,
                        node_count,
                    )
        evaluators.append(_Barycentric2D(s_nodes, w_nodes, values))
    return evaluators


# ---------------------------------------------------------------------------
# kernel differential equation


def _delta_v_uv(V: PolynomialPotential) -> BiPoly:
    """V((u+v)/2) - V((u-v)/2) as an exact bivariate polynomial."""
    p = V.as_qpoly()
    half = Fraction(1, 2)
    return p.subs_sum_scaled(half, half) - p.subs_sum_scaled(half, -half)


def tke_grade_residuals(K: KernelSeries, V: PolynomialPotential) -> dict[int, BiPoly]:
    """Exact residuals of the kernel equation, one per resolved grade pair.

    In (u, v) coordinates the equation reads
        -(2 hbar^2 / mu) d^2 T / du dv + [V((u+v)/2) - V((u-v)/2)] T = 0,
    which ladders grade i of the potential term against grade i+1 of the
    derivative term.  Grades are resolved while every contributing series
    entry fits inside the cutoffs.
    """
    delta = _delta_v_uv(V)
    i_top = min(K.source_n_max, (K.k_max - 1) // 4)
    residuals: dict[int, BiPoly] = {}
    residuals[-1] = K.grade(0).dx().dy().scale(Fraction(-2) / K.mu)
    for i in range(i_top):
        r = K.grade(i + 1).dx().dy().scale(Fraction(-2) / K.mu) + delta * K.grade(i)
        residuals[i] = r
    return residuals


@dataclass
class KernelGrid:
    """Kernel factor sampled on a rectangular (q, q') grid."""

    q_nodes: tuple[float, ...]
    qp_nodes: tuple[float, ...]
    values: np.ndarray
    route: str
    grade: str = "total"


def kernel_grid_from_series(K: KernelSeries, q_nodes: Sequence[float],
                            qp_nodes: Sequence[float], hbar: float,
                            grade: int | None = None,
                            workers: int = 1) -> KernelGrid:
    def row(q: float) -> list[float]:
        if grade is None:
            return [K.eval_total(q, qp, hbar) for qp in qp_nodes]
        return [K.eval_source_grade(grade, q, qp, hbar) for qp in qp_nodes]

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, q_nodes))
    else:
        rows = [row(q) for q in q_nodes]
    values = np.array(rows)
    return KernelGrid(
        tuple(float(x) for x in q_nodes),
        tuple(float(x) for x in qp_nodes),
        values,
        route="series-route",
        grade="total" if grade is None else str(grade),
    )


def kernel_grid_quadrature(V: PolynomialPotential, mu: float, hbar: float,
                           q_nodes: Sequence[float], qp_nodes: Sequence[float],
                           grade: int, node_count: int = 64,
                           cheb_degree: int = 24) -> KernelGrid:
    u_max = max(q + qp for q in q_nodes for qp in qp_nodes)
    v_max = max(abs(q - qp) for q in q_nodes for qp in qp_nodes)
    values = np.empty((len(q_nodes), len(qp_nodes)))
    if grade == 0:
        for i, q in enumerate(q_nodes):
            for j, qp in enumerate(qp_nodes):
                values[i, j] = kernel_T0_quadrature(V, mu, hbar, q, qp, node_count)
    else:
        evaluators = make_kernel_evaluators(
            V, mu, hbar, grade - 1, u_max, max(v_max, 1e-9), cheb_degree,
            node_count,
        )
        for i, q in enumerate(q_nodes):
            for j, qp in enumerate(qp_nodes):
                values[i, j] = kernel_Tn_quadrature(
                    V, mu, hbar, grade, q, qp, evaluators, node_count
                )
    return KernelGrid(
        tuple(float(x) for x in q_nodes),
        tuple(float(x) for x in qp_nodes),
        values,
        route="quadrature-route",
        grade=str(grade),
    )


def _uniform_step(nodes: Sequence[float]) -> float:
    steps = np.diff(nodes)
    if len(steps) == 0 or not np.allclose(steps, steps[0], rtol=1e-9):
        raise ValueError("finite differences need a uniform grid")
    return float(steps[0])


def tke_residual(K, V: PolynomialPotential, mu: float | None = None,
                 hbar: float | None = None) -> float:
    """Maximum absolute residual of the kernel equation.

    A ``KernelSeries`` is differentiated exactly and the result is the
    largest residual coefficient over the resolved grades (zero when the
    ladder closes).  A ``KernelGrid`` is checked by second-order central
    differences on its interior nodes, which needs numeric mu, hbar and
    at least three interior nodes per direction.
    """
    if isinstance(K, KernelSeries):
        residuals = tke_grade_residuals(K, V)
        return float(max(r.max_abs_coeff() for r in residuals.values()))
    if mu is None or hbar is None:
        raise ValueError("grid residuals need numeric mu and hbar")
    grid: KernelGrid = K
    nq, nqp = grid.values.shape
    if nq < 5 or nqp < 5:
        raise ValueError("grid too small: need at least 3 interior nodes")
    hq = _uniform_step(grid.q_nodes)
    hqp = _uniform_step(grid.qp_nodes)
    t = grid.values
    worst = 0.0
    for i in range(1, nq - 1):
        for j in range(1, nqp - 1):
            d2q = (t[i + 1, j] - 2 * t[i, j] + t[i - 1, j]) / hq**2
            d2qp = (t[i, j + 1] - 2 * t[i, j] + t[i, j - 1]) / hqp**2
            delta = V.eval_float(grid.q_nodes[i]) - V.eval_float(grid.qp_nodes[j])
            res = -(hbar**2 / (2 * mu)) * d2q + (hbar**2 / (2 * mu)) * d2qp \
                + delta * t[i, j]
            worst = max(worst, abs(res))
    return worst


def export_kernel_grid_csv(grids: Sequence[KernelGrid], path: str) -> None:
    """Write sampled kernels as CSV rows q, qprime, grade, value, route."""
    lines = ["q,qprime,grade,value,route"]
    for grid in grids:
        for i, q in enumerate(grid.q_nodes):
            for j, qp in enumerate(grid.qp_nodes):
                lines.append(
                    f"{q:.17g},{qp:.17g},{grid.grade},"
                    f"{grid.values[i, j]:.17g},{grid.route}"
                )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
