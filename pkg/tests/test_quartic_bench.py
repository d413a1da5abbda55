import math
from fractions import Fraction as F

import pytest

from moyaltoa.classical_toa import classical_toa_quadrature, ltoa_series
from moyaltoa.core_series import PolynomialPotential, series_eval
from moyaltoa.errors import DomainError
from moyaltoa.moyal_engine import build_moyal_toa
from moyaltoa.quartic_bench import (
    QuarticParams,
    closed_form_term_z_coeffs,
    closed_form_truncated,
    closed_form_z_coeff,
    engine_z_coeff,
    eval_series_grade,
    export_quartic_csv,
    quartic_classical,
    quartic_correction_1,
    quartic_correction_2,
    quartic_correction_3,
    quartic_report,
    z_argument,
)

PARAMS = QuarticParams(lam=1.0)
QUARTIC = PolynomialPotential.from_coeffs([0, 0, 0, 0, 1])


def engine_series(lam=F(1), mu=F(1), n_max=3, k_max=21):
    V = PolynomialPotential.from_coeffs([0, 0, 0, 0, lam])
    return build_moyal_toa(V, mu, n_max, k_max)


def test_classical_reduces_to_free_at_zero_coupling():
    params = QuarticParams(lam=0.0)
    assert quartic_classical(params, -2.0, 1.0) == pytest.approx(2.0, rel=1e-15)
    assert quartic_correction_1(params, -2.0, 1.0) == 0.0


def test_classical_matches_quadrature():
    got = quartic_classical(PARAMS, -1.0, 3.0)
    ref = classical_toa_quadrature(QUARTIC, 1.0, -1.0, 3.0).value
    assert got == pytest.approx(ref, rel=1e-8)


def test_classical_matches_local_series_partial_sums():
    # k <= 20 partial sums at small |z|
    series = ltoa_series(QUARTIC, 1, k_max=41)
    for (q, p) in [(-0.8, 3.0), (-1.0, 4.0), (-0.6, 2.0)]:
        assert abs(z_argument(PARAMS, q, p)) <= 0.3
        got = quartic_classical(PARAMS, q, p)
        partial = series_eval(series, q, p, 1.0)
        assert got == pytest.approx(partial, rel=1e-10)


def test_classical_domain_error_when_bound():
    params = QuarticParams(lam=-1.0)
    with pytest.raises(DomainError):
        quartic_classical(params, -2.0, 1.0)  # 2|lam| q^4 / p^2 = 32


def test_correction1_zero_coupling_limit():
    assert closed_form_z_coeff(1, 0) == 2
    # z -> 0 leading behavior -2 mu^2 lam hbar^2 q^3 / p^5, exact in the engine
    series = engine_series()
    assert engine_z_coeff(series, F(1), 1, 0) == 2


def test_correction1_matches_engine_sample():
    series = engine_series()
    q, p = -0.5, 2.0  # z = -1/32, deep inside the region
    got = quartic_correction_1(PARAMS, q, p)
    eng = eval_series_grade(series, 1, PARAMS, q, p)
    assert got == pytest.approx(eng, rel=1e-8)


def test_correction_z_coefficients_match_engine_exactly():
    # every transcribed hypergeometric list agrees with the recursion,
    # coefficient by coefficient in z, as exact rationals
    lam = F(1)
    series = engine_series(lam=lam, k_max=29)
    for level in (0, 1, 2, 3):
        max_order = (29 - (4 * level + 1)) // 2
        for order in range(min(max_order, 6) + 1):
            assert engine_z_coeff(series, lam, level, order) \
                == closed_form_z_coeff(level, order), (level, order)


def test_correction_23_order_matched_evaluation():
    series = engine_series()
    q, p = -0.65, 1.35  # z ~ -0.196
    z = z_argument(PARAMS, q, p)
    assert abs(z) <= 0.2
    for level, orders in ((2, 6), (3, 4)):
        eng = eval_series_grade(series, level, PARAMS, q, p)
        closed = closed_form_truncated(level, PARAMS, q, p, orders)
        assert eng == pytest.approx(closed, rel=1e-6), level


def test_per_term_reporting_identifies_discrepancy():
    # perturb one transcription coefficient and confirm the per-term
    # breakdown pins the offender
    order = 2
    engine_side = engine_z_coeff(engine_series(), F(1), 2, order)
    terms = closed_form_term_z_coeffs(2, order)
    assert sum(terms) == engine_side
    perturbed = list(terms)
    perturbed[1] += F(1, 100)
    assert sum(perturbed) != engine_side
    blamed = [i for i, (a, b) in enumerate(zip(terms, perturbed)) if a != b]
    assert blamed == [1]


def test_corrections_odd_under_momentum_reversal():
    q, p = -0.7, 2.4
    for fn in (quartic_classical, quartic_correction_1, quartic_correction_2,
               quartic_correction_3):
        assert fn(PARAMS, q, -p) == pytest.approx(-fn(PARAMS, q, p), rel=1e-14)


def test_corrections_hbar_scaling_exact():
    q, p = -0.6, 2.0
    for level, fn in ((1, quartic_correction_1), (2, quartic_correction_2),
                      (3, quartic_correction_3)):
        v1 = fn(QuarticParams(lam=1.0, hbar=1.0), q, p)
        v2 = fn(QuarticParams(lam=1.0, hbar=2.0), q, p)
        assert v2 / v1 == 4.0**level  # exact in binary floats
        assert math.log2(v2 / v1) / 2 == level


def test_report_grid_accuracy():
    points = [(q, p) for q in (-0.4, -0.8, -1.2) for p in (4.0, 5.0, 7.0)]
    rows = quartic_report(PARAMS, points)
    assert len(rows) == 9 * 4
    for row in rows:
        assert row.status == "ok"
        if row.quantity in ("T_C", "T_1"):
            assert row.rel_dev < 1e-8, (row.quantity, row.q, row.p)


def test_report_flags_bound_states():
    params = QuarticParams(lam=-1.0)
    rows = quartic_report(params, [(-2.0, 1.0)])
    assert rows and all(r.status == "non-convergent" for r in rows)
    assert all(math.isnan(r.engine_value) for r in rows)


def test_report_empty_grid():
    assert quartic_report(PARAMS, []) == []


def test_report_csv_export(tmp_path):
    rows = quartic_report(PARAMS, [(-0.5, 3.0)])
    path = tmp_path / "quartic.csv"
    export_quartic_csv(rows, str(path))
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "q,p,quantity,engine_value,closed_form_value,rel_dev,status"
    assert len(lines) == 5
