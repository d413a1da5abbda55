"""Moyal-deformed quantum time of arrival for polynomial potentials.

Exact graded series construction, bracket and kernel verification,
Wigner-function expectation values and quartic-oscillator benchmarks.
"""

from .core_series import (
    BiPoly,
    PhaseSeries,
    PolynomialPotential,
    QPoly,
    Rational,
    rat,
    series_diff,
    series_eval,
)
from .classical_toa import (
    ArrivalStatus,
    ClassicalTOAResult,
    classical_toa_quadrature,
    ltoa_series,
    successive_approximation,
)
from .moyal_engine import (
    BracketReport,
    build_moyal_toa,
    check_time_reversal,
    exp_shift_apply,
    moyal_bracket,
    moyal_correction,
)
from .weyl_kernel import (
    KernelGrid,
    KernelSeries,
    inverse_weyl_roundtrip,
    kernel_T0_quadrature,
    kernel_Tn_quadrature,
    tke_residual,
    weyl_map_series,
)
from .expectation import (
    ExpectationResult,
    GaussianState,
    free_toa_closed_form,
    toa_expectation,
    wigner_from_wavefunction,
    wigner_gaussian,
)
from .quartic_bench import (
    QuarticParams,
    quartic_classical,
    quartic_correction_1,
    quartic_correction_2,
    quartic_correction_3,
    quartic_report,
)
from .specfun import HypergeomSpec, QuadratureSpec, erfi, hyp_pfq, integrate

__version__ = "0.1.0"
