"""Command-line entry point.

Subcommands drive the library end to end from a JSON configuration:
``series`` emits the exact graded series, ``verify`` runs the algebraic
check suite, ``expectation`` and ``quartic`` produce the comparison
tables, ``kernel`` samples kernel factors on a grid.

Exit codes: 0 on success, 1 when a verification check fails, 2 on a
malformed configuration.  Identical configurations produce byte-identical
artifacts: floats are printed with 17 significant digits, all iteration
orders are fixed, and files are written atomically.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .classical_toa import ltoa_series
from .core_series import (
    DEFAULT_K_MAX,
    DEFAULT_N_MAX,
    PhaseSeries,
    PolynomialPotential,
    rat,
)
from .errors import ConfigError
from .expectation import (
    GaussianState,
    expectation_record,
    free_toa_closed_form,
    free_toa_pv_quadrature,
)
from .moyal_engine import build_moyal_toa, check_time_reversal, moyal_bracket
from .quartic_bench import QuarticParams, QuarticRow, quartic_report
from .weyl_kernel import (
    check_kernel_boundary,
    export_kernel_grid_csv,
    inverse_weyl_roundtrip,
    kernel_grid_from_series,
    kernel_grid_quadrature,
    tke_residual,
    weyl_map_series,
)


def fmt(x: float) -> str:
    return f"{x:.17g}"


@dataclass
class RunConfig:
    potential: PolynomialPotential
    mu: Fraction
    hbar: float
    n_max: int
    k_max: int
    out_path: str | None
    out_format: str
    strict: bool
    command_block: dict[str, Any] = field(default_factory=dict)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def parse_config(raw: dict[str, Any], command: str, strict: bool,
                 out_override: str | None) -> RunConfig:
    _require(isinstance(raw, dict), "configuration must be a JSON object")
    coeffs = raw.get("potential")
    _require(isinstance(coeffs, list) and coeffs, "field 'potential' must be a nonempty list")
    parsed = []
    for i, c in enumerate(coeffs):
        try:
            parsed.append(rat(str(c)))
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"field 'potential[{i}]': cannot parse {c!r}: {exc}")
    try:
        mu = rat(str(raw.get("mu", "1")))
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"field 'mu': {exc}")
    _require(mu > 0, "field 'mu' must be positive")
    hbar = raw.get("hbar", 1.0)
    _require(isinstance(hbar, (int, float)) and hbar > 0, "field 'hbar' must be positive")
    n_max = raw.get("n_max", DEFAULT_N_MAX)
    k_max = raw.get("k_max", DEFAULT_K_MAX)
    _require(isinstance(n_max, int) and n_max >= 0, "field 'n_max' must be an integer >= 0")
    _require(isinstance(k_max, int) and k_max >= 1, "field 'k_max' must be an integer >= 1")
    output = raw.get("output", {})
    _require(isinstance(output, dict), "field 'output' must be an object")
    out_path = out_override or output.get("path")
    out_format = output.get("format", "json" if command in ("series", "verify") else "csv")
    _require(out_format in ("csv", "json"), "output format must be 'csv' or 'json'")
    block = raw.get(command, {})
    _require(isinstance(block, dict), f"field '{command}' must be an object")
    state = block.get("state")
    if state is not None:
        _require(isinstance(state, dict), "field 'state' must be an object")
        sigma = state.get("sigma", 1.0)
        _require(isinstance(sigma, (int, float)) and sigma > 0, "field 'state.sigma' must be positive")
    return RunConfig(
        potential=PolynomialPotential(tuple(parsed)),
        mu=mu,
        hbar=float(hbar),
        n_max=n_max,
        k_max=k_max,
        out_path=out_path,
        out_format=out_format,
        strict=strict,
        command_block=block,
    )


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".toa-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out_path:
        write_atomic(cfg.out_path, text)
    else:
        sys.stdout.write(text)


def _build_series(cfg: RunConfig) -> PhaseSeries:
    series = build_moyal_toa(cfg.potential, cfg.mu, cfg.n_max, cfg.k_max)
    inject = cfg.command_block.get("inject_corruption")
    if inject:
        # test hook: drop one grade so downstream checks must fail
        grade = inject if isinstance(inject, int) else 1
        entries = {k: v for k, v in series.entries.items() if k[0] != grade}
        series = PhaseSeries(entries, series.mu, series.n_max, series.k_max)
    return series


def series_document(cfg: RunConfig, series: PhaseSeries) -> dict:
    return {
        "metadata": {
            "potential": [str(c) for c in cfg.potential.coeffs],
            "mu": str(cfg.mu),
            "n_max": cfg.n_max,
            "k_max": cfg.k_max,
        },
        "entries": [
            {"n": n, "m": m, "coeffs": [str(c) for c in poly.coeffs]}
            for n, m, poly in series.terms()
        ],
    }


def cmd_series(cfg: RunConfig) -> int:
    series = _build_series(cfg)
    doc = series_document(cfg, series)
    _emit(cfg, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    series = _build_series(cfg)
    checks: list[dict[str, Any]] = []

    report = moyal_bracket(cfg.potential, cfg.mu, series)
    checks.append(
        {
            "name": "bracket-conjugacy",
            "passed": report.passed,
            "detail": {
                "constant_term": str(report.constant_term),
                "interior_residuals": len(report.interior_residuals()),
                "boundary_residuals": len(report.residual_entries)
                - len(report.interior_residuals()),
            },
        }
    )
    checks.append(
        {
            "name": "time-reversal",
            "passed": check_time_reversal(series),
            "detail": {"exponents": sorted(series.p_exponents(), reverse=True)},
        }
    )
    if cfg.potential.is_linear_system():
        collapsed = dict(series.entries) == dict(
            ltoa_series(cfg.potential, cfg.mu, cfg.k_max).entries
        )
        checks.append(
            {
                "name": "linear-system-collapse",
                "passed": collapsed,
                "detail": {"corrections_empty": collapsed},
            }
        )
    kernel = weyl_map_series(series)
    boundary = check_kernel_boundary(kernel)
    checks.append(
        {
            "name": "kernel-boundary-conditions",
            "passed": all(boundary.values()),
            "detail": boundary,
        }
    )
    residual = tke_residual(kernel, cfg.potential)
    checks.append(
        {
            "name": "time-kernel-equation",
            "passed": residual == 0.0,
            "detail": {"max_abs_residual": fmt(residual)},
        }
    )
    roundtrip = inverse_weyl_roundtrip(kernel)
    checks.append(
        {
            "name": "inverse-weyl-roundtrip",
            "passed": dict(roundtrip.entries) == dict(series.entries),
            "detail": {"entries": len(series.entries)},
        }
    )
    all_passed = all(c["passed"] for c in checks)
    doc = {"passed": all_passed, "checks": checks}
    _emit(cfg, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0 if all_passed else 1


def _state_from_block(cfg: RunConfig) -> GaussianState:
    state = cfg.command_block.get("state", {})
    return GaussianState(
        q0=float(state.get("q0", -10.0)),
        k0=float(state.get("k0", 5.0)),
        sigma=float(state.get("sigma", 1.0)),
        hbar=cfg.hbar,
        mu=float(cfg.mu),
    )


def cmd_expectation(cfg: RunConfig) -> int:
    state = _state_from_block(cfg)
    closed = free_toa_closed_form(state)
    if state.k0 == 0.0:
        pv_value, pv_err, rel_dev, status = 0.0, 0.0, 0.0, "ok"
    else:
        pv = free_toa_pv_quadrature(state)
        pv_value, pv_err = pv.value, pv.est_error
        scale = max(abs(closed.value), abs(pv_value), 1e-300)
        rel_dev = abs(closed.value - pv_value) / scale
        status = "ok"
    if cfg.out_format == "json":
        records = [
            expectation_record(state, closed),
            {
                **expectation_record(state, closed),
                "method": "pv-quadrature",
                "value": pv_value,
                "est_error": pv_err,
            },
        ]
        _emit(cfg, json.dumps(records, indent=2, sort_keys=True) + "\n")
    else:
        lines = [
            "q0,k0,sigma,hbar,mu,closed_form,pv_quadrature,rel_dev,status",
            f"{fmt(state.q0)},{fmt(state.k0)},{fmt(state.sigma)},{fmt(state.hbar)},"
            f"{fmt(state.mu)},{fmt(closed.value)},{fmt(pv_value)},{fmt(rel_dev)},{status}",
        ]
        _emit(cfg, "\n".join(lines) + "\n")
    if cfg.strict and rel_dev > float(cfg.command_block.get("tolerance", 1e-6)):
        return 1
    return 0


def cmd_quartic(cfg: RunConfig) -> int:
    block = cfg.command_block
    lam = block.get("lambda")
    if lam is None:
        # fall back to the quartic coefficient of the configured potential
        coeffs = cfg.potential.coeffs
        _require(len(coeffs) == 5 and coeffs[4] != 0,
                 "quartic command needs 'quartic.lambda' or a pure q^4 potential")
        lam = float(coeffs[4])
    _require(float(lam) != 0.0, "field 'quartic.lambda' must be nonzero")
    grid_q = block.get("grid_q", [-1.0])
    grid_p = block.get("grid_p", [3.0])
    _require(isinstance(grid_q, list) and isinstance(grid_p, list),
             "fields 'quartic.grid_q' and 'quartic.grid_p' must be lists")
    params = QuarticParams(lam=float(lam), mu=float(cfg.mu), hbar=cfg.hbar)
    points = [(float(q), float(p)) for q in grid_q for p in grid_p]
    rows = quartic_report(params, points, n_max=min(cfg.n_max, 3), k_max=cfg.k_max)
    text = _quartic_rows_text(rows)
    _emit(cfg, text)
    if cfg.strict and any(r.status != "ok" for r in rows):
        return 1
    return 0


def _quartic_rows_text(rows: list[QuarticRow]) -> str:
    lines = ["q,p,quantity,engine_value,closed_form_value,rel_dev,status"]
    for r in rows:
        lines.append(
            f"{fmt(r.q)},{fmt(r.p)},{r.quantity},{fmt(r.engine_value)},"
            f"{fmt(r.closed_form_value)},{fmt(r.rel_dev)},{r.status}"
        )
    return "\n".join(lines) + "\n"


def cmd_kernel(cfg: RunConfig) -> int:
    block = cfg.command_block
    grid_q = block.get("grid_q", [0.6, 0.8, 1.0, 1.2, 1.4])
    grid_p = block.get("grid_qprime", grid_q)
    routes = block.get("routes", ["series"])
    grades = block.get("grades", [0, 1])
    series = _build_series(cfg)
    kernel = weyl_map_series(series)
    workers = max(int(os.environ.get("TOA_THREADS", "1")), 1)
    grids = []
    for grade in grades:
        if "series" in routes:
            grids.append(
                kernel_grid_from_series(kernel, grid_q, grid_p, cfg.hbar,
                                        grade=grade, workers=workers)
            )
        if "quadrature" in routes:
            grids.append(
                kernel_grid_quadrature(
                    cfg.potential, float(cfg.mu), cfg.hbar, grid_q, grid_p, grade
                )
            )
    lines = ["q,qprime,grade,value,route"]
    for grid in grids:
        for i, q in enumerate(grid.q_nodes):
            for j, qp in enumerate(grid.qp_nodes):
                lines.append(
                    f"{fmt(q)},{fmt(qp)},{grid.grade},{fmt(grid.values[i, j])},{grid.route}"
                )
    _emit(cfg, "\n".join(lines) + "\n")
    return 0


COMMANDS = {
    "series": cmd_series,
    "verify": cmd_verify,
    "expectation": cmd_expectation,
    "quartic": cmd_quartic,
    "kernel": cmd_kernel,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="toa",
        description="Moyal-deformed time-of-arrival engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output artifact path")
        p.add_argument("--strict", action="store_true",
                       help="treat warnings and deviations as failures")
    args = parser.parse_args(argv)

    threads = os.environ.get("TOA_THREADS")
    if threads is not None:
        try:
            _require(int(threads) >= 1, "TOA_THREADS must be >= 1")
        except ValueError:
            print("error: TOA_THREADS must be an integer", file=sys.stderr)
            return 2

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(raw, args.command, args.strict, args.out)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
