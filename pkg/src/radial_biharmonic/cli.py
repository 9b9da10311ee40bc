"""Command-line front end: single verification runs and (n, alpha) sweeps.

Single case::

    python -m radial_biharmonic --n 3 --alpha 0.5 --u0 1 --lap0 1 --verify

Sweep over a flat ``key = value`` config (repeated keys make lists)::

    python -m radial_biharmonic sweep --config scripts/table1.cfg --jobs 4

Exit codes: 0 verified, 1 verification failure, 2 usage error or refused
regime, 3 integration failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .asymptotics import RegimeTag, classify, predicted_law
from .extraction import (
    FitModel,
    FunctionalValues,
    LimitEstimate,
    RatioSeries,
    Weight,
    estimate_limit,
    intermediate_limits,
    ratio_series,
    tail_integral,
)
from .integrator import IntegratorControls, Trajectory, integrate, integrate_linear_renormalized
from .oracle import OracleError, PicardConfig, picard_solve
from .series import OriginData, Problem

__all__ = [
    "CaseReport",
    "CaseSpec",
    "EXIT_FAIL",
    "EXIT_INTEGRATION",
    "EXIT_OK",
    "EXIT_USAGE",
    "CSV_COLUMNS",
    "default_band",
    "default_fit",
    "default_rmax",
    "main",
    "parse_config",
    "parse_real",
    "report_to_csv",
    "report_to_json",
    "run_case",
    "run_sweep",
]

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTEGRATION = 0, 1, 2, 3

CSV_COLUMNS = (
    "n",
    "alpha",
    "regime",
    "law_form",
    "predicted_constant",
    "estimated_constant",
    "rel_error",
    "band",
    "pass",
    "termination",
    "rmax",
    "seconds",
)

FIT_ALIASES = {
    "last": FitModel.LAST_VALUE,
    "invlog": FitModel.INVERSE_LOG,
    "power": FitModel.POWER_CORRECTION,
    "aitken": FitModel.AITKEN,
}

LOG_CRITICAL_BAND = 0.10
INTERMEDIATE_BAND = 0.05
ORACLE_RADIUS = 5.0
ORACLE_TOL = 1e-8

# intermediate ratios that carry the tight band; the others are reported only
CHECKED_INTERMEDIATES = {
    "lap_over_F",
    "u_over_r2F",
    "u_over_Gr2logr",
    "u_over_r3H",
}


class UsageError(ValueError):
    pass


def parse_real(text: str) -> float:
    """Accept decimals, exponents and fractions such as ``-1/3``."""
    text = text.strip()
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a real number: {text!r}") from None


def default_rmax(n: int, alpha: float) -> float:
    tag = classify(n, alpha).tag
    if tag is RegimeTag.EXP_GROWTH:
        return 800.0
    if tag is RegimeTag.LOG_CRITICAL:
        return 1e6
    if tag is RegimeTag.SOLUTION_DEPENDENT:
        return 1e6 if n == 2 else 1e5
    return 1e4


def default_fit(n: int, alpha: float) -> FitModel:
    tag = classify(n, alpha).tag
    if tag is RegimeTag.EXP_GROWTH:
        return FitModel.LAST_VALUE
    if tag is RegimeTag.LOG_CRITICAL or (tag is RegimeTag.SOLUTION_DEPENDENT and n == 2):
        return FitModel.INVERSE_LOG
    return FitModel.POWER_CORRECTION


def default_band(n: int, alpha: float) -> float:
    tag = classify(n, alpha).tag
    if tag is RegimeTag.EXP_GROWTH:
        return 1e-6
    if tag is RegimeTag.LOG_CRITICAL:
        return LOG_CRITICAL_BAND
    if tag is RegimeTag.SOLUTION_DEPENDENT and n == 2:
        return 0.02
    return 1e-3


@dataclass(frozen=True)
class CaseSpec:
    """Everything that determines one run."""

    n: int
    alpha: float
    u0: float = 1.0
    lap0: float = 0.0
    rmax: float | None = None
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    fit: FitModel | None = None
    oracle: bool = False

    def resolved_rmax(self) -> float:
        return self.rmax if self.rmax is not None else default_rmax(self.n, self.alpha)

    def resolved_fit(self) -> FitModel:
        return self.fit if self.fit is not None else default_fit(self.n, self.alpha)


@dataclass
class CaseReport:
    """Outcome of one pipeline run; emitted even when integration fails."""

    problem: dict[str, Any]
    origin: dict[str, Any]
    regime: str
    law: dict[str, Any] | None = None
    limit_estimates: dict[str, Any] = field(default_factory=dict)
    functionals: dict[str, Any] | None = None
    oracle: dict[str, Any] | None = None
    termination: str = ""
    rmax: float = math.nan
    verified: bool = False
    exit_code: int = EXIT_OK
    message: str = ""
    wall_time: float = 0.0
    ratio_table: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "problem": self.problem,
            "origin": self.origin,
            "regime": self.regime,
            "law": self.law,
            "limit_estimates": self.limit_estimates,
            "functionals": self.functionals,
            "oracle": self.oracle,
            "termination": self.termination,
            "rmax": self.rmax,
            "verified": self.verified,
            "exit_code": self.exit_code,
            "message": self.message,
            "wall_time": self.wall_time,
        }

    def csv_row(self) -> dict[str, Any]:
        head = self.limit_estimates.get("headline") or {}
        return {
            "n": self.problem["n"],
            "alpha": self.problem["alpha"],
            "regime": self.regime,
            "law_form": (self.law or {}).get("form", ""),
            "predicted_constant": head.get("predicted_constant", math.nan),
            "estimated_constant": head.get("estimated_constant", math.nan),
            "rel_error": head.get("rel_error", math.nan),
            "band": head.get("band", math.nan),
            "pass": self.verified,
            "termination": self.termination,
            "rmax": self.rmax,
            "seconds": self.wall_time,
        }


# ----------------------------------------------------------------------------
# serialisation


def _fmt_real(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def _dump(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_real(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_dump(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON with every real written to 17 significant digits; non-finite reals become null."""
    return _dump(obj, indent, 0) + "\n"


def report_to_json(reports: CaseReport | Sequence[CaseReport]) -> str:
    if isinstance(reports, CaseReport):
        return dumps(reports.to_dict())
    return dumps({"schema": SCHEMA, "cases": [r.to_dict() for r in reports]})


def _csv_cell(v: Any) -> str:
    if isinstance(v, bool):
        return "pass" if v else "fail"
    if isinstance(v, float):
        return "" if not math.isfinite(v) else format(v, ".17g")
    return str(v)


def report_to_csv(reports: CaseReport | Sequence[CaseReport]) -> str:
    if isinstance(reports, CaseReport):
        reports = [reports]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_COLUMNS)
    for rep in reports:
        row = rep.csv_row()
        writer.writerow([_csv_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# pipeline


def _estimate_dict(est: LimitEstimate) -> dict[str, Any]:
    return {
        "model": est.model.value,
        "value": est.value,
        "uncertainty": est.uncertainty,
        "tail_min": est.tail_min,
        "tail_max": est.tail_max,
    }


def _functionals_dict(fv: FunctionalValues) -> dict[str, Any]:
    return {
        "D": fv.D,
        "N": fv.N,
        "finite_part": fv.finite_part,
        "tail_part": fv.tail_part,
        "tail_model_exponent": fv.tail_model_exponent,
        "error_estimate": fv.error_estimate,
    }


def _oracle_check(traj: Trajectory, problem: Problem, origin: OriginData) -> dict[str, Any]:
    R = min(ORACLE_RADIUS, traj.r_end)
    try:
        orc = picard_solve(problem, origin, PicardConfig(R=R))
    except OracleError as exc:
        return {"status": "error", "message": str(exc), "pass": False}
    r = orc.r
    mine = traj.evaluate(r)[:, 0]
    sup_u = float(np.max(np.abs(orc.u)))
    diff = float(np.max(np.abs(mine - orc.u)))
    tol = ORACLE_TOL * (1.0 + sup_u)
    return {
        "status": "ok",
        "R": orc.meta["R"],
        "iterations": orc.meta["iterations"],
        "sup_diff": diff,
        "tolerance": tol,
        "pass": diff <= tol,
    }


def run_case(spec: CaseSpec) -> CaseReport:
    """classify -> integrate -> functionals -> law -> ratios -> limits (-> oracle)."""
    t0 = time.perf_counter()
    n, alpha = spec.n, spec.alpha
    regime = classify(n, alpha)
    report = CaseReport(
        problem={"n": n, "alpha": alpha},
        origin={"u0": spec.u0, "lap0": spec.lap0},
        regime=regime.tag.value,
    )
    if regime.tag.catalog_only:
        report.exit_code = EXIT_USAGE
        report.message = f"regime {regime.tag.value}, integration refused (alpha > 1)"
        report.termination = "Refused"
        report.wall_time = time.perf_counter() - t0
        return report

    problem = Problem(n, alpha)
    origin = OriginData(spec.u0, spec.lap0)
    rmax = spec.resolved_rmax()
    controls = IntegratorControls(rel_tol=spec.rel_tol, abs_tol=spec.abs_tol, rmax=rmax)
    report.rmax = rmax
    if regime.tag is RegimeTag.EXP_GROWTH:
        traj = integrate_linear_renormalized(n, origin, controls)
    else:
        traj = integrate(problem, origin, controls)
    report.termination = str(traj.termination)

    if spec.oracle:
        report.oracle = _oracle_check(traj, problem, origin)

    if not traj.termination.ok:
        report.exit_code = EXIT_INTEGRATION
        report.message = f"integration stopped: {traj.termination}"
        report.wall_time = time.perf_counter() - t0
        return report

    D = N = None
    if regime.tag is RegimeTag.SOLUTION_DEPENDENT:
        try:
            fv = tail_integral(traj, Weight.PLAIN if n == 1 else Weight.TIMES_T)
        except ValueError as exc:
            report.exit_code = EXIT_INTEGRATION
            report.message = f"functional failed: {exc}"
            report.wall_time = time.perf_counter() - t0
            return report
        report.functionals = _functionals_dict(fv)
        D, N = fv.D, fv.N

    law = predicted_law(problem, origin, D=D, N=N)
    report.law = {
        "form": law.form.value,
        "exponent": law.exponent,
        "constant_source": law.constant_source,
        "constant": law.constant,
    }
    if law.constant is None or not law.constant > 0:
        report.exit_code = EXIT_FAIL
        report.message = "predicted constant is not positive"
        report.wall_time = time.perf_counter() - t0
        return report

    series = ratio_series(traj, law)
    report.ratio_table = list(series)
    fit = spec.resolved_fit()
    est = estimate_limit(series, fit)
    band = default_band(n, alpha)
    rel = abs(est.value - 1.0)
    head = _estimate_dict(est)
    head.update(
        predicted_constant=law.constant,
        estimated_constant=est.value * law.constant,
        rel_error=rel,
        band=band,
        band_source="engineering choice (no convergence rate is known)",
        **{"pass": rel <= band},
    )
    report.limit_estimates["headline"] = head
    ok = rel <= band

    if regime.tag is RegimeTag.LOG_CRITICAL:
        inter = intermediate_limits(traj, fit)
        rows = []
        for name, lim in inter.limits.items():
            checked = name in CHECKED_INTERMEDIATES
            passed = lim.rel_error <= INTERMEDIATE_BAND
            row = _estimate_dict(lim.estimate)
            row.update(
                name=name,
                target=lim.target,
                rel_error=lim.rel_error,
                band=INTERMEDIATE_BAND,
                checked=checked,
                **{"pass": passed},
            )
            rows.append(row)
            if checked:
                ok = ok and passed
        report.limit_estimates["intermediates"] = rows
        report.limit_estimates["composed_headline"] = {
            "value": inter.composed_headline,
            "uncertainty": inter.composed_uncertainty,
            "rel_error": abs(inter.composed_headline / law.constant - 1.0),
        }
    if report.oracle is not None:
        ok = ok and bool(report.oracle["pass"])
    report.verified = ok
    report.exit_code = EXIT_OK if ok else EXIT_FAIL
    report.wall_time = time.perf_counter() - t0
    return report


# ----------------------------------------------------------------------------
# sweep config


_CONFIG_KEYS = {"n", "alpha", "u0", "lap0", "rmax", "rel_tol", "abs_tol", "fit", "oracle", "case"}


def _case_from_pairs(pairs: dict[str, str]) -> CaseSpec:
    try:
        fit = pairs.get("fit")
        return CaseSpec(
            n=int(pairs["n"]),
            alpha=parse_real(pairs["alpha"]),
            u0=parse_real(pairs.get("u0", "1")),
            lap0=parse_real(pairs.get("lap0", "0")),
            rmax=parse_real(pairs["rmax"]) if "rmax" in pairs else None,
            rel_tol=parse_real(pairs.get("rel_tol", "1e-12")),
            abs_tol=parse_real(pairs.get("abs_tol", "1e-14")),
            fit=FIT_ALIASES[fit] if fit else None,
            oracle=pairs.get("oracle", "false").lower() in ("1", "true", "yes"),
        )
    except KeyError as exc:
        raise UsageError(f"case is missing or has unknown value for {exc}") from None
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(str(exc)) from None


def parse_config(text: str) -> list[CaseSpec]:
    """Flat ``key = value`` lines; ``#`` starts a comment.

    Repeated ``n`` and ``alpha`` keys form the product grid (in file order);
    ``u0``, ``lap0``, ``rmax``, ``rel_tol``, ``abs_tol``, ``fit`` and ``oracle``
    set the shared values.  Each ``case = n=1 alpha=-1/3 lap0=0 ...`` line adds
    one extra case after the grid, inheriting the shared values it does not set.
    """
    lists: dict[str, list[str]] = {}
    cases: list[dict[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise UsageError(f"line {lineno}: unknown key {key!r}")
        if key == "case":
            pairs = {}
            for tok in value.split():
                if "=" not in tok:
                    raise UsageError(f"line {lineno}: case tokens are key=value")
                k, v = tok.split("=", 1)
                if k not in _CONFIG_KEYS - {"case"}:
                    raise UsageError(f"line {lineno}: unknown case key {k!r}")
                pairs[k] = v
            cases.append(pairs)
        else:
            lists.setdefault(key, []).append(value)
    shared = {k: v[-1] for k, v in lists.items() if k not in ("n", "alpha")}
    ns, alphas = lists.get("n", []), lists.get("alpha", [])
    if bool(ns) != bool(alphas):
        raise UsageError("the n and alpha lists must both be non-empty (or both absent)")
    specs = [_case_from_pairs({**shared, "n": n, "alpha": a}) for n in ns for a in alphas]
    specs += [_case_from_pairs({**shared, **c}) for c in cases]
    if not specs:
        raise UsageError("config defines no cases")
    return specs


def run_sweep(specs: Sequence[CaseSpec], jobs: int = 1) -> list[CaseReport]:
    """Run every case; results keep config order regardless of completion order."""
    if jobs <= 1:
        return [run_case(s) for s in specs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_case, specs))


# ----------------------------------------------------------------------------
# entry point


def _add_case_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="dimension n >= 1")
    p.add_argument("--alpha", type=parse_real, required=True, help="exponent; fractions like -1/3 accepted")
    p.add_argument("--u0", type=parse_real, default=1.0)
    p.add_argument("--lap0", type=parse_real, default=0.0)
    p.add_argument("--rmax", type=parse_real, default=None, help="default depends on the regime")
    p.add_argument("--rel-tol", type=parse_real, default=1e-12)
    p.add_argument("--abs-tol", type=parse_real, default=1e-14)
    p.add_argument("--fit", choices=sorted(FIT_ALIASES), default=None)
    p.add_argument("--oracle", action="store_true", help="cross-check against the Picard oracle on [0, 5]")
    p.add_argument("--verify", action="store_true", help="exit 1 unless the estimate is within its band")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--ratios", type=Path, default=None, help="write the (r, ratio) table as CSV")


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _main_case(argv: Sequence[str]) -> int:
    p = argparse.ArgumentParser(prog="radial_biharmonic", description="Verify one (n, alpha) case.")
    _add_case_flags(p)
    args = p.parse_args(argv)
    if args.n < 1:
        p.error("--n must be >= 1")
    if not args.u0 > 0:
        p.error("--u0 must be positive")
    spec = CaseSpec(
        n=args.n,
        alpha=args.alpha,
        u0=args.u0,
        lap0=args.lap0,
        rmax=args.rmax,
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        fit=FIT_ALIASES[args.fit] if args.fit else None,
        oracle=args.oracle,
    )
    report = run_case(spec)
    if report.exit_code == EXIT_USAGE:
        print(f"error: {report.message}", file=sys.stderr)
        return EXIT_USAGE
    _emit(report_to_json(report) if args.format == "json" else report_to_csv(report), args.out)
    if args.ratios is not None:
        with args.ratios.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(("r", "ratio"))
            w.writerows((_csv_cell(a), _csv_cell(b)) for a, b in report.ratio_table)
    if report.exit_code == EXIT_INTEGRATION:
        print(f"error: {report.message}", file=sys.stderr)
        return EXIT_INTEGRATION
    if args.verify:
        return report.exit_code
    return EXIT_OK


def _main_sweep(argv: Sequence[str]) -> int:
    p = argparse.ArgumentParser(prog="radial_biharmonic sweep", description="Run a config of cases.")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.add_argument("--out", type=Path, default=None)
    args = p.parse_args(argv)
    try:
        specs = parse_config(args.config.read_text(encoding="utf-8"))
    except (OSError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    reports = run_sweep(specs, args.jobs)
    _emit(report_to_json(reports) if args.format == "json" else report_to_csv(reports), args.out)
    return EXIT_OK if all(r.verified for r in reports) else EXIT_FAIL


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "sweep":
        return _main_sweep(argv[1:])
    return _main_case(argv)


if __name__ == "__main__":
    sys.exit(main())
