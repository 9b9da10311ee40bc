"""Limit extraction along integrated trajectories.

Ratios ``u / f`` are formed in log space on the trajectory's geometric grid
and their limits estimated by a small family of extrapolation models.  The
solution functionals ``D = int_0^inf t u^alpha dt`` and
``N = int_0^inf u^alpha dt`` and the auxiliary integrals ``F``, ``G``, ``H`` of
the log-critical regimes are computed by quadrature in ``log r`` with the
startup series covering ``[0, r0]`` and, for the improper integrals, an
analytic power-law tail.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from .asymptotics import (
    AsymptoticLaw,
    RegimeMismatchError,
    RegimeTag,
    classify,
    compose_headline,
    intermediate_targets,
)
from .integrator import TerminationKind, Trajectory

__all__ = [
    "AuxIntegral",
    "AuxKind",
    "DegenerateFitError",
    "FitModel",
    "FunctionalValues",
    "InsufficientPointsError",
    "IntermediateLimit",
    "IntermediateReport",
    "LimitEstimate",
    "RatioSeries",
    "TailFitError",
    "Weight",
    "aux_integral",
    "estimate_limit",
    "intermediate_limits",
    "ratio_series",
    "tail_integral",
]

FIT_DECADES = 2.0
# a single power correction only describes the last decade well; further in,
# the next correction term biases the intercept
POWER_FIT_DECADES = 1.0
WINDOW_TRIMS = (0.0, 0.25, 0.5)
TAIL_FIT_RESIDUAL = 0.25
MIN_POINTS = 8


class InsufficientPointsError(ValueError):
    """Too few samples, or too short a span, to fit a limit."""


class DegenerateFitError(ArithmeticError):
    """Singular least-squares problem."""


class TailFitError(ValueError):
    """The power-law tail model does not describe the final decade."""


class FitModel(str, enum.Enum):
    LAST_VALUE = "LastValue"
    INVERSE_LOG = "InverseLogFit"
    POWER_CORRECTION = "PowerCorrectionFit"
    AITKEN = "AitkenAccel"


class Weight(str, enum.Enum):
    """Weight ``t^k`` in front of ``u^alpha``: ``TimesT`` gives ``D``, ``Plain`` gives ``N``."""

    TIMES_T = "TimesT"
    PLAIN = "Plain"

    @property
    def power(self) -> int:
        return 1 if self is Weight.TIMES_T else 0


class AuxKind(str, enum.Enum):
    F = "F"
    G = "G"
    H = "H"


@dataclass(frozen=True, eq=False)
class RatioSeries:
    """Samples ``(r_i, ratio_i)`` with ``r`` increasing."""

    r: np.ndarray
    ratio: np.ndarray
    label: str = "u/f"

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        y = np.asarray(self.ratio, dtype=float)
        if r.shape != y.shape or r.ndim != 1:
            raise ValueError("r and ratio must be 1-d arrays of equal length")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "ratio", y)

    def __len__(self) -> int:
        return self.r.size

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return zip(self.r.tolist(), self.ratio.tolist())

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]], label: str = "u/f") -> "RatioSeries":
        arr = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
        return cls(arr[:, 0], arr[:, 1], label)


@dataclass(frozen=True)
class LimitEstimate:
    """Extrapolated limit with a window-spread uncertainty.

    ``tail_min`` / ``tail_max`` are the extreme ratios over the final decade;
    the fitted value may lie outside them.
    """

    value: float
    model: FitModel
    uncertainty: float
    tail_min: float
    tail_max: float
    window_values: tuple[float, ...] = ()

    def rel_error(self, target: float) -> float:
        return abs(self.value / target - 1.0)


@dataclass(frozen=True)
class FunctionalValues:
    """``D`` or ``N`` split into the quadrature part and the analytic tail."""

    D: float | None
    N: float | None
    finite_part: float
    tail_part: float
    tail_model_exponent: float
    error_estimate: float = 0.0
    kappa: float = 0.0
    fit_residual: float = 0.0
    rmax: float = 0.0

    @property
    def value(self) -> float:
        return self.finite_part + self.tail_part


@dataclass(frozen=True, eq=False)
class AuxIntegral:
    kind: AuxKind
    r: np.ndarray
    value: np.ndarray

    def __iter__(self) -> Iterator[tuple[float, float]]:
        return zip(self.r.tolist(), self.value.tolist())


@dataclass(frozen=True)
class IntermediateLimit:
    name: str
    target: float
    estimate: LimitEstimate

    @property
    def rel_error(self) -> float:
        return self.estimate.rel_error(self.target)


@dataclass(frozen=True)
class IntermediateReport:
    """Auxiliary ratios of a log-critical trajectory and their composition."""

    n: int
    limits: dict[str, IntermediateLimit] = field(default_factory=dict)
    composed_headline: float = math.nan
    composed_uncertainty: float = math.nan
    first: str = ""
    second: str = ""

    def __getitem__(self, name: str) -> IntermediateLimit:
        return self.limits[name]


# ----------------------------------------------------------------------------
# ratios and limits


def ratio_series(traj: Trajectory, law: AsymptoticLaw) -> RatioSeries:
    """``u(r_i) / f(r_i)`` on the output grid, for ``r`` where ``f`` is defined."""
    if law.problem != traj.problem:
        raise RegimeMismatchError(f"law for {law.problem} applied to a trajectory of {traj.problem}")
    if traj.termination.kind is not TerminationKind.REACHED_RMAX:
        raise ValueError(f"trajectory terminated with {traj.termination}; no limit to extract")
    r = traj.r
    keep = r > law.r_min_valid()
    r = r[keep]
    # exponentiate only the difference of logs so ExpMode ratios never overflow
    log_ratio = traj.log_u()[keep] - law.log_f(r)
    return RatioSeries(r, np.exp(log_ratio), label=f"u/{law.describe()}")


def _coerce(series: RatioSeries | Sequence[tuple[float, float]]) -> RatioSeries:
    if isinstance(series, RatioSeries):
        return series
    return RatioSeries.from_pairs(series)


def _lstsq_intercept(columns: Sequence[np.ndarray], y: np.ndarray) -> tuple[float, float]:
    A = np.column_stack([np.ones_like(y), *columns])
    # scale columns so the conditioning test sees the shape, not the units
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        raise DegenerateFitError("a fit column vanishes identically")
    As = A / norms
    sv = np.linalg.svd(As, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise DegenerateFitError("singular normal equations")
    coef, *_ = np.linalg.lstsq(As, y, rcond=None)
    resid = float(np.linalg.norm(As @ coef - y))
    return float(coef[0] / norms[0]), resid


def _fit_one(r: np.ndarray, y: np.ndarray, model: FitModel) -> float:
    if np.ptp(y) == 0.0:
        return float(y[-1])
    if model is FitModel.LAST_VALUE:
        return float(y[-1])
    if model is FitModel.INVERSE_LOG:
        return _lstsq_intercept([1.0 / np.log(r)], y)[0]
    if model is FitModel.POWER_CORRECTION:
        best: tuple[float, float] | None = None
        for p in (1, 2):
            c, res = _lstsq_intercept([(r / r[-1]) ** (-p)], y)
            if best is None or res < best[1]:
                best = (c, res)
        assert best is not None
        return best[0]
    if model is FitModel.AITKEN:
        k = (y.size - 1) // 2
        y0, y1, y2 = y[-1 - 2 * k], y[-1 - k], y[-1]
        den = (y2 - y1) - (y1 - y0)
        if den == 0.0:
            return float(y2)
        return float(y2 - (y2 - y1) ** 2 / den)
    raise AssertionError(model)


def estimate_limit(
    series: RatioSeries | Sequence[tuple[float, float]],
    model: FitModel | str = FitModel.INVERSE_LOG,
    *,
    decades: float | None = None,
) -> LimitEstimate:
    """Estimate ``lim ratio(r)`` from its tail.

    Models
    ------
    LastValue
        the final sample.
    InverseLogFit
        least squares for ``ratio ~ c_inf + c_1 / ln r`` over the last ``decades``
        (default 2).
    PowerCorrectionFit
        ``ratio ~ c_inf + c_1 r^-p`` with ``p`` in ``{1, 2}`` chosen by residual,
        over the last decade by default.
    AitkenAccel
        Aitken's delta-squared on three equally spaced grid points spanning the
        window (default 2 decades).

    The fit is repeated on windows whose right end is pulled in by 0, 1/4 and
    1/2 decade.  ``uncertainty`` is half the spread of those estimates together
    with the final sample, so an extrapolation far from the observed ratios
    reports a correspondingly wide band.
    """
    model = FitModel(model)
    if decades is None:
        decades = POWER_FIT_DECADES if model is FitModel.POWER_CORRECTION else FIT_DECADES
    s = _coerce(series)
    r, y = s.r, s.ratio
    if r.size < MIN_POINTS:
        raise InsufficientPointsError(f"need >= {MIN_POINTS} points, got {r.size}")
    if not (np.all(np.isfinite(y)) and np.all(r > 0)):
        raise ValueError("ratio series must be finite with positive radii")
    if math.log10(r[-1] / r[0]) < 2.0 - 1e-9:
        raise InsufficientPointsError("the series must span at least two decades")

    estimates: list[float] = []
    for trim in WINDOW_TRIMS:
        hi = r[-1] / 10.0**trim
        lo = hi / 10.0**decades
        m = (r >= lo * (1 - 1e-12)) & (r <= hi * (1 + 1e-12))
        if np.count_nonzero(m) < 3:
            if trim == 0.0:
                raise InsufficientPointsError("fit window holds fewer than 3 points")
            continue
        estimates.append(_fit_one(r[m], y[m], model))
    last = r >= r[-1] / 10.0 * (1 - 1e-12)
    spread = estimates + [float(y[-1])]
    return LimitEstimate(
        value=estimates[0],
        model=model,
        uncertainty=0.5 * (max(spread) - min(spread)),
        tail_min=float(np.min(y[last])),
        tail_max=float(np.max(y[last])),
        window_values=tuple(estimates),
    )


# ----------------------------------------------------------------------------
# integrals along the trajectory


def _physical_u(traj: Trajectory) -> np.ndarray:
    return np.exp(traj.log_u())


def _head_integral(traj: Trajectory, exponent: float, weight_power: int, g0: float) -> float:
    """``int_0^r0 t^w u^exponent`` from the series, else from ``u ~ u(r0)`` near 0."""
    r0 = traj.handoff
    if traj.series is not None:
        return traj.series.integral_power(r0, exponent, weight_power)
    return g0 * r0 / (weight_power + 1)


def _solution_dependent_kappa(traj: Trajectory) -> float:
    n = traj.problem.n
    tag = classify(n, traj.problem.alpha).tag
    if tag is not RegimeTag.SOLUTION_DEPENDENT:
        raise RegimeMismatchError(
            f"no tail law for regime {tag.value}; pass kappa explicitly"
        )
    # the n = 2 row grows like r^2 ln r; an r^2 tail with a local constant is used
    return 3.0 if n == 1 else 2.0


def tail_integral(
    traj: Trajectory,
    weight: Weight | str,
    *,
    kappa: float | None = None,
    fit_threshold: float = TAIL_FIT_RESIDUAL,
) -> FunctionalValues:
    """``D = int_0^inf t u^alpha`` (``TimesT``) or ``N = int_0^inf u^alpha`` (``Plain``).

    The finite part is Simpson's rule in ``log t`` on the sample grid plus the
    series integral on ``[0, r0]``.  Beyond ``R = rmax`` the solution is
    replaced by ``u(R) (t/R)^kappa``, ``kappa`` defaulting to the growth
    exponent of the solution-dependent row (3 for ``n = 1``, else 2), and the
    tail is integrated in closed form.  ``error_estimate`` combines a
    grid-halving quadrature estimate with the change of the tail when
    ``kappa`` is replaced by the local log-slope ``R u'(R) / u(R)``.
    """
    weight = Weight(weight)
    w = weight.power
    alpha = traj.problem.alpha
    if kappa is None:
        kappa = _solution_dependent_kappa(traj)
        if weight is Weight.PLAIN and traj.problem.n != 1:
            raise RegimeMismatchError("N is defined for the one-dimensional row only")
        if weight is Weight.TIMES_T and traj.problem.n == 1:
            raise RegimeMismatchError("D is defined for the n >= 2 rows")
    expo = kappa * alpha + w
    if not expo < -1.0:
        raise ValueError(
            f"tail t^{w} (t^{kappa})^{alpha} ~ t^{expo:g} is not integrable at infinity"
        )
    if traj.termination.kind is not TerminationKind.REACHED_RMAX:
        raise ValueError(f"trajectory terminated with {traj.termination}")

    r = traj.r
    u = _physical_u(traj)
    g = r**w * u**alpha
    s = np.log(r)
    # d t = t d(log t)
    body = float(simpson(g * r, x=s))
    head = _head_integral(traj, alpha, w, float(g[0]))
    finite = head + body
    if r.size >= 5:
        half = slice(None, None, 2) if r.size % 2 == 1 else slice(1, None, 2)
        coarse = float(simpson((g * r)[half], x=s[half]))
        if half.start == 1:
            coarse += float(simpson((g * r)[:2], x=s[:2]))
        quad_err = abs(body - coarse) / 15.0
    else:
        quad_err = abs(body)

    R, uR = float(r[-1]), float(u[-1])
    tail = uR**alpha * R ** (w + 1) / -(expo + 1.0)

    last = r >= R / 10.0 * (1 - 1e-12)
    log_c = np.mean(np.log(u[last]) - kappa * np.log(r[last]))
    residual = float(np.max(np.abs(u[last] / (np.exp(log_c) * r[last] ** kappa) - 1.0)))
    if residual > fit_threshold and tail > 1e-12 * abs(finite):
        raise TailFitError(
            f"u ~ c r^{kappa:g} misses the final decade by {residual:.3g} (> {fit_threshold})"
        )

    du_phys = traj.samples[-1].du * math.exp(traj.samples[-1].log_scale)
    k_eff = R * du_phys / uR
    e_eff = k_eff * alpha + w + 1.0
    model_err = abs(uR**alpha * R ** (w + 1) / -e_eff - tail) if e_eff < 0 else tail
    total = finite + tail
    return FunctionalValues(
        D=total if weight is Weight.TIMES_T else None,
        N=total if weight is Weight.PLAIN else None,
        finite_part=finite,
        tail_part=tail,
        tail_model_exponent=expo,
        error_estimate=quad_err + model_err,
        kappa=kappa,
        fit_residual=residual,
        rmax=R,
    )


def _check_aux_regime(traj: Trajectory, kind: AuxKind) -> None:
    n, alpha = traj.problem.n, traj.problem.alpha
    if kind is AuxKind.F:
        ok = n >= 3 and alpha == -1.0
    elif kind is AuxKind.G:
        ok = n == 2 and alpha == -1.0
    else:
        ok = n == 1 and abs(alpha + 1.0 / 3.0) < 1e-15
    if not ok:
        raise RegimeMismatchError(f"aux integral {kind.value} does not apply to n={n}, alpha={alpha}")


def aux_integral(traj: Trajectory, kind: AuxKind | str) -> AuxIntegral:
    """Running integral ``F = int_0^r s/u`` (n >= 3), ``G`` (same integrand, n = 2)
    or ``H = int_0^r u^(-1/3)`` (n = 1) along the sample grid.

    ``F`` and ``G`` differ only in which regime they belong to.
    """
    kind = AuxKind(kind)
    _check_aux_regime(traj, kind)
    r = traj.r
    u = _physical_u(traj)
    if kind is AuxKind.H:
        exponent, w = -1.0 / 3.0, 0
    else:
        exponent, w = -1.0, 1
    g = r**w * u**exponent
    head = _head_integral(traj, exponent, w, float(g[0]))
    vals = head + cumulative_simpson(g * r, x=np.log(r), initial=0.0)
    return AuxIntegral(kind, r, vals)


def _ratio_specs(traj: Trajectory) -> tuple[list[tuple[str, np.ndarray, np.ndarray]], str, str]:
    n = traj.problem.n
    r = traj.r
    u = _physical_u(traj)
    lap = traj.v * np.exp(traj.sample_log_scale)
    if n >= 3:
        F = aux_integral(traj, AuxKind.F).value
        m = r > 1.0
        lr = np.log(r[m])
        specs = [
            ("lap_over_F", r[m], lap[m] / F[m]),
            ("u_over_r2F", r[m], u[m] / (r[m] ** 2 * F[m])),
            ("2logr_over_F2", r[m], 2.0 * lr / F[m] ** 2),
        ]
        return specs, "u_over_r2F", "2logr_over_F2"
    if n == 2:
        G = aux_integral(traj, AuxKind.G).value
        m = r > math.e
        lr = np.log(r[m])
        specs = [
            ("lap_over_GlogR", r[m], lap[m] / (G[m] * lr)),
            ("u_over_Gr2logr", r[m], u[m] / (G[m] * r[m] ** 2 * lr)),
            ("2loglogr_over_G2", r[m], 2.0 * np.log(lr) / G[m] ** 2),
        ]
        return specs, "u_over_Gr2logr", "2loglogr_over_G2"
    H = aux_integral(traj, AuxKind.H).value
    m = r > 1.0
    lr = np.log(r[m])
    specs = [
        # in one dimension Delta u = u''
        ("u2_over_rH", r[m], lap[m] / (r[m] * H[m])),
        ("u_over_r3H", r[m], u[m] / (r[m] ** 3 * H[m])),
        ("4logr_over_3H43", r[m], 4.0 * lr / (3.0 * H[m] ** (4.0 / 3.0))),
    ]
    return specs, "u_over_r3H", "4logr_over_3H43"


def intermediate_limits(
    traj: Trajectory, model: FitModel | str = FitModel.INVERSE_LOG
) -> IntermediateReport:
    """Estimate the auxiliary log-critical ratios and compose the headline constant."""
    tag = classify(traj.problem.n, traj.problem.alpha).tag
    if tag is not RegimeTag.LOG_CRITICAL:
        raise RegimeMismatchError(f"intermediate limits need a log-critical trajectory, got {tag.value}")
    if traj.termination.kind is not TerminationKind.REACHED_RMAX:
        raise ValueError(f"trajectory terminated with {traj.termination}")
    n = traj.problem.n
    targets = intermediate_targets(n)
    specs, first, second = _ratio_specs(traj)
    limits = {}
    for name, r, y in specs:
        est = estimate_limit(RatioSeries(r, y, name), model)
        limits[name] = IntermediateLimit(name, targets[name], est)
    a, b = limits[first].estimate, limits[second].estimate
    head = compose_headline(n, a.value, b.value)
    # first-order propagation: d log head = d log a - q d log b
    q = 0.5 if n >= 2 else 0.75
    unc = abs(head) * (abs(a.uncertainty / a.value) + q * abs(b.uncertainty / b.value))
    return IntermediateReport(n, limits, head, unc, first, second)
