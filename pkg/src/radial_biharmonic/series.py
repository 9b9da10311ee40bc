"""Power-series startup at the coordinate singularity r = 0.

A radial solution that is smooth at the origin is even in r, so both ``u`` and
``Delta u`` are series in ``r^2``.  Writing ``u = sum c_j r^(2j)`` and
``Delta u = sum d_j r^(2j)``, the identity

    Delta(r^(2j+2)) = (2j+2)(2j+n) r^(2j)

turns ``Delta u = v`` and ``Delta v = u^alpha`` into the lifts

    c_{j+1} = d_j / ((2j+2)(2j+n)),     d_{j+1} = e_j / ((2j+2)(2j+n)),

where ``e`` is the series of ``u^alpha``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "EvenSeries",
    "OriginData",
    "Problem",
    "SeriesOrderError",
    "StartupSeries",
    "StateVector",
    "eval_state",
    "lift_factor",
    "series_pow",
    "startup_series",
    "taylor_coeffs",
]

DEFAULT_ORDER = 8
MAX_ORDER = 40
HANDOFF_RADIUS = 1e-2
SERIES_REL_TOL = 1e-14


class SeriesOrderError(ValueError):
    """Truncation order outside the range where composition is trusted."""


@dataclass(frozen=True)
class Problem:
    """The equation ``Delta^2 u = u^alpha`` in dimension ``n``."""

    n: int
    alpha: float

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension n must be an integer >= 1, got {self.n!r}")
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha!r}")


@dataclass(frozen=True)
class OriginData:
    """Initial data ``u(0) = u0 > 0`` and ``Delta u(0) = lap0``."""

    u0: float
    lap0: float

    def __post_init__(self) -> None:
        if not (self.u0 > 0 and math.isfinite(self.u0)):
            raise ValueError(f"u0 must be positive and finite, got {self.u0!r}")
        if not math.isfinite(self.lap0):
            raise ValueError(f"lap0 must be finite, got {self.lap0!r}")


@dataclass(frozen=True)
class StateVector:
    """``(u, u', Delta u, (Delta u)')`` at radius ``r``.

    ``log_scale`` is the natural-log offset of a renormalised linear
    trajectory: the physical state is ``exp(log_scale)`` times the stored one.
    """

    r: float
    u: float
    du: float
    v: float
    dv: float
    log_scale: float = 0.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.u, self.du, self.v, self.dv)


@dataclass(frozen=True)
class EvenSeries:
    """Truncated series ``sum_j coeffs[j] * r^(2j)``."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]) -> None:
        object.__setattr__(self, "coeffs", tuple(float(c) for c in coeffs))
        if not self.coeffs:
            raise ValueError("a series needs at least one coefficient")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self) -> int:
        return len(self.coeffs)

    def __getitem__(self, j: int) -> float:
        return self.coeffs[j]

    def __call__(self, r: float) -> float:
        x = r * r
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def deriv(self, r: float) -> float:
        """d/dr of the series at ``r``."""
        x = r * r
        acc = 0.0
        for j in range(self.order, 0, -1):
            acc = acc * x + 2 * j * self.coeffs[j]
        return acc * r


def lift_factor(j: int, n: int) -> float:
    """``(2j+2)(2j+n)``, the factor with ``Delta r^(2j+2) = lift_factor * r^(2j)``."""
    return float((2 * j + 2) * (2 * j + n))


def series_pow(s: EvenSeries | Sequence[float], alpha: float, order: int | None = None) -> EvenSeries:
    """Truncated series of ``s^alpha`` by the logarithmic-derivative (Miller) recurrence.

    ``p = s^alpha`` satisfies ``s p' = alpha s' p``; matching coefficients gives

        p_k = 1/(k s_0) * sum_{j=1}^{k} ((alpha + 1) j - k) s_j p_{k-j}.

    Missing input coefficients beyond ``s.order`` are taken as zero, so
    ``order`` may exceed the input order.
    """
    a = s.coeffs if isinstance(s, EvenSeries) else tuple(float(c) for c in s)
    if not a[0] > 0:
        raise ValueError("series_pow needs a positive constant term")
    K = len(a) - 1 if order is None else order
    a = a + (0.0,) * max(0, K + 1 - len(a))
    p = [0.0] * (K + 1)
    p[0] = a[0] ** alpha
    for k in range(1, K + 1):
        acc = 0.0
        for j in range(1, k + 1):
            if a[j] != 0.0:
                acc += ((alpha + 1.0) * j - k) * a[j] * p[k - j]
        p[k] = acc / (k * a[0])
    return EvenSeries(p)


def taylor_coeffs(problem: Problem, origin: OriginData, order: int = DEFAULT_ORDER) -> EvenSeries:
    """Coefficients ``c_0..c_K`` of ``u`` in powers of ``r^2``."""
    return startup_series(problem, origin, order).u


@dataclass(frozen=True)
class StartupSeries:
    """Series of ``u``, ``Delta u`` and ``u^alpha`` around the origin, kept separately."""

    problem: Problem
    origin: OriginData
    u: EvenSeries
    lap: EvenSeries
    rhs: EvenSeries

    @property
    def order(self) -> int:
        return self.u.order

    def state(self, r: float) -> StateVector:
        return eval_state(self, r)

    def validity_radius(self, rel_tol: float = SERIES_REL_TOL) -> float:
        """Largest ``r`` at which the last two retained terms of both ``u`` and
        ``Delta u`` stay below ``rel_tol`` relative to the series magnitude."""

        def ok(r: float) -> bool:
            for ser in (self.u, self.lap):
                x = r * r
                terms = [abs(c) * x ** j for j, c in enumerate(ser.coeffs)]
                scale = sum(terms)
                if scale == 0.0:
                    continue
                if max(terms[-2:]) > rel_tol * scale:
                    return False
            return True

        lo, hi = 0.0, 1.0
        if ok(hi):
            while ok(hi) and hi < 1e6:
                lo, hi = hi, 2.0 * hi
            if hi >= 1e6:
                return math.inf
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if ok(mid):
                lo = mid
            else:
                hi = mid
        return lo

    def handoff_radius(self) -> float:
        """Radius at which the integrator takes over (at most 1e-2)."""
        return min(HANDOFF_RADIUS, self.validity_radius())

    def integral_rhs(self, r: float, weight_power: int) -> float:
        """Exact ``int_0^r t^weight_power * u^alpha(t) dt`` of the truncated series."""
        acc = 0.0
        for j, e in enumerate(self.rhs.coeffs):
            p = 2 * j + weight_power + 1
            acc += e * r ** p / p
        return acc

    def integral_power(self, r: float, exponent: float, weight_power: int) -> float:
        """``int_0^r t^weight_power * u(t)^exponent dt`` via the composed series."""
        ser = series_pow(self.u, exponent)
        acc = 0.0
        for j, e in enumerate(ser.coeffs):
            p = 2 * j + weight_power + 1
            acc += e * r ** p / p
        return acc


def startup_series(problem: Problem, origin: OriginData, order: int = DEFAULT_ORDER) -> StartupSeries:
    """Build the coupled ``u`` / ``Delta u`` / ``u^alpha`` series to order ``K``."""
    K = int(order)
    if K < 2:
        raise SeriesOrderError(f"truncation order must be >= 2, got {order}")
    if K > MAX_ORDER:
        raise SeriesOrderError(
            f"order {K} exceeds {MAX_ORDER}; fractional-power composition is not trusted there"
        )
    if problem.alpha > 1:
        raise ValueError("the startup series is only used for alpha <= 1")
    n, alpha = problem.n, problem.alpha
    c = [0.0] * (K + 1)
    d = [0.0] * (K + 1)
    c[0] = origin.u0
    d[0] = origin.lap0
    # e_j needs c_0..c_j; d_{j+1} needs e_j; c_{j+1} needs d_j
    e: list[float] = []
    for j in range(K):
        c[j + 1] = d[j] / lift_factor(j, n)
        e = list(series_pow(c[: j + 1], alpha, order=j).coeffs)
        d[j + 1] = e[j] / lift_factor(j, n)
    e = list(series_pow(c, alpha).coeffs)
    return StartupSeries(problem, origin, EvenSeries(c), EvenSeries(d), EvenSeries(e))


def eval_state(series: StartupSeries, r: float, *, check: bool = True) -> StateVector:
    """Termwise evaluation of ``(u, u', Delta u, (Delta u)')`` at ``r``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    if check and r > series.validity_radius() * (1 + 1e-12):
        raise ValueError(f"r = {r} is beyond the series validity radius")
    return StateVector(
        r=float(r),
        u=series.u(r),
        du=series.u.deriv(r),
        v=series.lap(r),
        dv=series.lap.deriv(r),
    )
