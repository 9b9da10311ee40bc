"""Outward integration of the radial system for ``Delta^2 u = u^alpha``.

With ``p = u'``, ``v = Delta u`` and ``q = (Delta u)'`` the radial Laplacian
``Delta w = w'' + (n-1) w' / r`` gives the first-order system

    u' = p,   p' = v - (n-1) p / r,   v' = q,   q' = u^alpha - (n-1) q / r.

The drift ``(n-1)/r`` is singular at the origin, so the solution is started
from the even power series at a small handoff radius and continued with an
embedded Dormand-Prince 5(4) pair.  The stepper works on plain floats; a
numpy-backed continuous extension is kept for evaluating the trajectory at
arbitrary radii.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .series import (
    DEFAULT_ORDER,
    OriginData,
    Problem,
    StartupSeries,
    StateVector,
    eval_state,
    startup_series,
)

__all__ = [
    "DenseOutput",
    "IntegrationRefused",
    "IntegratorControls",
    "StateVector",
    "Termination",
    "TerminationKind",
    "Trajectory",
    "integrate",
    "integrate_linear_renormalized",
    "ode_rhs",
]

OVERFLOW_LIMIT = 1e300
RENORM_THRESHOLD = 1e100
POSITIVITY_FLOOR = 1e-12
LN2 = math.log(2.0)

# Dormand-Prince 5(4) tableau.
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)
# Shampine's continuous extension: y(r + theta h) = y + h * K^T (P @ [theta, theta^2, theta^3, theta^4]).
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)


class IntegrationRefused(ValueError):
    """The requested problem is outside the integrable range (alpha > 1)."""


class TerminationKind(str, enum.Enum):
    REACHED_RMAX = "ReachedRmax"
    POSITIVITY_LOST = "PositivityLost"
    OVERFLOW = "Overflow"
    STEP_UNDERFLOW = "StepUnderflow"
    MAX_STEPS = "MaxSteps"


@dataclass(frozen=True)
class Termination:
    kind: TerminationKind
    r: float

    @property
    def ok(self) -> bool:
        return self.kind is TerminationKind.REACHED_RMAX

    def __str__(self) -> str:
        if self.ok:
            return self.kind.value
        return f"{self.kind.value}({self.r:.17g})"


@dataclass(frozen=True)
class IntegratorControls:
    rel_tol: float = 1e-12
    abs_tol: float = 1e-14
    rmax: float = 1e4
    max_steps: int = 2_000_000
    output_points_per_decade: int = 32
    series_order: int = DEFAULT_ORDER

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.rmax > 0:
            raise ValueError("rmax must be positive")
        if self.output_points_per_decade < 1:
            raise ValueError("need at least one output point per decade")

    def with_(self, **changes: Any) -> "IntegratorControls":
        from dataclasses import replace

        return replace(self, **changes)


class DenseOutput:
    """Piecewise quartic continuous extension of the accepted steps."""

    def __init__(
        self,
        starts: np.ndarray,
        steps: np.ndarray,
        y0: np.ndarray,
        coef: np.ndarray,
        log_scale: np.ndarray,
    ) -> None:
        self.starts = starts
        self.steps = steps
        self.y0 = y0
        self.coef = coef
        self.log_scale = log_scale

    @property
    def r_min(self) -> float:
        return float(self.starts[0])

    @property
    def r_max(self) -> float:
        return float(self.starts[-1] + self.steps[-1])

    def __call__(self, r: Sequence[float] | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """States (shape ``(m, 4)``) and log-scale offsets at radii ``r``."""
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.starts, r, side="right") - 1
        idx = np.clip(idx, 0, len(self.starts) - 1)
        theta = (r - self.starts[idx]) / self.steps[idx]
        powers = np.stack([theta, theta**2, theta**3, theta**4], axis=-1)
        y = self.y0[idx] + np.einsum("mij,mj->mi", self.coef[idx], powers)
        return y, self.log_scale[idx]


@dataclass(frozen=True)
class Trajectory:
    """Integrated radial solution sampled on an increasing grid.

    ``samples`` carry the (possibly renormalised) state; the physical value of
    ``u`` at a sample is ``exp(sample.log_scale) * sample.u``.
    """

    problem: Problem
    origin: OriginData
    samples: tuple[StateVector, ...]
    log_scale: float
    termination: Termination
    series: StartupSeries | None = None
    dense: DenseOutput | None = field(default=None, repr=False, compare=False)
    rel_error_estimate: float = 0.0
    n_steps: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        rs = [s.r for s in self.samples]
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("sample radii must be strictly increasing")

    @property
    def r(self) -> np.ndarray:
        return np.array([s.r for s in self.samples])

    @property
    def u(self) -> np.ndarray:
        """Stored ``u`` values (scaled on a renormalised trajectory)."""
        return np.array([s.u for s in self.samples])

    @property
    def du(self) -> np.ndarray:
        return np.array([s.du for s in self.samples])

    @property
    def v(self) -> np.ndarray:
        return np.array([s.v for s in self.samples])

    @property
    def dv(self) -> np.ndarray:
        return np.array([s.dv for s in self.samples])

    @property
    def sample_log_scale(self) -> np.ndarray:
        return np.array([s.log_scale for s in self.samples])

    def log_u(self) -> np.ndarray:
        """Natural log of the physical ``u`` at every sample."""
        return np.log(self.u) + self.sample_log_scale

    @property
    def r_end(self) -> float:
        return self.samples[-1].r

    @property
    def handoff(self) -> float:
        return self.samples[0].r

    def evaluate(self, r: Iterable[float]) -> np.ndarray:
        """Physical states ``(u, u', Delta u, (Delta u)')`` at arbitrary radii.

        Radii below the handoff are served by the startup series.
        """
        r = np.atleast_1d(np.asarray(list(r) if not isinstance(r, np.ndarray) else r, dtype=float))
        out = np.empty((r.size, 4))
        low = r < self.handoff
        if np.any(low):
            if self.series is None:
                raise ValueError("trajectory has no startup series below its first sample")
            for i in np.flatnonzero(low):
                out[i] = eval_state(self.series, float(r[i]), check=False).as_tuple()
        high = ~low
        if np.any(high):
            if self.dense is None:
                raise ValueError("trajectory carries no continuous extension")
            if np.any(r[high] > self.dense.r_max * (1 + 1e-12)):
                raise ValueError("radius beyond the end of the trajectory")
            y, ls = self.dense(r[high])
            out[high] = y * np.exp(ls)[:, None]
        return out


def _check_problem(problem: Problem) -> None:
    if problem.alpha > 1:
        raise IntegrationRefused(
            f"alpha = {problem.alpha} > 1: no integration (catalog-only regime)"
        )


def ode_rhs(problem: Problem, s: StateVector) -> tuple[float, float, float, float]:
    """Right-hand side ``(p, v - (n-1)p/r, q, u^alpha - (n-1)q/r)``."""
    if not s.r > 0:
        raise ValueError("ode_rhs needs r > 0; the origin is handled by the series")
    if not s.u > 0:
        raise ValueError(f"u = {s.u} <= 0: positivity lost")
    drift = (problem.n - 1) / s.r
    return (s.du, s.v - drift * s.du, s.dv, s.u**problem.alpha - drift * s.dv)


def _output_grid(r0: float, rmax: float, per_decade: int) -> np.ndarray:
    """Radii uniform in ``log r`` from ``r0`` to ``rmax`` inclusive."""
    decades = math.log10(rmax / r0)
    m = max(1, math.ceil(per_decade * decades - 1e-9))
    grid = r0 * (rmax / r0) ** (np.arange(m + 1) / m)
    grid[0] = r0
    grid[-1] = rmax
    return grid


def _run(
    problem: Problem,
    origin: OriginData,
    controls: IntegratorControls,
    renormalize: bool,
    extra_radii: Sequence[float] | None,
) -> Trajectory:
    series = startup_series(problem, origin, controls.series_order)
    r0 = series.handoff_radius()
    if not controls.rmax > r0:
        raise ValueError(f"rmax = {controls.rmax} must exceed the handoff radius {r0}")
    n = problem.n
    alpha = float(problem.alpha)
    nm1 = float(n - 1)
    linear = alpha == 1.0
    constant = alpha == 0.0
    rtol = controls.rel_tol
    atol = controls.abs_tol
    rmax = float(controls.rmax)
    u_floor = POSITIVITY_FLOOR * origin.u0

    st = eval_state(series, r0, check=False)
    r = r0
    u, p, v, q = st.u, st.du, st.v, st.dv
    log_scale = 0.0
    sign_hit = False

    def f(rr: float, uu: float, pp: float, vv: float, qq: float) -> tuple[float, float, float, float]:
        nonlocal sign_hit
        d = nm1 / rr
        if linear:
            src = uu
        elif constant:
            src = 1.0
        elif uu > 0.0:
            src = uu**alpha
        else:
            sign_hit = True
            src = abs(uu) ** alpha if uu != 0.0 else math.inf
        return pp, vv - d * pp, qq, src - d * qq

    k1 = f(r, u, p, v, q)
    h = 0.05 * r0
    starts: list[float] = []
    hs: list[float] = []
    y0s: list[tuple[float, float, float, float]] = []
    coefs: list[np.ndarray] = []
    scales: list[float] = []
    rel_err = 0.0
    steps = 0
    termination = Termination(TerminationKind.REACHED_RMAX, rmax)
    end_state: tuple[float, float, float, float] | None = None

    while r < rmax:
        if steps >= controls.max_steps:
            termination = Termination(TerminationKind.MAX_STEPS, r)
            break
        if r + h > rmax or rmax - (r + h) < 1e-12 * rmax:
            h = rmax - r
        sign_hit = False
        u1, p1, v1, q1 = k1
        ra = r + _C2 * h
        k2 = f(ra, u + h * _A21 * u1, p + h * _A21 * p1, v + h * _A21 * v1, q + h * _A21 * q1)
        u2, p2, v2, q2 = k2
        k3 = f(
            r + _C3 * h,
            u + h * (_A31 * u1 + _A32 * u2),
            p + h * (_A31 * p1 + _A32 * p2),
            v + h * (_A31 * v1 + _A32 * v2),
            q + h * (_A31 * q1 + _A32 * q2),
        )
        u3, p3, v3, q3 = k3
        k4 = f(
            r + _C4 * h,
            u + h * (_A41 * u1 + _A42 * u2 + _A43 * u3),
            p + h * (_A41 * p1 + _A42 * p2 + _A43 * p3),
            v + h * (_A41 * v1 + _A42 * v2 + _A43 * v3),
            q + h * (_A41 * q1 + _A42 * q2 + _A43 * q3),
        )
        u4, p4, v4, q4 = k4
        k5 = f(
            r + _C5 * h,
            u + h * (_A51 * u1 + _A52 * u2 + _A53 * u3 + _A54 * u4),
            p + h * (_A51 * p1 + _A52 * p2 + _A53 * p3 + _A54 * p4),
            v + h * (_A51 * v1 + _A52 * v2 + _A53 * v3 + _A54 * v4),
            q + h * (_A51 * q1 + _A52 * q2 + _A53 * q3 + _A54 * q4),
        )
        u5, p5, v5, q5 = k5
        k6 = f(
            r + h,
            u + h * (_A61 * u1 + _A62 * u2 + _A63 * u3 + _A64 * u4 + _A65 * u5),
            p + h * (_A61 * p1 + _A62 * p2 + _A63 * p3 + _A64 * p4 + _A65 * p5),
            v + h * (_A61 * v1 + _A62 * v2 + _A63 * v3 + _A64 * v4 + _A65 * v5),
            q + h * (_A61 * q1 + _A62 * q2 + _A63 * q3 + _A64 * q4 + _A65 * q5),
        )
        u6, p6, v6, q6 = k6
        un = u + h * (_B1 * u1 + _B3 * u3 + _B4 * u4 + _B5 * u5 + _B6 * u6)
        pn = p + h * (_B1 * p1 + _B3 * p3 + _B4 * p4 + _B5 * p5 + _B6 * p6)
        vn = v + h * (_B1 * v1 + _B3 * v3 + _B4 * v4 + _B5 * v5 + _B6 * v6)
        qn = q + h * (_B1 * q1 + _B3 * q3 + _B4 * q4 + _B5 * q5 + _B6 * q6)
        k7 = f(r + h, un, pn, vn, qn)
        u7, p7, v7, q7 = k7
        eu = h * (_E1 * u1 + _E3 * u3 + _E4 * u4 + _E5 * u5 + _E6 * u6 + _E7 * u7)
        ep = h * (_E1 * p1 + _E3 * p3 + _E4 * p4 + _E5 * p5 + _E6 * p6 + _E7 * p7)
        ev = h * (_E1 * v1 + _E3 * v3 + _E4 * v4 + _E5 * v5 + _E6 * v6 + _E7 * v7)
        eq = h * (_E1 * q1 + _E3 * q3 + _E4 * q4 + _E5 * q5 + _E6 * q6 + _E7 * q7)
        at = atol * math.exp(-log_scale) if renormalize else atol
        err = max(
            abs(eu) / (at + rtol * max(abs(u), abs(un))),
            abs(ep) / (at + rtol * max(abs(p), abs(pn))),
            abs(ev) / (at + rtol * max(abs(v), abs(vn))),
            abs(eq) / (at + rtol * max(abs(q), abs(qn))),
        )
        crossing = un <= u_floor
        if not math.isfinite(err):
            err = math.inf
        # a stage dipped below zero although the endpoint is fine: shrink
        if sign_hit and not crossing:
            err = max(err, 2.0)

        if err <= 1.0:
            steps += 1
            K = np.array([k1, k2, k3, k4, k5, k6, k7])
            starts.append(r)
            hs.append(h)
            y0s.append((u, p, v, q))
            coefs.append(h * (K.T @ _P))
            scales.append(log_scale)
            rel_err += abs(eu) / max(abs(un), 1e-300)
            if crossing:
                r_cross = _locate_crossing(r, h, np.array([u, p, v, q]), coefs[-1], u_floor)
                termination = Termination(TerminationKind.POSITIVITY_LOST, r_cross)
                break
            r = r + h if r + h < rmax else rmax
            u, p, v, q = un, pn, vn, qn
            k1 = k7
            big = max(abs(u), abs(p), abs(v), abs(q))
            if renormalize and big > RENORM_THRESHOLD:
                k = int(math.floor(math.log2(big)))
                fac = math.ldexp(1.0, -k)
                u, p, v, q = u * fac, p * fac, v * fac, q * fac
                k1 = tuple(x * fac for x in k1)
                log_scale += k * LN2
            elif big > OVERFLOW_LIMIT or not math.isfinite(big):
                termination = Termination(TerminationKind.OVERFLOW, r)
                break
            end_state = (u, p, v, q)
            fac = 0.9 * err ** -0.2 if err > 0 else 5.0
            h *= min(5.0, max(0.2, fac))
        else:
            if crossing and h < 1e-10 * max(r, 1.0):
                # stiff approach to u = 0 (alpha < 0): extrapolate the zero linearly
                r_cross = r - u / p if p < 0 else r
                termination = Termination(TerminationKind.POSITIVITY_LOST, max(r, r_cross))
                break
            fac = 0.9 * err ** -0.2 if math.isfinite(err) else 0.1
            h *= min(1.0, max(0.1, fac))
        if h < 1e-14 * r:
            termination = Termination(TerminationKind.STEP_UNDERFLOW, r)
            break

    if not starts:
        raise RuntimeError("integration did not accept a single step")
    dense = DenseOutput(
        np.array(starts), np.array(hs), np.array(y0s), np.array(coefs), np.array(scales)
    )
    r_last = termination.r if not termination.ok else rmax
    r_last = min(r_last, dense.r_max)
    grid = _output_grid(r0, r_last, controls.output_points_per_decade) if r_last > r0 else np.array([r0])
    if extra_radii is not None:
        extra = np.asarray(extra_radii, dtype=float)
        extra = extra[(extra > r0) & (extra < r_last)]
        grid = np.unique(np.concatenate([grid, extra]))
    ys, ls = dense(grid[1:])
    samples = [StateVector(r0, st.u, st.du, st.v, st.dv, 0.0)]
    for rr, yy, ll in zip(grid[1:], ys, ls):
        samples.append(StateVector(float(rr), *map(float, yy), log_scale=float(ll)))
    if termination.ok and end_state is not None:
        # pin the final sample to the exact step endpoint
        samples[-1] = StateVector(rmax, *end_state, log_scale=log_scale)
    if not termination.ok:
        # keep only samples that are strictly positive
        samples = [s for s in samples if s.u > 0 and s.r < termination.r] or samples[:1]
    return Trajectory(
        problem=problem,
        origin=origin,
        samples=tuple(samples),
        log_scale=log_scale if renormalize else 0.0,
        termination=termination,
        series=series,
        dense=dense,
        rel_error_estimate=rel_err,
        n_steps=steps,
    )


def _locate_crossing(r: float, h: float, y0: np.ndarray, coef: np.ndarray, level: float) -> float:
    """Bisect the continuous extension for ``u = level`` inside one step."""

    def u_at(theta: float) -> float:
        return float(y0[0] + coef[0] @ np.array([theta, theta**2, theta**3, theta**4]))

    lo, hi = 0.0, 1.0
    if u_at(hi) > level:
        return r + h
    while (hi - lo) * h > 1e-10 * max(r, 1e-300) * 0.5:
        mid = 0.5 * (lo + hi)
        if u_at(mid) > level:
            lo = mid
        else:
            hi = mid
    return r + 0.5 * (lo + hi) * h


def integrate(
    problem: Problem,
    origin: OriginData,
    controls: IntegratorControls | None = None,
    *,
    extra_radii: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate from the origin data out to ``controls.rmax``.

    Terminates early on loss of positivity (``u <= 1e-12 u0``), overflow of any
    component beyond 1e300, or step-size underflow.  ``extra_radii`` adds
    output samples (evaluated by the continuous extension) to the geometric
    grid.
    """
    _check_problem(problem)
    return _run(problem, origin, controls or IntegratorControls(), False, extra_radii)


def integrate_linear_renormalized(
    n: int,
    origin: OriginData,
    controls: IntegratorControls | None = None,
    *,
    extra_radii: Sequence[float] | None = None,
) -> Trajectory:
    """Integrate the linear case ``alpha = 1`` with periodic power-of-two rescaling.

    Whenever the max-norm of the state exceeds 1e100 the state is multiplied
    by ``2^-k`` and ``k ln 2`` is added to the running log-scale; samples carry
    the scaled state together with the log-scale in force at that radius.
    """
    problem = Problem(n, 1.0)
    controls = controls or IntegratorControls(rmax=800.0)
    return _run(problem, origin, controls, True, extra_radii)
