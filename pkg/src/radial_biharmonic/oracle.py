"""Independent solver: Picard iteration on the radial representation formula.

For a radial ``C^2`` function ``w`` in ``R^n``,

    w(r) = w(0) + int_0^r s^(1-n) int_0^s t^(n-1) Delta w(t) dt ds,

so ``Delta^2 u = u^alpha`` with data ``(u0, lap0)`` is the fixed point of

    Delta u = lap0 + lift(u^alpha),    u = u0 + lift(Delta u).

The lift is discretised on a uniform grid: the inner integral by product
integration of ``t^(n-1)`` against the piecewise-quadratic interpolant of the
samples (exact in the weight, so no loss of order at the origin), the outer
one by composite Simpson.  This is deliberately unrelated to the Runge-Kutta
integrator, so the two solvers make independent errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrator import Termination, TerminationKind, Trajectory
from .series import OriginData, Problem, StateVector

__all__ = [
    "NonConvergenceError",
    "OracleError",
    "PicardConfig",
    "PicardPositivityError",
    "anchored_reconstruction",
    "cumulative_simpson_uniform",
    "picard_solve",
    "radial_weight_integral",
    "repr_lift",
]

MAX_RADIUS = 10.0
MIN_GRID_POINTS = 64
MAX_HALVINGS = 3


class OracleError(ArithmeticError):
    """The Picard oracle could not produce a fixed point."""


class PicardPositivityError(OracleError):
    """An iterate lost positivity even on the smallest interval tried."""


class NonConvergenceError(OracleError):
    """``max_iterations`` exhausted without meeting the tolerance."""

    def __init__(self, message: str, history: list[float], R: float) -> None:
        super().__init__(message)
        self.history = history
        self.R = R


@dataclass(frozen=True)
class PicardConfig:
    """Interval ``[0, R]`` sampled at ``grid_points`` (odd) uniform nodes.

    ``tol`` bounds the sup-norm Picard update relative to ``max(1, sup |u|)``.
    """

    R: float = 5.0
    grid_points: int = 4097
    max_iterations: int = 200
    tol: float = 1e-13

    def __post_init__(self) -> None:
        if not 0 < self.R <= MAX_RADIUS:
            raise ValueError(f"R must lie in (0, {MAX_RADIUS}], got {self.R}")
        if self.grid_points < MIN_GRID_POINTS:
            raise ValueError(f"grid_points must be >= {MIN_GRID_POINTS}")
        if self.grid_points % 2 == 0:
            raise ValueError("grid_points must be odd (whole Simpson panels)")
        if self.max_iterations < 1 or not self.tol > 0:
            raise ValueError("need max_iterations >= 1 and tol > 0")

    def refined(self) -> "PicardConfig":
        """Same interval with the grid spacing halved."""
        return PicardConfig(self.R, 2 * self.grid_points - 1, self.max_iterations, self.tol)


def _panel_weights(n: int, panels: int, half: bool) -> np.ndarray:
    """``int t^(n-1) L_i(t/h - 2k) dt / h^n`` over panel ``k`` (or its first half).

    ``L_0, L_1, L_2`` are the quadratic Lagrange basis functions on the local
    nodes ``z = 0, 1, 2``.  Gauss-Legendre with ``n//2 + 2`` nodes integrates
    the degree ``n+1`` polynomial exactly.
    """
    zq, wq = np.polynomial.legendre.leggauss(n // 2 + 2)
    Z = 1.0 if half else 2.0
    z = 0.5 * Z * (zq + 1.0)
    wz = 0.5 * Z * wq
    basis = np.stack([(z - 1) * (z - 2) / 2, -z * (z - 2), z * (z - 1) / 2])
    k2 = 2.0 * np.arange(panels)[:, None]
    weight = (k2 + z[None, :]) ** (n - 1) * wz[None, :]
    return weight @ basis.T  # (panels, 3)


def radial_weight_integral(f: np.ndarray, n: int, h: float) -> np.ndarray:
    """``I(r_j) = int_0^{r_j} t^(n-1) f(t) dt`` at every node of a uniform grid."""
    f = np.asarray(f, dtype=float)
    m = f.size
    if m < 3 or m % 2 == 0:
        raise ValueError("need an odd number (>= 3) of uniform samples")
    panels = (m - 1) // 2
    fk = np.stack([f[0:-1:2], f[1::2], f[2::2]], axis=1)
    full = np.sum(_panel_weights(n, panels, False) * fk, axis=1) * h**n
    first = np.sum(_panel_weights(n, panels, True) * fk, axis=1) * h**n
    out = np.empty(m)
    out[0] = 0.0
    acc = np.concatenate(([0.0], np.cumsum(full)))
    out[2::2] = acc[1:]
    out[1::2] = acc[:-1] + first
    return out


def cumulative_simpson_uniform(f: np.ndarray, h: float) -> np.ndarray:
    """Running integral from the first node, Simpson at even nodes.

    Odd nodes add a four-point, cubic-exact rule for the half panel, so the
    running integral is exact for cubics at every node.
    """
    f = np.asarray(f, dtype=float)
    m = f.size
    if m < 5 or m % 2 == 0:
        raise ValueError("need an odd number (>= 5) of uniform samples")
    out = np.empty(m)
    out[0] = 0.0
    panel = h / 3.0 * (f[0:-1:2] + 4.0 * f[1::2] + f[2::2])
    even = np.concatenate(([0.0], np.cumsum(panel)))
    out[0::2] = even
    j = np.arange(1, m, 2)
    fwd = j + 2 < m
    jf = j[fwd] - 1
    # int_{x_jf}^{x_jf+1} from x_jf .. x_jf+3
    out[j[fwd]] = even[jf // 2] + h / 24.0 * (9 * f[jf] + 19 * f[jf + 1] - 5 * f[jf + 2] + f[jf + 3])
    jb = j[~fwd]
    # last odd node: full panel minus int_{x_jb}^{x_jb+1} from x_jb-2 .. x_jb+1
    out[jb] = even[(jb + 1) // 2] - h / 24.0 * (f[jb - 2] - 5 * f[jb - 1] + 19 * f[jb] + 9 * f[jb + 1])
    return out


def _lift(f: np.ndarray, n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(g, g')`` with ``g = int_0^r s^(1-n) I(s) ds`` and ``g' = r^(1-n) I(r)``."""
    inner = radial_weight_integral(f, n, h)
    r = h * np.arange(f.size)
    phi = np.zeros_like(inner)
    # I(s) = O(s^n), so s^(1-n) I(s) -> 0 at the origin
    phi[1:] = inner[1:] / r[1:] ** (n - 1)
    g = cumulative_simpson_uniform(phi, h)
    return g, phi


def repr_lift(f: np.ndarray, n: int, R: float | None = None, *, h: float | None = None) -> np.ndarray:
    """``g(r) = int_0^r s^(1-n) int_0^s t^(n-1) f(t) dt ds`` on a uniform grid over ``[0, R]``."""
    f = np.asarray(f, dtype=float)
    if h is None:
        if R is None:
            raise TypeError("pass the interval end R or the spacing h")
        h = R / (f.size - 1)
    return _lift(f, n, h)[0]


def _iterate(
    problem: Problem, origin: OriginData, R: float, cfg: PicardConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray, list[float], bool] | None:
    n, alpha = problem.n, problem.alpha
    r = np.linspace(0.0, R, cfg.grid_points)
    h = R / (cfg.grid_points - 1)
    u = origin.u0 + origin.lap0 * r**2 / (2.0 * n)
    history: list[float] = []
    for _ in range(cfg.max_iterations):
        if np.any(u <= 0):
            return None
        lift_v, dv = _lift(u**alpha, n, h)
        v = origin.lap0 + lift_v
        lift_u, du = _lift(v, n, h)
        new = origin.u0 + lift_u
        change = float(np.max(np.abs(new - u)))
        history.append(change)
        u = new
        if change <= cfg.tol * max(1.0, float(np.max(np.abs(u)))):
            return r, u, du, v, dv, history, True
    return r, u, du, v, dv, history, False


def picard_solve(
    problem: Problem, origin: OriginData, config: PicardConfig | None = None
) -> Trajectory:
    """Fixed point of the representation formula on ``[0, R]``.

    Starts from ``u0 + lap0 r^2 / (2n)``.  If an iterate loses positivity the
    interval is halved and the iteration restarted, at most three times.  The
    returned trajectory's ``meta`` records the final ``R``, the number of
    iterations, the update history and every radius tried.
    """
    cfg = config or PicardConfig()
    if problem.alpha > 1:
        raise ValueError("the oracle covers alpha <= 1 only")
    R = cfg.R
    tried: list[float] = []
    for attempt in range(MAX_HALVINGS + 1):
        tried.append(R)
        res = _iterate(problem, origin, R, cfg)
        if res is None:
            if attempt == MAX_HALVINGS:
                raise PicardPositivityError(f"iterates lose positivity even on [0, {R}]")
            R *= 0.5
            continue
        r, u, du, v, dv, history, converged = res
        if not converged:
            raise NonConvergenceError(
                f"no fixed point within {cfg.max_iterations} iterations on [0, {R}]",
                history,
                R,
            )
        samples = tuple(
            StateVector(float(a), float(b), float(c), float(d), float(e))
            for a, b, c, d, e in zip(r, u, du, v, dv)
        )
        return Trajectory(
            problem=problem,
            origin=origin,
            samples=samples,
            log_scale=0.0,
            termination=Termination(TerminationKind.REACHED_RMAX, float(R)),
            n_steps=len(history),
            meta={
                "solver": "picard",
                "R": float(R),
                "radii_tried": tried,
                "iterations": len(history),
                "update_history": list(history),
                "grid_points": cfg.grid_points,
            },
        )
    raise AssertionError("unreachable")


def _anchor_kernel(n: int, r0: float, r: np.ndarray) -> np.ndarray:
    """``int_{r0}^r s^(1-n) ds`` in closed form."""
    if n == 1:
        return r - r0
    if n == 2:
        return np.log(r / r0)
    return (r0 ** (2 - n) - r ** (2 - n)) / (n - 2)


def anchored_reconstruction(
    r: np.ndarray, lap: np.ndarray, n: int, i0: int, u_anchor: float
) -> np.ndarray:
    """Rebuild ``u`` on ``[r_{i0}, R]`` from ``u(r0)`` and samples of ``Delta u``.

    Uses the split form

        u(r) = u(r0) + A int_{r0}^r s^(1-n) ds + int_{r0}^r s^(1-n) int_{r0}^s t^(n-1) Delta u,

    with ``A = int_0^{r0} t^(n-1) Delta u``.  ``r`` must be the uniform grid
    starting at 0 on which ``lap`` is sampled; the result covers ``r[i0:]``.
    """
    r = np.asarray(r, dtype=float)
    lap = np.asarray(lap, dtype=float)
    if not 0 < i0 <= r.size - 5:
        raise ValueError("anchor index must be interior with at least 5 samples after it")
    h = r[1] - r[0]
    inner = radial_weight_integral(lap, n, h)
    A = inner[i0]
    rs = r[i0:]
    r0 = rs[0]
    phi = (inner[i0:] - A) / rs ** (n - 1)
    outer = cumulative_simpson_uniform(phi, h) if rs.size % 2 == 1 else np.concatenate(
        (cumulative_simpson_uniform(phi[:-1], h), [0.0])
    )
    if rs.size % 2 == 0:
        # even count: close the last interval with the backward four-point rule
        outer[-1] = outer[-2] + h / 24.0 * (phi[-4] - 5 * phi[-3] + 19 * phi[-2] + 9 * phi[-1])
    return u_anchor + A * _anchor_kernel(n, r0, rs) + outer
