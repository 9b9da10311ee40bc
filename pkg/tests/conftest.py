from __future__ import annotations

import numpy as np

from radial_biharmonic.integrator import Termination, TerminationKind, Trajectory
from radial_biharmonic.series import OriginData, Problem, StateVector


def synthetic_trajectory(problem: Problem, r, u, du=None, lap=None) -> Trajectory:
    """Trajectory built from closed-form samples (no series, no dense output)."""
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    du = np.gradient(u, r) if du is None else np.asarray(du, dtype=float)
    lap = np.zeros_like(r) if lap is None else np.asarray(lap, dtype=float)
    samples = tuple(
        StateVector(float(a), float(b), float(c), float(d), 0.0) for a, b, c, d in zip(r, u, du, lap)
    )
    return Trajectory(
        problem=problem,
        origin=OriginData(float(u[0]), 0.0),
        samples=samples,
        log_scale=0.0,
        termination=Termination(TerminationKind.REACHED_RMAX, float(r[-1])),
    )


def geometric(r0: float, r1: float, per_decade: int = 64) -> np.ndarray:
    m = int(round(per_decade * np.log10(r1 / r0)))
    return np.geomspace(r0, r1, m + 1)
