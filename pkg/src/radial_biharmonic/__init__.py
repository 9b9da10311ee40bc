"""Radial solutions of ``Delta^2 u = u^alpha`` for ``alpha <= 1``: integration,
asymptotic catalog, limit extraction and an independent Picard oracle."""

from __future__ import annotations

from .asymptotics import (
    AsymptoticLaw,
    LawForm,
    Regime,
    RegimeTag,
    classify,
    powerlaw_constant,
    predicted_law,
    subsolution_constant,
    subsolution_margin,
    supercritical_constant,
)
from .extraction import (
    FitModel,
    LimitEstimate,
    Weight,
    aux_integral,
    estimate_limit,
    intermediate_limits,
    ratio_series,
    tail_integral,
)
from .integrator import (
    IntegratorControls,
    Trajectory,
    integrate,
    integrate_linear_renormalized,
    ode_rhs,
)
from .oracle import PicardConfig, picard_solve, repr_lift
from .series import OriginData, Problem, StateVector, startup_series, taylor_coeffs

__version__ = "0.1.0"
