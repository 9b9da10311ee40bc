"""Regime catalog for positive radial solutions of ``Delta^2 u = u^alpha``.

For ``alpha <= 1`` every positive radial solution grows at infinity like one
of a handful of comparison functions, depending on the dimension and on where
``alpha`` sits relative to the log-critical exponent (``-1`` for ``n >= 2``,
``-1/3`` for ``n = 1``).  For ``alpha > 1`` only catalog data are exposed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .series import OriginData, Problem
from .specfun import gamma_fn

__all__ = [
    "AsymptoticLaw",
    "CatalogOnlyError",
    "LawForm",
    "MissingFunctionalError",
    "Regime",
    "RegimeMismatchError",
    "RegimeTag",
    "biharmonic_power_factor",
    "classify",
    "compose_headline",
    "critical_exponent",
    "intermediate_targets",
    "powerlaw_constant",
    "powerlaw_log_constant",
    "predicted_law",
    "sobolev_exponent",
    "subsolution_constant",
    "subsolution_margin",
    "supercritical_constant",
]


class RegimeMismatchError(ValueError):
    """Operation requested outside the regime it applies to."""


class CatalogOnlyError(RegimeMismatchError):
    """The regime is listed in the catalog but nothing can be integrated there."""


class MissingFunctionalError(ValueError):
    """A solution-dependent constant was requested without its functionals."""


class RegimeTag(str, enum.Enum):
    EXP_GROWTH = "ExpGrowth"
    POWER_LAW = "PowerLaw"
    LOG_CRITICAL = "LogCritical"
    SOLUTION_DEPENDENT = "SolutionDependent"
    SUPERCRITICAL_CATALOG = "SupercriticalCatalog"
    NONEXISTENCE_CATALOG = "NonexistenceCatalog"
    CRITICAL_CATALOG = "CriticalCatalog"

    @property
    def catalog_only(self) -> bool:
        return self in (
            RegimeTag.SUPERCRITICAL_CATALOG,
            RegimeTag.NONEXISTENCE_CATALOG,
            RegimeTag.CRITICAL_CATALOG,
        )


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    alpha_c: float
    p_sobolev: float


def critical_exponent(n: int) -> float:
    """Log-critical exponent: ``-1`` for ``n >= 2`` and ``-1/3`` for ``n = 1``."""
    return -1.0 / 3.0 if n == 1 else -1.0


def sobolev_exponent(n: int) -> float:
    """``(n+4)/(n-4)`` for ``n >= 5``, infinity otherwise."""
    return (n + 4) / (n - 4) if n >= 5 else math.inf


def classify(n: int, alpha: float) -> Regime:
    """Total classification of ``(n, alpha)``."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    ac = critical_exponent(n)
    ps = sobolev_exponent(n)
    if alpha == 1.0:
        tag = RegimeTag.EXP_GROWTH
    elif alpha < 1.0:
        if alpha > ac:
            tag = RegimeTag.POWER_LAW
        elif alpha == ac:
            tag = RegimeTag.LOG_CRITICAL
        else:
            tag = RegimeTag.SOLUTION_DEPENDENT
    elif alpha < ps:
        tag = RegimeTag.NONEXISTENCE_CATALOG
    elif alpha == ps:
        tag = RegimeTag.CRITICAL_CATALOG
    else:
        tag = RegimeTag.SUPERCRITICAL_CATALOG
    return Regime(tag, ac, ps)


def biharmonic_power_factor(m: float, n: int) -> float:
    """``m (m+n-2) (m-2) (m+n-4)``, so that ``Delta^2 r^m = factor * r^(m-4)``."""
    return m * (m + n - 2) * (m - 2) * (m + n - 4)


def powerlaw_log_constant(n: int, alpha: float) -> float:
    """``log L``; stays finite when ``L`` itself underflows as ``alpha -> 1``."""
    if classify(n, alpha).tag is not RegimeTag.POWER_LAW:
        raise RegimeMismatchError(f"(n={n}, alpha={alpha}) is not in the power-law regime")
    beta = 4.0 * alpha / (1.0 - alpha)
    factors = (n + beta, n + beta + 2.0, beta + 2.0, beta + 4.0)
    if min(factors) <= 0:
        raise AssertionError(f"non-positive factor {factors} inside the power-law regime")
    return -sum(math.log(f) for f in factors) / (1.0 - alpha)


def powerlaw_constant(n: int, alpha: float) -> float:
    """Constant ``L`` of the pure power law ``u ~ L r^(4/(1-alpha))``."""
    return math.exp(powerlaw_log_constant(n, alpha))


def supercritical_constant(n: int, alpha: float) -> float:
    """Catalog constant ``[m(m+2)(n-2-m)(n-4-m)]^(-1/(1-alpha))``, ``m = 4/(alpha-1)``."""
    if n < 5 or not alpha > sobolev_exponent(n):
        raise RegimeMismatchError(f"(n={n}, alpha={alpha}) is not super-critical")
    m = 4.0 / (alpha - 1.0)
    prod = m * (m + 2.0) * (n - 2.0 - m) * (n - 4.0 - m)
    return prod ** (-1.0 / (1.0 - alpha))


def subsolution_constant(n: int, alpha: float) -> float:
    """``M = prod_{l=1,2} (4/(1-alpha) - 2l + 2)(n + 4/(1-alpha) - 2l)``."""
    m = 4.0 / (1.0 - alpha)
    out = 1.0
    for l in (1, 2):
        out *= (m - 2 * l + 2) * (n + m - 2 * l)
    return out


def subsolution_margin(
    n: int,
    alpha: float,
    epsilon: float,
    v0: float,
    lapv0: float,
    r_grid: Sequence[float],
) -> float:
    """Normalised subsolution margin of ``v = v0 + lapv0 r^2/(2n) + epsilon r^(4/(1-alpha))``.

    Returns ``min_r [v^alpha - Delta^2 v] / r^(4 alpha/(1-alpha))`` over the grid,
    where ``Delta^2 v = epsilon M r^(4 alpha/(1-alpha))`` exactly.  Dividing by
    the positive weight keeps the sign, so ``margin >= 0`` certifies
    ``Delta^2 v <= v^alpha`` on the grid.
    """
    if not 0.0 <= alpha < 1.0:
        raise RegimeMismatchError("the subsolution is built for alpha in [0, 1)")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0):
        raise ValueError("grid radii must be positive")
    m = 4.0 / (1.0 - alpha)
    M = subsolution_constant(n, alpha)
    # v / (epsilon r^m) = 1 + (v0 + lapv0 r^2/(2n)) / (epsilon r^m)
    w = 1.0 + (v0 + lapv0 * r**2 / (2.0 * n)) / (epsilon * r**m)
    margin = epsilon**alpha * w**alpha - epsilon * M
    return float(np.min(margin))


class LawForm(str, enum.Enum):
    R_POWER = "RPower"
    R2_SQRT_LOG = "R2SqrtLog"
    R2_LOG = "R2Log"
    R2_LOG_SQRT_LOGLOG = "R2LogSqrtLogLog"
    R3_LOG34 = "R3Log34"
    EXP_MODE = "ExpMode"


@dataclass(frozen=True)
class AsymptoticLaw:
    """Comparison function ``f(r) = constant * shape(r)`` for one regime.

    ``constant`` is ``None`` while the law still needs solution functionals
    (listed in ``needs``).  ``log_constant``, when set, is used for ``log f``
    so that constants below the float range still give usable ratios.
    """

    problem: Problem
    form: LawForm
    constant: float | None
    exponent: float = 0.0
    constant_source: str = "closed_form"
    needs: tuple[str, ...] = field(default=())
    log_constant: float | None = None

    @property
    def resolved(self) -> bool:
        return self.constant is not None

    def r_min_valid(self) -> float:
        """Smallest radius where the comparison function is positive and defined."""
        if self.form in (LawForm.R2_LOG_SQRT_LOGLOG,):
            return math.e
        if self.form in (LawForm.R2_SQRT_LOG, LawForm.R2_LOG, LawForm.R3_LOG34):
            return 1.0
        return 0.0

    def log_shape(self, r: np.ndarray | float) -> np.ndarray:
        """``log`` of the comparison function without its constant."""
        r = np.asarray(r, dtype=float)
        lr = np.log(r)
        if self.form is LawForm.R_POWER:
            return self.exponent * lr
        if self.form is LawForm.R2_SQRT_LOG:
            return 2.0 * lr + 0.5 * np.log(lr)
        if self.form is LawForm.R2_LOG:
            return 2.0 * lr + np.log(lr)
        if self.form is LawForm.R2_LOG_SQRT_LOGLOG:
            return 2.0 * lr + np.log(lr) + 0.5 * np.log(np.log(lr))
        if self.form is LawForm.R3_LOG34:
            return 3.0 * lr + 0.75 * np.log(lr)
        if self.form is LawForm.EXP_MODE:
            return r - 0.5 * (self.problem.n - 1) * lr
        raise AssertionError(self.form)

    def log_f(self, r: np.ndarray | float) -> np.ndarray:
        if self.log_constant is not None:
            return self.log_constant + self.log_shape(r)
        if self.constant is None:
            raise MissingFunctionalError(f"law constant still needs {self.needs}")
        return math.log(self.constant) + self.log_shape(r)

    def __call__(self, r: np.ndarray | float) -> np.ndarray:
        return np.exp(self.log_f(r))

    def describe(self) -> str:
        if self.form is LawForm.R_POWER:
            return f"RPower({self.exponent:.17g})"
        return self.form.value


def predicted_law(
    problem: Problem,
    origin: OriginData | None = None,
    *,
    D: float | None = None,
    N: float | None = None,
    resolve: bool = True,
) -> AsymptoticLaw:
    """Table row for ``problem``: comparison function and its constant.

    Solution-dependent constants need ``origin`` (for ``u(0)`` and
    ``Delta u(0)``) and/or the functionals ``D = int t u^alpha``,
    ``N = int u^alpha``.  With ``resolve=False`` a missing ingredient yields
    an unresolved law listing what it needs instead of raising.
    """
    n, alpha = problem.n, problem.alpha
    regime = classify(n, alpha)
    tag = regime.tag
    if tag.catalog_only:
        raise CatalogOnlyError(f"regime {tag.value} is catalog-only for alpha = {alpha}")

    def need(names: tuple[str, ...]) -> AsymptoticLaw | None:
        have = {"origin": origin is not None, "D": D is not None, "N": N is not None}
        missing = tuple(x for x in names if not have[x])
        if not missing:
            return None
        if resolve:
            raise MissingFunctionalError(f"{tag.value} constant for n={n} needs {missing}")
        form, expo = _solution_dependent_form(n) if tag is RegimeTag.SOLUTION_DEPENDENT else (LawForm.EXP_MODE, 0.0)
        return AsymptoticLaw(problem, form, None, expo, "functionals", missing)

    if tag is RegimeTag.EXP_GROWTH:
        pending = need(("origin",))
        if pending:
            return pending
        assert origin is not None
        c = (origin.u0 + origin.lap0) * gamma_fn(0.5 * n) * 2.0 ** ((n - 5) / 2.0) / math.sqrt(math.pi)
        return AsymptoticLaw(problem, LawForm.EXP_MODE, c, 0.0, "origin")
    if tag is RegimeTag.POWER_LAW:
        log_c = powerlaw_log_constant(n, alpha)
        return AsymptoticLaw(
            problem, LawForm.R_POWER, math.exp(log_c), 4.0 / (1.0 - alpha), log_constant=log_c
        )
    if tag is RegimeTag.LOG_CRITICAL:
        if n >= 3:
            return AsymptoticLaw(problem, LawForm.R2_SQRT_LOG, (n * (n - 2.0)) ** -0.5)
        if n == 2:
            return AsymptoticLaw(problem, LawForm.R2_LOG_SQRT_LOGLOG, 2.0**-0.5)
        return AsymptoticLaw(problem, LawForm.R3_LOG34, (2.0 / 9.0) ** 0.75)
    # solution-dependent rows
    if n >= 3:
        pending = need(("origin", "D"))
        if pending:
            return pending
        assert origin is not None and D is not None
        c = (origin.lap0 + D / (n - 2.0)) / (2.0 * n)
        return AsymptoticLaw(problem, LawForm.R_POWER, c, 2.0, "origin+D")
    if n == 2:
        pending = need(("D",))
        if pending:
            return pending
        return AsymptoticLaw(problem, LawForm.R2_LOG, D / 4.0, 0.0, "D")
    pending = need(("N",))
    if pending:
        return pending
    return AsymptoticLaw(problem, LawForm.R_POWER, N / 6.0, 3.0, "N")


def _solution_dependent_form(n: int) -> tuple[LawForm, float]:
    if n >= 3:
        return LawForm.R_POWER, 2.0
    if n == 2:
        return LawForm.R2_LOG, 0.0
    return LawForm.R_POWER, 3.0


def intermediate_targets(n: int) -> dict[str, float]:
    """Limits of the auxiliary ratios in the log-critical regime of dimension ``n``."""
    if n >= 3:
        k = 1.0 / (2.0 * n * (n - 2.0))
        return {"lap_over_F": 1.0 / (n - 2.0), "u_over_r2F": k, "2logr_over_F2": k}
    if n == 2:
        return {"lap_over_GlogR": 1.0, "u_over_Gr2logr": 0.25, "2loglogr_over_G2": 0.25}
    return {"u2_over_rH": 1.0, "u_over_r3H": 1.0 / 6.0, "4logr_over_3H43": 6.0 ** (-1.0 / 3.0)}


def compose_headline(n: int, first: float, second: float) -> float:
    """Headline log-critical constant from the two intermediate limits.

    ``first`` is the limit of ``u / (r^2 F)`` (``n >= 3``), ``u / (G r^2 ln r)``
    (``n = 2``) or ``u / (r^3 H)`` (``n = 1``); ``second`` the limit of
    ``2 ln r / F^2``, ``2 ln ln r / G^2`` or ``4 ln r / (3 H^(4/3))``.
    """
    if n >= 2:
        return first * math.sqrt(2.0 / second)
    return first * (4.0 / (3.0 * second)) ** 0.75
