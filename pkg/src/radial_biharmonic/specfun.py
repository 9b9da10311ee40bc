"""Gamma, modified Bessel I_nu, series J_nu and the two radial alpha = 1 modes.

The radial solutions of ``Delta^2 u = u`` that are smooth at the origin are
spanned by the spherical averages of ``exp(x_1)`` and ``cos(x_1)``::

    u1(r) = Gamma(n/2) (r/2)^(1 - n/2) I_{n/2-1}(r)
    u2(r) = Gamma(n/2) (r/2)^(1 - n/2) J_{n/2-1}(r)

normalised so that ``u1(0) = u2(0) = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "BesselEval",
    "PrecisionError",
    "bessel_i",
    "bessel_j",
    "crossover_radius",
    "exp_mode_u1",
    "gamma_fn",
    "osc_mode_u2",
]

OVERFLOW_RADIUS = 700.0
OSC_MODE_MAX_RADIUS = 60.0
HANKEL_TERMS = 8

# Lanczos approximation, g = 7, 9 terms.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


class PrecisionError(ArithmeticError):
    """Requested argument lies outside the range where the series is reliable."""


@dataclass(frozen=True)
class BesselEval:
    """Value of ``I_nu(r)``, or of ``exp(-r) I_nu(r)`` when ``log_scaled`` is set."""

    value: float
    log_scaled: bool
    series_terms_used: int


def gamma_fn(x: float) -> float:
    """Gamma function for ``x > 0`` (Lanczos, relative error ~1e-15)."""
    if not x > 0:
        raise ValueError(f"gamma_fn requires x > 0, got {x!r}")
    if x < 0.5:
        # reflection keeps the Lanczos sum in its accurate range
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    if x > 140.0:
        # split the power to stay finite a little longer
        half = t ** (0.5 * (z + 0.5))
        return math.sqrt(2.0 * math.pi) * half * half * math.exp(-t) * acc
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * acc


def crossover_radius(nu: float) -> float:
    """Radius at which :func:`bessel_i` switches from the series to the Hankel expansion.

    At least ``max(20, 2 nu^2)``, pushed further out until the first omitted
    Hankel term drops below 1e-12.
    """
    base = max(20.0, 2.0 * nu * nu)
    mu = 4.0 * nu * nu
    a = 1.0
    for k in range(1, HANKEL_TERMS + 2):
        a *= (mu - (2 * k - 1) ** 2) / (k * 8.0)
    if a == 0.0:
        return base
    return max(base, (abs(a) * 1e12) ** (1.0 / (HANKEL_TERMS + 1)))


def _log_gamma(x: float) -> float:
    return math.lgamma(x)


def _bessel_i_series(nu: float, r: float, scaled: bool) -> tuple[float, int]:
    if r == 0.0:
        if nu == 0.0:
            return 1.0, 1
        if nu > 0.0:
            return 0.0, 1
        raise ValueError("I_nu(0) is singular for nu < 0")
    # first term in log space so that scaled evaluation never overflows
    log_t0 = nu * math.log(0.5 * r) - _log_gamma(nu + 1.0)
    if scaled:
        log_t0 -= r
    term = 1.0
    total = 1.0
    q = 0.25 * r * r
    l = 0
    while True:
        l += 1
        term *= q / (l * (l + nu))
        total += term
        if term < 1e-17 * total and l > q ** 0.5:
            break
        if l > 10_000:
            break
    return math.exp(log_t0) * total, l + 1


def _hankel_terms(nu: float, r: float) -> tuple[float, int]:
    """Return ``1 + sum_k (-1)^k a_k(nu) / r^k`` with a divergence guard."""
    mu = 4.0 * nu * nu
    total = 1.0
    term = 1.0
    used = 1
    for k in range(1, HANKEL_TERMS + 1):
        nxt = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * r)
        if abs(nxt) > abs(term) and k > 1:
            break
        term = nxt
        total += term
        used += 1
        if term == 0.0:
            break
    return total, used


def bessel_i(nu: float, r: float, scaled: bool = False) -> BesselEval:
    """Modified Bessel function of the first kind ``I_nu(r)`` for ``nu > -1``, ``r >= 0``.

    Below :func:`crossover_radius` the ascending series is summed; beyond it the
    large-argument (Hankel) expansion with up to eight correction terms is
    used.  With ``scaled=True`` the value ``exp(-r) I_nu(r)`` is returned, which
    is mandatory for ``r > 700``.
    """
    if r < 0:
        raise ValueError(f"bessel_i requires r >= 0, got {r!r}")
    if not nu > -1.0:
        raise ValueError(f"bessel_i requires nu > -1, got {nu!r}")
    if not scaled and r > OVERFLOW_RADIUS:
        raise OverflowError(f"I_nu({r}) overflows; call with scaled=True")
    if r < crossover_radius(nu):
        value, used = _bessel_i_series(nu, r, scaled)
        return BesselEval(value, scaled, used)
    corr, used = _hankel_terms(nu, r)
    pref = 1.0 / math.sqrt(2.0 * math.pi * r)
    if not scaled:
        pref *= math.exp(r)
    return BesselEval(pref * corr, scaled, used)


def bessel_j(nu: float, r: float) -> float:
    """Bessel function ``J_nu(r)`` from the ascending series only (small ``r``)."""
    if r < 0:
        raise ValueError(f"bessel_j requires r >= 0, got {r!r}")
    if r == 0.0:
        return 1.0 if nu == 0.0 else 0.0
    q = 0.25 * r * r
    term = 1.0
    total = 1.0
    l = 0
    while True:
        l += 1
        term *= -q / (l * (l + nu))
        total += term
        if abs(term) < 1e-17 * abs(total) and l > q ** 0.5:
            break
        if l > 10_000:
            break
    return math.exp(nu * math.log(0.5 * r) - _log_gamma(nu + 1.0)) * total


def exp_mode_u1(n: int, r: float, scaled: bool = False) -> float:
    """Radial solution with ``u1(0) = 1``, ``Delta u1(0) = 1``; ``exp(-r) u1`` if ``scaled``."""
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r!r}")
    if not scaled and r > OVERFLOW_RADIUS:
        raise OverflowError(f"u1({r}) overflows; call with scaled=True")
    nu = 0.5 * n - 1.0
    if r < crossover_radius(nu):
        # sum_l Gamma(n/2) / (l! Gamma(l + n/2)) (r/2)^(2l), no singular prefactor
        q = 0.25 * r * r
        term = 1.0
        total = 1.0
        l = 0
        while q > 0.0:
            l += 1
            term *= q / (l * (l + nu))
            total += term
            if term < 1e-17 * total and l > q ** 0.5:
                break
        return total * math.exp(-r) if scaled else total
    bi = bessel_i(nu, r, scaled=True)
    log_pref = math.lgamma(0.5 * n) - nu * math.log(0.5 * r)
    value = math.exp(log_pref) * bi.value
    return value if scaled else value * math.exp(r)


def osc_mode_u2(n: int, r: float) -> float:
    """Radial solution with ``u2(0) = 1``, ``Delta u2(0) = -1`` (alternating series).

    The series is accumulated in exact rational arithmetic, so the result is
    correctly rounded despite the cancellation; the argument is still capped
    at ``r = 60`` to keep the rational terms small.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if r < 0:
        raise ValueError(f"r must be >= 0, got {r!r}")
    if r > OSC_MODE_MAX_RADIUS:
        raise PrecisionError(f"osc_mode_u2 is limited to r <= {OSC_MODE_MAX_RADIUS}")
    if r == 0.0:
        return 1.0
    q = Fraction(r) ** 2 / 4
    half_n = Fraction(n, 2)
    term = Fraction(1)
    total = Fraction(1)
    l = 0
    qf = float(q)
    while True:
        l += 1
        term *= -q / (l * (l - 1 + half_n))
        total += term
        if l > qf ** 0.5 + 2 and abs(float(term)) < 1e-20 * max(1e-300, abs(float(total))):
            break
        if l > 2000:
            break
    return float(total)
