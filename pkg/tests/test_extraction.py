from __future__ import annotations

import math

import numpy as np
import pytest
from conftest import geometric, synthetic_trajectory
from hypothesis import given, settings
from hypothesis import strategies as st

from radial_biharmonic.asymptotics import RegimeMismatchError, predicted_law
from radial_biharmonic.extraction import (
    AuxKind,
    DegenerateFitError,
    FitModel,
    InsufficientPointsError,
    RatioSeries,
    TailFitError,
    Weight,
    aux_integral,
    estimate_limit,
    intermediate_limits,
    ratio_series,
    tail_integral,
)
from radial_biharmonic.integrator import (
    IntegratorControls,
    integrate,
    integrate_linear_renormalized,
)
from radial_biharmonic.series import OriginData, Problem


# ---------------------------------------------------------------- ratio_series


def test_ratio_exact_power_law_is_one():
    p = Problem(3, 0.5)
    law = predicted_law(p)
    r = geometric(1e-2, 1e4)
    tr = synthetic_trajectory(p, r, law(r), du=8 * law(r) / r)
    rs = ratio_series(tr, law)
    assert np.allclose(rs.ratio, 1.0, rtol=1e-14)


def test_ratio_exp_mode_at_40():
    tr = integrate_linear_renormalized(3, OriginData(1.0, 1.0), IntegratorControls(rmax=40.0), extra_radii=[40.0])
    rs = ratio_series(tr, predicted_law(Problem(3, 1.0), OriginData(1.0, 1.0)))
    assert rs.r[-1] == 40.0
    assert rs.ratio[-1] == pytest.approx(1 - math.exp(-80), abs=1e-8)


def test_ratio_quartic_at_100():
    p = Problem(3, 0.0)
    tr = integrate(p, OriginData(1.0, 0.0), IntegratorControls(rmax=100.0))
    rs = ratio_series(tr, predicted_law(p))
    # 1 + 120 / 100^4 = 1 + 1.2e-6
    assert rs.ratio[-1] == pytest.approx(1.0000012, abs=1e-12)
    assert np.allclose(rs.ratio, 1 + 120 / rs.r**4, rtol=1e-9)


def test_ratio_mismatch_and_failed_trajectory():
    tr = integrate(Problem(3, 0.0), OriginData(1.0, 0.0), IntegratorControls(rmax=10.0))
    with pytest.raises(RegimeMismatchError):
        ratio_series(tr, predicted_law(Problem(3, 0.5)))
    bad = integrate(Problem(3, 1.0), OriginData(1.0, -1.0), IntegratorControls(rmax=10.0))
    with pytest.raises(ValueError):
        ratio_series(bad, predicted_law(Problem(3, 1.0), OriginData(1.0, 1.0)))


def test_ratio_respects_log_domain():
    p = Problem(2, -1.0)
    tr = integrate(p, OriginData(1.0, 0.0), IntegratorControls(rmax=1e3))
    rs = ratio_series(tr, predicted_law(p))
    assert rs.r[0] > math.e and np.all(np.isfinite(rs.ratio))


# -------------------------------------------------------------- estimate_limit


def test_constant_series():
    r = geometric(1.0, 1e4, 16)
    for model in FitModel:
        est = estimate_limit(RatioSeries(r, np.full_like(r, 0.37)), model)
        assert est.value == 0.37
        assert est.uncertainty == 0.0


def test_inverse_log_recovers_limit():
    r = geometric(1e2, 1e6, 16)
    est = estimate_limit(list(zip(r, 1 + 3 / np.log(r))), FitModel.INVERSE_LOG)
    assert est.value == pytest.approx(1.0, abs=1e-6)
    assert est.uncertainty >= 0
    assert est.tail_min <= est.tail_max


def test_power_correction_recovers_limit():
    r = geometric(1.0, 1e4, 16)
    est = estimate_limit(RatioSeries(r, 2 + 5 / r), FitModel.POWER_CORRECTION)
    assert est.value == pytest.approx(2.0, abs=1e-9)
    est2 = estimate_limit(RatioSeries(r, 2 - 7 / r**2), FitModel.POWER_CORRECTION)
    assert est2.value == pytest.approx(2.0, abs=1e-9)


def test_aitken_exact_on_geometric_error():
    r = geometric(1.0, 1e3, 16)
    est = estimate_limit(RatioSeries(r, 1 + 120 / r**4), FitModel.AITKEN)
    assert est.value == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=40)
@given(
    st.floats(min_value=-5, max_value=5),
    st.floats(min_value=-20, max_value=20),
    st.sampled_from([FitModel.INVERSE_LOG, FitModel.POWER_CORRECTION]),
)
def test_model_sanity(c_inf, c1, model):
    r = geometric(10.0, 1e6, 16)
    y = c_inf + c1 * (1 / np.log(r) if model is FitModel.INVERSE_LOG else 1 / r)
    est = estimate_limit(RatioSeries(r, y), model)
    assert est.value == pytest.approx(c_inf, rel=1e-6, abs=1e-6)


def test_insufficient_and_degenerate():
    r = geometric(1.0, 1e4, 1)
    with pytest.raises(InsufficientPointsError):
        estimate_limit(RatioSeries(r, 1 / r), FitModel.LAST_VALUE)
    r = geometric(1.0, 50.0, 16)
    with pytest.raises(InsufficientPointsError):
        estimate_limit(RatioSeries(r, 1 / r), FitModel.LAST_VALUE)
    # equal radii collapse the 1/ln r column onto the constant one
    r = np.full(20, 10.0)
    r = np.concatenate([[0.01], r])
    r[1:] *= 1 + 1e-15 * np.arange(20)
    with pytest.raises(DegenerateFitError):
        estimate_limit(RatioSeries(r, np.linspace(0, 1, 21)), FitModel.INVERSE_LOG)


# --------------------------------------------------------------- tail_integral


def test_tail_synthetic_quartic():
    p = Problem(3, -1.0)
    r = geometric(1e-5, 1e4, 64)
    u = (1 + r) ** 4
    tr = synthetic_trajectory(p, r, u, du=4 * (1 + r) ** 3)
    fv = tail_integral(tr, Weight.TIMES_T, kappa=4.0)
    assert fv.value == pytest.approx(1 / 6, abs=1e-8)
    assert fv.D == fv.value and fv.N is None
    assert fv.tail_part >= 0


def test_tail_synthetic_exponential():
    p = Problem(1, -2.0)
    r = geometric(1e-6, 40.0, 128)
    tr = synthetic_trajectory(p, r, np.exp(r), du=np.exp(r))
    fv = tail_integral(tr, Weight.PLAIN, kappa=3.0)
    assert fv.N == pytest.approx(0.5, abs=1e-8)


def test_tail_non_integrable():
    p = Problem(1, -1.0)
    r = geometric(1e-3, 1e3, 16)
    tr = synthetic_trajectory(p, r, np.ones_like(r), du=np.zeros_like(r))
    with pytest.raises(ValueError, match="not integrable"):
        tail_integral(tr, Weight.PLAIN, kappa=0.0)


def test_tail_fit_residual_reported():
    # u = r^2 claimed but the data grow like r^4: the tail model is rejected
    p = Problem(3, -2.0)
    r = geometric(1e-3, 10.0, 32)
    tr = synthetic_trajectory(p, r, 1 + r**4, du=4 * r**3)
    with pytest.raises(TailFitError):
        tail_integral(tr, Weight.TIMES_T)


def test_tail_regime_gate():
    tr = integrate(Problem(3, 0.5), OriginData(1.0, 0.0), IntegratorControls(rmax=1e3))
    with pytest.raises(RegimeMismatchError):
        tail_integral(tr, Weight.TIMES_T)


@pytest.mark.parametrize(
    "n, alpha, lap0, weight, rmax",
    [(3, -2.0, 0.5, Weight.TIMES_T, 1e5), (2, -2.0, 0.0, Weight.TIMES_T, 1e6), (1, -1.0, 0.0, Weight.PLAIN, 1e5), (4, -1.5, 1.0, Weight.TIMES_T, 1e5)],
)
def test_tail_completion_error(n, alpha, lap0, weight, rmax):
    p, o = Problem(n, alpha), OriginData(1.0, lap0)
    full = tail_integral(integrate(p, o, IntegratorControls(rmax=rmax)), weight)
    half = tail_integral(integrate(p, o, IntegratorControls(rmax=rmax / 2)), weight)
    assert full.value > 0 and half.value > 0
    assert abs(full.value - half.value) < 3 * max(full.error_estimate, half.error_estimate)


# ---------------------------------------------------------------- aux_integral


def test_aux_constant_u():
    r = geometric(1e-3, 10.0, 64)
    one = np.ones_like(r)
    F = aux_integral(synthetic_trajectory(Problem(3, -1.0), r, one, du=0 * r), AuxKind.F)
    H = aux_integral(synthetic_trajectory(Problem(1, -1 / 3), r, one, du=0 * r), AuxKind.H)
    # Simpson in log r with h = ln(10)/64: the integrands are exponentials there,
    # so the running integral carries a relative O(h^4) error
    assert np.allclose(F.value, r**2 / 2, rtol=2e-6)
    assert np.allclose(H.value, r, rtol=2e-6)


def test_aux_closed_forms():
    # no series here: the head on [0, r0] is the constant-integrand estimate, error O(r0^2)
    r = geometric(1e-5, 100.0, 64)
    G = aux_integral(synthetic_trajectory(Problem(2, -1.0), r, 1 + r**2, du=2 * r), AuxKind.G)
    assert np.allclose(G.value, 0.5 * np.log1p(r**2), rtol=2e-6, atol=1e-9)
    H = aux_integral(synthetic_trajectory(Problem(1, -1 / 3), r, (1 + r) ** 3, du=3 * (1 + r) ** 2), AuxKind.H)
    assert np.allclose(H.value, np.log1p(r), rtol=2e-6, atol=1e-9)


def test_aux_regime_mismatch():
    tr = integrate(Problem(3, -1.0), OriginData(1.0, 0.0), IntegratorControls(rmax=100.0))
    with pytest.raises(RegimeMismatchError):
        aux_integral(tr, AuxKind.G)
    with pytest.raises(RegimeMismatchError):
        aux_integral(tr, AuxKind.H)
    assert aux_integral(tr, "F").value[-1] > 0


def test_aux_uses_series_head():
    p = Problem(3, -1.0)
    tr = integrate(p, OriginData(2.0, 0.0), IntegratorControls(rmax=1.0))
    F = aux_integral(tr, AuxKind.F)
    # near the origin u ~ 2, so F(r0) ~ r0^2 / 4
    assert F.value[0] == pytest.approx(tr.handoff**2 / 4, rel=1e-6)


# ---------------------------------------------------------- intermediate_limits


def test_intermediate_regime_gate():
    tr = integrate(Problem(3, -2.0), OriginData(1.0, 0.0), IntegratorControls(rmax=1e3))
    with pytest.raises(RegimeMismatchError):
        intermediate_limits(tr)


@pytest.mark.parametrize("n, alpha", [(3, -1.0), (1, -1 / 3)])
def test_headline_vs_composition(n, alpha):
    p = Problem(n, alpha)
    tr = integrate(p, OriginData(1.0, 0.0), IntegratorControls(rmax=1e6))
    rep = intermediate_limits(tr)
    law = predicted_law(p)
    head = estimate_limit(ratio_series(tr, law), FitModel.INVERSE_LOG)
    combined = rep.composed_uncertainty + head.uncertainty * law.constant
    assert abs(rep.composed_headline - head.value * law.constant) <= combined
