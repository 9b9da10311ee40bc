from __future__ import annotations


import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radial_biharmonic.integrator import IntegratorControls, integrate, integrate_linear_renormalized
from radial_biharmonic.oracle import (
    NonConvergenceError,
    PicardConfig,
    PicardPositivityError,
    anchored_reconstruction,
    cumulative_simpson_uniform,
    picard_solve,
    radial_weight_integral,
    repr_lift,
)
from radial_biharmonic.series import OriginData, Problem

AGREEMENT_CASES = [
    (1, 1.0, OriginData(1.0, 1.0)),
    (2, 0.5, OriginData(1.0, 0.3)),
    (3, -2.0, OriginData(1.0, 0.5)),
    (4, -1.0, OriginData(2.0, -0.1)),
    (5, 0.0, OriginData(1.0, 1.0)),
]


# ------------------------------------------------------------------ quadrature


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_lift_of_constant(n):
    r = np.linspace(0, 3.0, 129)
    g = repr_lift(np.full_like(r, 2.5), n, 3.0)
    assert np.allclose(g, 2.5 * r**2 / (2 * n), rtol=1e-14, atol=1e-14)


@pytest.mark.parametrize("n", [1, 2, 3, 6])
def test_lift_of_square(n):
    r = np.linspace(0, 2.0, 65)
    g = repr_lift(r**2, n, h=r[1])
    assert np.allclose(g, r**4 / (4 * (n + 2)), rtol=1e-13, atol=1e-14)


def test_lift_of_zero():
    assert np.all(repr_lift(np.zeros(65), 3, 1.0) == 0.0)


def test_lift_needs_spacing():
    with pytest.raises(TypeError):
        repr_lift(np.ones(65), 3)


def test_cumulative_simpson_cubic_exact():
    x = np.linspace(0.0, 2.0, 11)
    f = 1 + x - 3 * x**2 + x**3
    exact = x + x**2 / 2 - x**3 + x**4 / 4
    assert np.allclose(cumulative_simpson_uniform(f, x[1]), exact, atol=1e-14)
    with pytest.raises(ValueError):
        cumulative_simpson_uniform(f[:-1], x[1])


def test_radial_weight_integral_exact_for_quadratics():
    x = np.linspace(0.0, 1.5, 33)
    got = radial_weight_integral(1 - x**2, 3, x[1])
    assert np.allclose(got, x**3 / 3 - x**5 / 5, atol=1e-15)


# ---------------------------------------------------------------- picard_solve


def test_picard_alpha_zero_two_iterations():
    t = picard_solve(Problem(3, 0.0), OriginData(1.0, 0.0), PicardConfig(R=2.0, grid_points=257))
    assert t.meta["iterations"] == 2
    assert np.max(np.abs(t.u - (1 + t.r**4 / 120))) < 1e-14


def test_picard_sinh():
    t = picard_solve(Problem(3, 1.0), OriginData(1.0, 1.0), PicardConfig(R=5.0))
    exact = np.ones_like(t.r)
    exact[1:] = np.sinh(t.r[1:]) / t.r[1:]
    assert np.max(np.abs(t.u - exact)) < 1e-8


def test_picard_cosh():
    t = picard_solve(Problem(1, 1.0), OriginData(1.0, 1.0), PicardConfig(R=3.0))
    assert np.max(np.abs(t.u - np.cosh(t.r))) < 1e-8
    assert np.max(np.abs(t.du - np.sinh(t.r))) < 1e-8
    assert np.max(np.abs(t.v - np.cosh(t.r))) < 1e-8


@pytest.mark.parametrize("n, alpha, origin", AGREEMENT_CASES)
def test_oracle_integrator_agreement(n, alpha, origin):
    p = Problem(n, alpha)
    oracle = picard_solve(p, origin)
    R = min(oracle.meta["R"], 5.0)
    if alpha == 1.0:
        traj = integrate_linear_renormalized(n, origin, IntegratorControls(rmax=R))
    else:
        traj = integrate(p, origin, IntegratorControls(rmax=R))
    mask = oracle.r <= R
    ref = traj.evaluate(oracle.r[mask])[:, 0]
    diff = np.max(np.abs(oracle.u[mask] - ref))
    assert diff <= 1e-8 * (1 + np.max(oracle.u[mask]))


@pytest.mark.parametrize("n, alpha, origin", [c for c in AGREEMENT_CASES if c[1] != 0.0])
def test_monotone_residual(n, alpha, origin):
    hist = picard_solve(Problem(n, alpha), origin).meta["update_history"]
    tail = hist[-5:]
    assert len(tail) == 5
    ratios = [b / a for a, b in zip(tail, tail[1:])]
    assert all(q < 0.5 for q in ratios)


@pytest.mark.parametrize(
    "n, alpha, origin, R",
    [(3, 0.0, OriginData(1.0, 0.0), 2.0), (3, 1.0, OriginData(1.0, 1.0), 5.0), (1, 1.0, OriginData(1.0, 1.0), 3.0)]
    + [(*c, 5.0) for c in AGREEMENT_CASES],
)
def test_grid_refinement(n, alpha, origin, R):
    cfg = PicardConfig(R=R)
    coarse = picard_solve(Problem(n, alpha), origin, cfg)
    fine = picard_solve(Problem(n, alpha), origin, cfg.refined())
    assert fine.r.size == 2 * coarse.r.size - 1
    assert np.max(np.abs(fine.u[::2] - coarse.u)) < 1e-9


@pytest.mark.parametrize("n", [1, 2, 3, 5])
@pytest.mark.parametrize("r0", [1.0, 2.0])
def test_anchored_identity(n, r0):
    t = picard_solve(Problem(n, -1.0), OriginData(1.0, 0.5), PicardConfig(R=4.0, grid_points=2049))
    i0 = int(round(r0 / t.r[1]))
    rebuilt = anchored_reconstruction(t.r, t.v, n, i0, t.u[i0])
    assert np.max(np.abs(rebuilt - t.u[i0:])) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 6), st.integers(64, 1020))
def test_anchored_identity_any_anchor(n, i0):
    t = picard_solve(Problem(n, 0.5), OriginData(1.0, 0.2), PicardConfig(R=3.0, grid_points=1025))
    rebuilt = anchored_reconstruction(t.r, t.v, n, i0, t.u[i0])
    assert np.max(np.abs(rebuilt - t.u[i0:])) < 1e-10


def test_positivity_halving():
    # the starting iterate 1 - r^2/4 vanishes at r = 2, so only [0, 1] survives
    t = picard_solve(Problem(1, -0.5), OriginData(1.0, -0.5), PicardConfig(R=8.0, grid_points=513))
    assert t.meta["radii_tried"] == [8.0, 4.0, 2.0, 1.0]
    assert t.meta["R"] == 1.0
    assert np.all(t.u > 0)


def test_positivity_error():
    with pytest.raises(PicardPositivityError):
        picard_solve(Problem(3, -1.0), OriginData(1.0, -100.0), PicardConfig(R=8.0, grid_points=257))


def test_non_convergence_reported():
    with pytest.raises(NonConvergenceError) as exc:
        picard_solve(Problem(3, 0.5), OriginData(1.0, 0.0), PicardConfig(max_iterations=2))
    assert len(exc.value.history) == 2
    assert exc.value.R == 5.0


def test_anchor_index_validation():
    t = picard_solve(Problem(3, 0.0), OriginData(1.0, 0.0), PicardConfig(R=1.0, grid_points=65))
    for i0 in (0, 61, 64):
        with pytest.raises(ValueError):
            anchored_reconstruction(t.r, t.v, 3, i0, t.u[i0])


def test_config_validation():
    with pytest.raises(ValueError):
        PicardConfig(R=11.0)
    with pytest.raises(ValueError):
        PicardConfig(grid_points=63)
    with pytest.raises(ValueError):
        PicardConfig(grid_points=100)
    with pytest.raises(ValueError):
        PicardConfig(tol=0.0)
    with pytest.raises(ValueError):
        picard_solve(Problem(3, 1.5), OriginData(1.0, 0.0))
