import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meanapprox.grid import (BallSpec, Field, build_ball_sampler, build_disk_grid,
                             build_radial_grid, free_point_grid, integrate, integrate_func,
                             refinement_estimate, split_gauss)
from conftest import RHO2, chi_d0, sigma2


def test_disk_grid_examples():
    g = build_disk_grid(64, 256)
    assert abs(integrate(np.ones(g.size), g) - 1.0) < 1e-12
    assert abs(integrate(g.points, g)) < 1e-12
    assert abs(integrate(np.abs(g.points) ** 2, g) - 0.5) < 1e-10


def test_disk_grid_invariants():
    g = build_disk_grid(17, 12, (0.3, 0.8))
    assert np.all(g.weights > 0)
    assert abs(g.weights.sum() - 1) < 1e-12
    assert np.all(np.abs(g.points) < 1)
    # equispaced angles annihilate e^{ik theta} for 0 < |k| < n_theta
    for k in range(1, 12):
        assert abs(integrate(np.exp(1j * k * np.angle(g.points)), g)) < 1e-13


def test_disk_grid_rejects_few_angles():
    with pytest.raises(ValueError):
        build_disk_grid(8, 3)


def test_radial_grid_examples():
    g2 = build_radial_grid(64, 2)
    assert abs(np.dot(g2.weights, g2.nodes) - 1 / 3) < 1e-12
    g3 = build_radial_grid(64, 3)
    assert abs(g3.weights.sum() - 1 / 3) < 1e-12
    gs = build_radial_grid(64, 2, (RHO2,))
    assert abs(np.dot(gs.weights, np.sign(gs.nodes ** 2 - 0.5))) < 1e-8


def test_radial_grid_rejects():
    with pytest.raises(ValueError):
        build_radial_grid(16, 1)
    with pytest.raises(ValueError):
        build_radial_grid(1, 2)


@given(st.integers(2, 12), st.integers(2, 5), st.lists(st.floats(-3, 3), min_size=1, max_size=24))
def test_radial_grid_polynomial_exactness(n_pts, dim, coeffs):
    # exact for degree <= 2 n_pts - 1 against r^{dim-1} dr
    coeffs = coeffs[: 2 * n_pts]
    g = build_radial_grid(n_pts, dim)
    got = np.dot(g.weights, np.polynomial.polynomial.polyval(g.nodes, coeffs))
    exact = sum(c / (k + dim) for k, c in enumerate(coeffs))
    assert abs(got - exact) < 1e-12 * max(1.0, sum(abs(c) for c in coeffs))


def test_integrate_examples():
    # jumps at the half-area radius need a node boundary there
    g = build_disk_grid(64, 128, (RHO2,))
    assert integrate(np.zeros(g.size), g) == 0
    assert abs(integrate_func(sigma2, g)) < 1e-3
    assert abs(integrate_func(chi_d0, g) - 0.5) < 1e-3
    with pytest.raises(ValueError):
        integrate(np.ones(3), g)


def test_split_grid_is_exact_for_jumps(split_grid):
    assert abs(integrate_func(sigma2, split_grid)) < 1e-14
    assert abs(integrate_func(chi_d0, split_grid) - 0.5) < 1e-14
    # without the split the jump costs first-order accuracy
    errs = [abs(integrate_func(sigma2, build_disk_grid(n, 16))) for n in (16, 32, 64)]
    assert errs[-1] > 1e-4


@given(st.integers(2, 10), st.integers(2, 4), st.floats(0.2, 0.8))
def test_radial_split_exact_for_steps(n_pts, dim, edge):
    g = build_radial_grid(n_pts, dim, (edge,))
    got = np.dot(g.weights, np.where(g.nodes < edge, 1.0, -1.0))
    assert abs(got - (2 * edge ** dim - 1) / dim) < 1e-13


@given(st.integers(0, 127), st.sampled_from(["gauss", "poly", "expbar", "mixed"]))
def test_rotation_invariance(k, name):
    from meanapprox.catalog import SMOOTH
    f = SMOOTH[name]
    g = build_disk_grid(24, 128)
    phi = 2 * math.pi * k / 128
    assert g.rotation_shift(phi) == k
    a = integrate_func(f, g)
    b = integrate_func(lambda z: f(np.exp(1j * phi) * z), g)
    assert abs(a - b) < 1e-12


def test_refinement_error_estimate_bounds_change():
    from meanapprox.catalog import SMOOTH
    for name in ("gauss", "rational", "cosx", "sinxy", "logbump"):
        g = build_disk_grid(6, 16)
        fine, err = refinement_estimate(SMOOTH[name], g)
        finer = integrate_func(SMOOTH[name], build_disk_grid(48, 128))
        assert abs(finer - fine) <= err + 1e-15


def test_ball_spec_constants():
    for n in (2, 3, 4, 5):
        s = BallSpec(n)
        assert abs(s.rho ** n - 0.5) < 1e-15
        assert abs(s.sphere_area - n * s.volume) < 1e-14
    assert abs(BallSpec(3).volume - 4 * math.pi / 3) < 1e-14
    assert abs(BallSpec(2).volume - math.pi) < 1e-15


def test_ball_sampler_reproducible_and_uniform(spec3):
    a = build_ball_sampler(spec3, 8, 2000, seed=7)
    b = build_ball_sampler(spec3, 8, 2000, seed=7)
    f = np.sum(a.points ** 2, axis=1)
    assert a.integrate_with_error(f) == b.integrate_with_error(f)
    u = a.directions
    se = u.std(axis=0, ddof=1) / math.sqrt(len(u))
    assert np.all(np.abs(u.mean(axis=0)) < 3 * se)
    # volume of the unit ball is exact per direction
    vol, err = a.integrate_with_error(np.ones(a.size))
    assert abs(vol - spec3.volume) < 1e-12


def test_ball_sampler_mc_error_is_honest(spec3):
    s = build_ball_sampler(spec3, 8, 4000, seed=1)
    x = s.points
    est, err = s.integrate_with_error(x[:, 0] ** 2)
    exact = 4 * math.pi / 15
    assert abs(est - exact) < 4 * err


def test_field_validation():
    with pytest.raises(ValueError):
        Field(np.array([1.0, np.nan]))
    g = build_disk_grid(4, 8)
    f = Field.sample(lambda z: z, g, "z")
    assert len(f) == g.size
    assert np.allclose(f.resample(build_disk_grid(2, 4)).values, build_disk_grid(2, 4).points)
    with pytest.raises(ValueError):
        Field(np.ones(3)).resample(g)


def test_free_point_grid():
    pts = 0.5 * np.exp(1j * np.arange(5))
    g = free_point_grid(pts)
    assert abs(g.weights.sum() - 1) < 1e-15 and not g.is_product
    with pytest.raises(ValueError):
        g.refined()
    with pytest.raises(ValueError):
        free_point_grid([2.0])


def test_split_gauss_pieces():
    x, w = split_gauss(5, (0.5,))
    assert x.size == 10 and abs(w.sum() - 1) < 1e-15
    assert np.all(x[:5] < 0.5) and np.all(x[5:] > 0.5)
