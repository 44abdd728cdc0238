import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meanapprox.basis import BasisSpec, project_l2
from meanapprox.certificates import construct_dual
from meanapprox.grid import Field, build_disk_grid
from meanapprox.solver import (SolverOptions, boundary_norm_sweep, f_star_values, flatness_probe,
                               loglog_slope, modulus_Dt, objective_at, residual_reweight, solve_best)
from conftest import RHO2, chi_d0


def _solve(func, grid, spec, p):
    om = Field.sample(func, grid)
    return om, solve_best(om, spec, SolverOptions(p=p), grid)


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(p=0.5)
    with pytest.raises(ValueError):
        SolverOptions(eps0=1e-8, eps_min=1e-7)
    with pytest.raises(ValueError):
        SolverOptions(gamma=1.0)
    s = SolverOptions().schedule()
    assert s[0] == 0.1 and s[-1] == 1e-7 and all(a > b for a, b in zip(s, s[1:]))
    assert SolverOptions(p=1).q == math.inf and SolverOptions(p=3).q == 1.5


def test_abs2_p1(grid128):
    om, sol = _solve(lambda z: z * np.conj(z), grid128, BasisSpec("analytic", 3), 1.0)
    assert sol.converged
    assert abs(sol.coeffs[0] - 0.5) < 1e-2 and np.all(np.abs(sol.coeffs[1:]) < 1e-2)
    assert abs(sol.lam - 0.25) < 1e-2
    # lam is the discrete norm of the stored residual
    assert abs(sol.lam - float(np.dot(grid128.weights, np.abs(sol.residual.values)))) < 1e-12


def test_m_greater_than_n_gives_zero(grid64):
    om, sol = _solve(np.conj, grid64, BasisSpec("analytic", 4), 1.0)
    assert np.all(np.abs(sol.coeffs) < 1e-3)


def test_p2_matches_projection(grid64):
    om, sol = _solve(lambda z: z * z * np.conj(z), grid64, BasisSpec("analytic", 3), 2.0)
    assert abs(sol.coeffs[1] - 2 / 3) < 1e-6
    assert np.allclose(sol.coeffs, project_l2(om, BasisSpec("analytic", 3), grid64), atol=1e-8)


def test_stage_objectives_non_increasing(grid64):
    om, sol = _solve(lambda z: z * z * np.conj(z) + 0.2 * np.conj(z), grid64, BasisSpec("analytic", 3), 1.0)
    obj = np.array(sol.stage_objectives)
    assert np.all(np.diff(obj) <= 1e-12)


@pytest.mark.parametrize("p", [1.0, 1.5, 3.0])
def test_optimality_certificate(grid64, p):
    om, sol = _solve(lambda z: z * z * np.conj(z) + 0.3 * np.conj(z) ** 2, grid64, BasisSpec("analytic", 4), p)
    assert sol.converged
    cert = construct_dual(om, f_star_values(sol, grid64), p, sol.lam, grid64, K=4)
    assert cert.max_residual < 1e-9


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_scaling(grid64, p):
    om, sol = _solve(lambda z: np.exp(np.conj(z)) * z, grid64, BasisSpec("analytic", 3), p)
    sol3 = solve_best(Field(2.5 * om.values), BasisSpec("analytic", 3), SolverOptions(p=p), grid64)
    assert np.allclose(sol3.coeffs, 2.5 * sol.coeffs, atol=1e-6)
    assert abs(sol3.lam - 2.5 * sol.lam) < 1e-9


def test_residual_reweight_examples(grid128):
    z = grid128.points
    om = Field(np.abs(z) ** 2)
    fs = Field(np.full(z.size, 0.5))
    assert np.allclose(residual_reweight(om, fs, np.ones(z.size)).values, om.values)
    n = residual_reweight(om, fs, np.full(z.size, 0.5))
    assert np.allclose(n.values, 0.5 * np.abs(z) ** 2 + 0.25)
    sol = solve_best(n, BasisSpec("constants"), SolverOptions(p=1), grid128)
    assert abs(sol.coeffs[0] - 0.5) < 1e-2
    rho = 0.1 + 0.9 * (1 - np.abs(z) ** 2)
    n = residual_reweight(om, fs, rho)
    assert np.all(np.sign((n.values - 0.5).real) == np.sign((om.values - 0.5).real))
    sol = solve_best(n, BasisSpec("analytic", 2), SolverOptions(p=1), grid128)
    assert abs(sol.coeffs[0] - 0.5) < 1e-2 and np.all(np.abs(sol.coeffs[1:]) < 1e-2)


def test_residual_reweight_rejects():
    with pytest.raises(ValueError):
        residual_reweight(np.ones(3), np.zeros(3), np.array([1.0, 0.0, 2.0]))
    with pytest.raises(ValueError):
        residual_reweight(np.ones(2), np.zeros(2), np.array([1.0, 1j]))


@given(st.lists(st.floats(0.01, 10), min_size=64, max_size=64))
def test_reweight_keeps_sign(rho):
    rng = np.random.default_rng(0)
    om = rng.standard_normal(64) + 1j * rng.standard_normal(64)
    fs = rng.standard_normal(64) + 0j
    n = residual_reweight(om, fs, np.array(rho))
    d0, d1 = om - fs, n.values - fs
    assert np.allclose(d1 / np.abs(d1), d0 / np.abs(d0))


def test_flatness_example_32(split_grid):
    om = Field.sample(chi_d0, split_grid)
    spec = BasisSpec("constants")
    for c in (0.0, 0.25, 0.5, 1.0):
        assert abs(objective_at(om, [c], spec, split_grid, 1.0) - 0.5) < 1e-3
    sol = solve_best(om, spec, SolverOptions(p=1), split_grid)
    assert sol.flat


def test_not_flat_for_abs2(grid128):
    om, sol = _solve(lambda z: np.abs(z) ** 2 + 0j, grid128, BasisSpec("constants"), 1.0)
    assert not sol.flat
    rep = flatness_probe(om, sol, BasisSpec("constants"), grid128, n_dirs=4, delta=0.05)
    assert rep.min_deviation > 0.05 ** 2 / 4
    zero = flatness_probe(om, sol, BasisSpec("constants"), grid128, n_dirs=2, delta=0.0)
    assert zero.max_deviation == 0


def test_modulus_examples(grid64):
    spec = BasisSpec("analytic", 2)
    assert modulus_Dt([3, 0, 0], spec, 0.3, 1.5, grid64) < 1e-14
    znorm = float(np.dot(grid64.weights, np.abs(grid64.points) ** 1.5) ** (1 / 1.5))
    for t in (0.01, 0.4, math.pi):
        assert abs(modulus_Dt([0, 1, 0], spec, t, 1.5, grid64) - 2 * (1 - math.cos(t)) * znorm) < 1e-12


def test_modulus_slope_for_smooth_function(grid64):
    om, sol = _solve(lambda z: z * np.exp(np.conj(z)), grid64, BasisSpec("analytic", 8), 2.0)
    ts = np.geomspace(1e-2, 1e-1, 7)
    slope = loglog_slope(ts, [modulus_Dt(sol.coeffs, sol.spec, t, 2.0, grid64) for t in ts])
    assert slope >= 0.9


def test_boundary_norm_sweep_examples():
    g = build_disk_grid(48, 96)
    zbar = Field.sample(np.conj, g)
    assert max(boundary_norm_sweep(zbar, 1.0, range(1, 7), g)) < 1e-3
    f = Field.sample(lambda z: z * z * np.conj(z), g)
    assert np.allclose(boundary_norm_sweep(f, 2.0, range(1, 7), g), 2 / 3, atol=1e-6)
    f = Field.sample(lambda z: z.real + np.abs(z) ** 2, g)
    norms = boundary_norm_sweep(f, 2.0, range(2, 11), g)
    assert max(norms) / min(norms) < 1.5


def test_nonconvergence_is_flagged(grid64):
    om = Field.sample(lambda z: z * np.conj(z), grid64)
    sol = solve_best(om, BasisSpec("analytic", 2), SolverOptions(p=1, max_inner=1, grad_tol=1e-14), grid64)
    assert not sol.converged


def test_misaligned_field_rejected(grid64):
    with pytest.raises(ValueError):
        solve_best(np.ones(3), BasisSpec("constants"), SolverOptions(), grid64)
