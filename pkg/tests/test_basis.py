import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from meanapprox.basis import BasisSpec, boundary_norm, design_matrix, eval_combo, gram, project_l2
from meanapprox.grid import Field, build_disk_grid, free_point_grid


def test_dimensions_and_parse():
    assert BasisSpec("analytic", 4).dim == 5
    assert BasisSpec("harmonic2d", 3).dim == 7
    assert BasisSpec("constants").dim == 1
    assert BasisSpec.parse("harmonic2d:3") == BasisSpec("harmonic2d", 3)
    assert str(BasisSpec.parse("constants")) == "constants"
    with pytest.raises(ValueError):
        BasisSpec("spline", 2)
    with pytest.raises(ValueError):
        BasisSpec("analytic", -1)


def test_eval_combo_examples():
    pts = np.array([0.3, 0.1j, -0.5 + 0.2j])
    assert np.allclose(eval_combo([1, 0, 0], BasisSpec("analytic", 2), pts).values, 1)
    assert eval_combo([0, 1], BasisSpec("analytic", 1), [1j]).values[0] == 1j
    spec = BasisSpec("harmonic2d", 2)
    c = np.zeros(spec.dim, complex)
    c[spec.index(0, 2)] = 1
    v = eval_combo(c, spec, [np.exp(1j * math.pi / 4)]).values[0]
    assert abs(v - (-1j)) < 1e-15
    with pytest.raises(ValueError):
        eval_combo([1, 2], BasisSpec("analytic", 3), pts)


def test_project_l2_examples(grid64):
    z = grid64.points
    c = project_l2(z ** 3, BasisSpec("analytic", 5), grid64)
    assert np.allclose(c, [0, 0, 0, 1, 0, 0], atol=1e-10)
    c = project_l2(z * z * np.conj(z), BasisSpec("analytic", 3), grid64)
    assert abs(c[1] - 2 / 3) < 1e-8 and np.allclose(np.delete(c, 1), 0, atol=1e-8)
    c = project_l2(np.abs(z) ** 2, BasisSpec("harmonic2d", 2), grid64)
    assert abs(c[0] - 0.5) < 1e-8 and np.allclose(c[1:], 0, atol=1e-8)


def test_project_l2_singular_gram():
    g = build_disk_grid(2, 4)
    with pytest.raises(np.linalg.LinAlgError):
        project_l2(np.ones(g.size), BasisSpec("analytic", 10), g)


def test_project_l2_free_points_dense():
    rng = np.random.default_rng(0)
    pts = np.sqrt(rng.random(4000)) * np.exp(2j * math.pi * rng.random(4000))
    g = free_point_grid(pts)
    c = project_l2(1 + 2 * pts - pts ** 2, BasisSpec("analytic", 3), g)
    assert np.allclose(c, [1, 2, -1, 0], atol=1e-10)


@given(st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                min_size=7, max_size=7))
def test_projection_idempotent(coeffs):
    g = build_disk_grid(16, 32)
    spec = BasisSpec("harmonic2d", 3)
    omega = eval_combo(coeffs, spec, g.points).values + np.abs(g.points) ** 3
    c1 = project_l2(omega, spec, g)
    c2 = project_l2(eval_combo(c1, spec, g.points), spec, g)
    assert np.allclose(c1, c2, atol=1e-10)


def test_monomial_orthogonality(grid64):
    G = gram(BasisSpec("analytic", 6), grid64)
    assert np.allclose(G, np.diag(1 / np.arange(1, 8)), atol=1e-13)


@given(st.lists(st.floats(-2, 2), min_size=9, max_size=9),
       st.complex_numbers(max_magnitude=0.5, allow_nan=False, allow_infinity=False))
def test_harmonic_mean_value(c, centre):
    spec = BasisSpec("harmonic2d", 4)
    coeffs = np.array(c) * (1 + 0.5j)
    for radius in (0.1, 0.05):
        ring = centre + radius * np.exp(2j * math.pi * np.arange(64) / 64)
        mean = eval_combo(coeffs, spec, ring).values.mean()
        assert abs(mean - eval_combo(coeffs, spec, [centre]).values[0]) < 1e-12


def test_boundary_norm_examples():
    assert abs(boundary_norm([1], BasisSpec("analytic", 0), 1.0) - 1) < 1e-15
    assert abs(boundary_norm([0, 1], BasisSpec("analytic", 1), 2.0) - 1) < 1e-15
    assert abs(boundary_norm([1, 1], BasisSpec("analytic", 1), 2.0) - math.sqrt(2)) < 1e-10
    with pytest.raises(ValueError):
        boundary_norm([1], BasisSpec("analytic", 0), 0.5)


def test_design_matrix_shape():
    phi = design_matrix(BasisSpec("harmonic2d", 2), np.array([0.5, 0.5j]))
    assert phi.shape == (2, 5)
    assert np.allclose(phi[:, 4], np.conj([0.5, 0.5j]) ** 2)
