import math

import numpy as np
import pytest
from hypothesis import given

from ldg2of.common.errors import (EXIT_NO_CONVERGENCE, AntipodalSingularity, DegenerateSpectrum, IndexOutOfRange,
                                  InvalidParams, NotUnit, OrthogonalReference)
from ldg2of.common.types import MaterialParams
from ldg2of.energy.functionals import bulk_quadratic_form
from ldg2of.tensor.qtensor import (FBASIS, basis_tensor, biaxiality_gap, bulk_gradient, bulk_potential,
                                   eigendecompose, from_matrix, norm2, principal_eigenvector, rotate, rotation_to,
                                   to_matrix, uniaxial_from_director, v_rho)

from strategies import material_params, q_tensors, rhos, rotations, unit_vectors

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def test_basis_is_orthonormal():
    gram = np.einsum("iab,jab->ij", FBASIS, FBASIS)
    assert np.allclose(gram, np.eye(5), atol=1e-15)


def test_basis_tensor_values():
    assert np.allclose(np.diag(basis_tensor(3)), np.array([-1.0, -1.0, 2.0]) / math.sqrt(6.0))
    assert np.allclose(basis_tensor(1), (np.outer(E1, E1) - np.outer(E2, E2)) / math.sqrt(2.0))
    for j in range(1, 6):
        f = basis_tensor(j)
        assert np.allclose(f, f.T)
        assert abs(np.trace(f)) < 1e-15


@pytest.mark.parametrize("j", [0, 6, -1])
def test_basis_tensor_rejects_bad_index(j):
    with pytest.raises(IndexOutOfRange):
        basis_tensor(j)


@given(q_tensors(scale=3.0))
def test_matrix_coordinates_agree(q):
    m = to_matrix(q)
    assert np.allclose(m, m.T)
    assert abs(np.trace(m)) < 1e-12
    assert np.allclose(from_matrix(m), q, atol=1e-12)
    assert np.sum(m * m) == pytest.approx(float(norm2(q)), rel=1e-12)


def test_s_plus():
    assert MaterialParams(a2=1.0, b2=1.0, c2=1.0).s_plus == pytest.approx(1.5)
    s = MaterialParams(a2=1.0, b2=0.0, c2=1.0).s_plus
    assert s == pytest.approx(math.sqrt(6.0) / 2.0)
    assert 2.0 / 3.0 * s * s == pytest.approx(1.0)
    assert MaterialParams(a2=0.0, b2=1.0, c2=1.0).s_plus == pytest.approx(0.5)


def test_second_variation_constants(unit_params):
    assert unit_params.mu == pytest.approx(1.5)
    assert unit_params.nu == pytest.approx(2.5)


@pytest.mark.parametrize("kwargs", [{"c2": 0.0}, {"eps": 0.0}, {"a2": -1.0}, {"b2": float("nan")}])
def test_invalid_params(kwargs):
    with pytest.raises(InvalidParams):
        MaterialParams(**kwargs)


@given(unit_vectors())
def test_bulk_potential_vanishes_on_limit_manifold(n):
    params = MaterialParams()
    q = uniaxial_from_director(n, params.s_plus)
    assert abs(float(bulk_potential(q, params))) < 1e-12
    assert np.max(np.abs(bulk_gradient(q, params))) < 1e-12


def test_bulk_potential_at_isotropic_state(unit_params):
    assert float(bulk_potential(np.zeros(5), unit_params)) == pytest.approx(0.4375, abs=1e-14)
    assert np.all(bulk_gradient(np.zeros(5), unit_params) == 0.0)


@given(q_tensors(), material_params())
def test_bulk_gradient_matches_finite_differences(q, params):
    step = 1e-6
    fd = np.zeros(5)
    for j in range(5):
        e = np.zeros(5)
        e[j] = step
        fd[j] = (bulk_potential(q + e, params) - bulk_potential(q - e, params)) / (2.0 * step)
    assert np.allclose(bulk_gradient(q, params), fd, rtol=1e-6, atol=1e-6)


@given(rhos(), rotations(), material_params())
def test_bulk_quadratic_form_is_exact(rho, r, params):
    eps = params.eps
    q = rotate(uniaxial_from_director(E3, params.s_plus) + eps ** 2 * v_rho(rho), r)
    expected = float(bulk_quadratic_form(rho, eps, params))
    assert float(bulk_potential(q, params)) == pytest.approx(expected, rel=1e-8, abs=1e-10)


def test_eigendecompose_uniaxial():
    s = 1.5
    es = eigendecompose(uniaxial_from_director(E3, s))
    assert np.allclose(es.values, [2.0 * s / 3.0, -s / 3.0, -s / 3.0], atol=1e-14)
    assert abs(abs(es.principal @ E3) - 1.0) < 1e-14


def test_eigendecompose_f1():
    es = eigendecompose(np.array([1.0, 0.0, 0.0, 0.0, 0.0]))
    assert np.allclose(es.values, [1.0 / math.sqrt(2.0), 0.0, -1.0 / math.sqrt(2.0)], atol=1e-14)


@given(q_tensors(scale=2.0))
def test_eigendecompose_reconstructs(q):
    es = eigendecompose(q)
    assert abs(float(np.sum(es.values))) < 1e-12
    assert np.all(np.diff(es.values) <= 1e-12)
    assert np.allclose(es.vectors.T @ es.vectors, np.eye(3), atol=1e-9)
    assert np.linalg.det(es.vectors) == pytest.approx(1.0, abs=1e-9)
    error = np.max(np.abs(es.reconstruct() - to_matrix(q)))
    assert error <= 1e-9 * max(1.0, float(np.sqrt(norm2(q))))


def test_eigendecompose_batches():
    q = np.stack([uniaxial_from_director(E1, 1.0), np.array([1.0, 0.0, 0.0, 0.0, 0.0])])
    es = eigendecompose(q.reshape(1, 2, 5))
    assert es.values.shape == (1, 2, 3)
    assert es.vectors.shape == (1, 2, 3, 3)


def test_principal_eigenvector_sign():
    n = np.array([0.6, 0.0, 0.8])
    q = uniaxial_from_director(n, 1.5)
    assert np.allclose(principal_eigenvector(q, n), n, atol=1e-12)
    assert np.allclose(principal_eigenvector(q, -n), -n, atol=1e-12)


def test_principal_eigenvector_stable_under_biaxial_perturbation():
    n, p, q_ = E3, E1, E2
    q = uniaxial_from_director(n, 1.5) + 1e-3 * from_matrix(np.outer(p, p) - np.outer(q_, q_))
    assert np.linalg.norm(principal_eigenvector(q, n) - n) < 1e-2


def test_principal_eigenvector_degenerate():
    # oblate tensor: the two largest eigenvalues coincide
    with pytest.raises(DegenerateSpectrum):
        principal_eigenvector(uniaxial_from_director(E3, -1.0), E3)


def test_biaxiality_gap():
    assert float(biaxiality_gap(uniaxial_from_director(np.array([0.0, 0.6, 0.8]), 1.5))) < 1e-13
    assert float(biaxiality_gap(np.array([1.0, 0.0, 0.0, 0.0, 0.0]))) == pytest.approx(1.0 / math.sqrt(2.0))
    delta = 1e-3
    q = uniaxial_from_director(E3, 1.5) + delta * from_matrix(np.outer(E1, E1) - np.outer(E2, E2))
    assert float(biaxiality_gap(q)) == pytest.approx(2.0 * delta, rel=1e-9)


def test_rotation_to():
    assert np.allclose(rotation_to(E3), np.eye(3))
    r = rotation_to(E1)
    assert np.allclose(r @ E3, E1)
    assert np.allclose(r @ E2, E2)
    assert np.allclose(r @ E1, -E3)
    with pytest.raises(AntipodalSingularity):
        rotation_to(-E3)


@given(unit_vectors(min_n3=-0.9))
def test_rotation_to_is_a_rotation(n):
    r = rotation_to(n)
    assert np.allclose(r.T @ r, np.eye(3), atol=1e-12)
    assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(r @ E3, n, atol=1e-12)


def test_uniaxial_from_director():
    s = 1.5
    assert np.allclose(uniaxial_from_director(E3, s), [0.0, 0.0, math.sqrt(2.0 / 3.0) * s, 0.0, 0.0])
    phi = 0.3
    q = uniaxial_from_director(np.array([math.cos(phi), math.sin(phi), 0.0]), s)
    expected = s / math.sqrt(2.0) * np.array([math.cos(2 * phi), math.sin(2 * phi), -1.0 / math.sqrt(3.0), 0, 0])
    assert np.allclose(q, expected)
    assert float(biaxiality_gap(q)) < 1e-13
    with pytest.raises(NotUnit):
        uniaxial_from_director(np.array([1.0, 1.0, 0.0]), s)


@pytest.mark.parametrize("error", [DegenerateSpectrum, OrthogonalReference, AntipodalSingularity])
def test_numerical_failures_exit_as_no_convergence(error):
    assert issubclass(error, RuntimeError)
    assert not issubclass(error, ValueError)
    assert error("failed").exit_code == EXIT_NO_CONVERGENCE
