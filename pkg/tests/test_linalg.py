import numpy as np
import pytest
from scipy.linalg import expm

from tests.conftest import random_hermitian
from utils.errors import NumericalError, PreconditionError
from utils.linalg import (direct_sum, expm_unitary, get_tolerances, hermitian_eig, max_abs, polar_unitary,
                          set_tolerances, unitarity_residual)


def test_diagonal_matrix_eigenvalues_sorted():
    d = hermitian_eig(np.diag([3.0, 1.0, 2.0]))
    assert np.allclose(d.eigenvalues, [1.0, 2.0, 3.0], atol=1e-14)


def test_pauli_x_eigenvalues():
    d = hermitian_eig([[0, 1], [1, 0]])
    assert np.allclose(d.eigenvalues, [-1.0, 1.0], atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 5, 7, 8])
def test_random_hermitian_reconstruction(rng, n):
    h = random_hermitian(rng, n)
    d = hermitian_eig(h)
    v = d.eigenvectors
    assert max_abs(d.reconstruct() - h) <= 1e-10 * max(1.0, max_abs(h))
    assert max_abs(v.conj().T @ v - np.eye(n)) <= 1e-11
    assert abs(np.sum(d.eigenvalues) - np.trace(h).real) <= 1e-10
    assert np.allclose(d.eigenvalues, np.linalg.eigvalsh(h), atol=1e-10)


def test_non_hermitian_rejected():
    with pytest.raises(PreconditionError):
        hermitian_eig([[0, 1], [0, 0]])


def test_non_square_rejected():
    with pytest.raises(PreconditionError):
        hermitian_eig(np.zeros((2, 3)))


def test_sweep_cap_raises_numerical_error():
    set_tolerances(jacobi_max_sweeps=0)
    with pytest.raises(NumericalError):
        hermitian_eig([[0, 1], [1, 0]])


def test_unknown_tolerance_rejected():
    with pytest.raises(PreconditionError):
        set_tolerances(nonsense=1.0)


def test_set_tolerances_updates_global():
    set_tolerances(leakage=1e-3)
    assert get_tolerances().leakage == 1e-3


def test_expm_of_zero_is_identity():
    assert max_abs(expm_unitary(np.zeros((4, 4)), 2.5) - np.eye(4)) == 0.0


def test_expm_pauli_z():
    u = expm_unitary(np.diag([1.0, -1.0]), np.pi / 2)
    assert max_abs(u - np.diag([-1j, 1j])) <= 1e-14


def test_expm_matches_taylor_and_scipy(rng):
    h = random_hermitian(rng, 5)
    h = h / np.linalg.norm(h, 2)
    t = 0.7
    a = -1j * h * t
    taylor = np.eye(5, dtype=complex)
    term = np.eye(5, dtype=complex)
    for k in range(1, 40):
        term = term @ a / k
        taylor = taylor + term
    u = expm_unitary(h, t)
    assert max_abs(u - taylor) <= 1e-9
    assert max_abs(u - expm(a)) <= 1e-10


def test_group_property(rng):
    h = random_hermitian(rng, 6)
    s, t = 0.4, 1.9
    assert max_abs(expm_unitary(h, s) @ expm_unitary(h, t) - expm_unitary(h, s + t)) <= 1e-9
    assert unitarity_residual(expm_unitary(h, 13.0)) <= 1e-12


def test_direct_sum_layout():
    out = direct_sum([np.eye(2), [[5.0]], np.eye(3)])
    assert out.shape == (6, 6)
    assert out[2, 2] == 5.0
    assert out[0, 3] == 0.0
    assert max_abs(direct_sum([[[7.0]]]) - np.array([[7.0]])) == 0.0


def test_direct_sum_of_nothing_rejected():
    with pytest.raises(PreconditionError):
        direct_sum([])


def test_unitarity_residual_of_scaled_identity():
    assert unitarity_residual(2.0 * np.eye(3)) == pytest.approx(3.0)


def test_polar_unitary_restores_unitarity(rng):
    u = expm_unitary(random_hermitian(rng, 4), 1.0)
    noisy = u + 1e-4 * rng.normal(size=(4, 4))
    fixed = polar_unitary(noisy)
    assert unitarity_residual(fixed) <= 1e-12
    assert max_abs(fixed - u) <= 1e-3
