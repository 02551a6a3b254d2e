import numpy as np
import pytest
from sympy import Rational
from sympy.physics.quantum.cg import CG

from utils.errors import PreconditionError
from utils.linalg import max_abs
from utils.spin_algebra import (SpinParams, algebra_residuals, basis_state, clebsch_embed,
                                coefficient_recursion_residual, ia_operator, level_index, m_values,
                                product_operators, rotated_coeffs, rotation_y, spin_matrices)

SPINS = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0]


def _half(x: float) -> Rational:
    return Rational(int(round(2 * x)), 2)


def test_spin_half_is_pauli_over_two():
    ops = spin_matrices(0.5)
    assert max_abs(ops.Ix - 0.5 * np.array([[0, 1], [1, 0]])) <= 1e-15
    assert max_abs(ops.Iy - 0.5 * np.array([[0, -1j], [1j, 0]])) <= 1e-15
    assert max_abs(ops.Iz - 0.5 * np.diag([1, -1])) <= 1e-15


def test_spin_one_matrices():
    ops = spin_matrices(1)
    assert np.allclose(np.diag(ops.Iz).real, [1, 0, -1])
    expected = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / np.sqrt(2)
    assert max_abs(ops.Ix - expected) <= 1e-15


@pytest.mark.parametrize("spin", SPINS)
def test_commutators_and_casimir(spin):
    assert max(algebra_residuals(spin)) <= 1e-12


def test_matrices_are_read_only():
    with pytest.raises(ValueError):
        spin_matrices(1).Iz[0, 0] = 5


@pytest.mark.parametrize("bad", [0, 0.3, -1, 1.25])
def test_invalid_spin_rejected(bad):
    with pytest.raises(PreconditionError):
        spin_matrices(bad)


def test_m_values_descend():
    assert list(m_values(1.5)) == [1.5, 0.5, -0.5, -1.5]


def test_ia_operator():
    ia = ia_operator(2)
    assert list(np.diag(ia).real) == [1, 1, 0, -1, -1]
    iz = spin_matrices(2).Iz
    assert max_abs(ia @ iz - iz @ ia) == 0.0
    assert max_abs(ia @ ia - (np.eye(5) - np.outer(basis_state(2, 0), basis_state(2, 0)))) == 0.0
    with pytest.raises(PreconditionError):
        ia_operator(1.5)


def test_rotation_by_zero_is_identity():
    assert max_abs(rotation_y(2, 0.0) - np.eye(5)) <= 1e-14


def test_spin_half_quarter_turn():
    column = rotation_y(0.5, np.pi / 2)[:, 0]
    assert np.allclose(column, [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-14)


def test_rotated_state_points_along_x():
    psi = rotation_y(3, np.pi / 2)[:, 0]
    ops = spin_matrices(3)
    assert np.vdot(psi, ops.Ix @ psi).real == pytest.approx(3.0, abs=1e-10)
    assert abs(np.vdot(psi, ops.Iz @ psi)) <= 1e-10


def test_rotated_coeffs_spin_one():
    c = rotated_coeffs(1)
    assert np.allclose(np.abs(c), [0.5, 1 / np.sqrt(2), 0.5], atol=1e-12)


@pytest.mark.parametrize("spin", SPINS)
def test_rotated_coeffs_recursion_and_symmetry(spin):
    c = rotated_coeffs(spin)
    assert np.sum(c ** 2) == pytest.approx(1.0, abs=1e-12)
    assert coefficient_recursion_residual(spin, c) <= 1e-10
    assert np.allclose(np.abs(c), np.abs(c[::-1]), atol=1e-12)


def test_basis_state_and_level_index():
    assert level_index(3, 3) == 0
    assert level_index(3, -3) == 6
    assert level_index(2.5, 0.5) == 2
    with pytest.raises(PreconditionError):
        basis_state(1, 0.5)


def test_embedding_trivial_for_zero():
    assert max_abs(clebsch_embed(0).embedding - np.eye(2)) == 0.0


def test_embedding_spin_one_entries():
    e = clebsch_embed(1).embedding
    assert e[0, 0] == pytest.approx(1.0)
    assert e[1, 1] == pytest.approx(np.sqrt(2 / 3))
    assert e[3, 1] == pytest.approx(np.sqrt(1 / 3))


@pytest.mark.parametrize("i_int", [1, 2, 3])
def test_embedding_matches_clebsch_gordan_table(i_int):
    cmap = clebsch_embed(i_int)
    m_i = np.arange(i_int, -i_int - 1, -1)
    n_i = len(m_i)
    half = Rational(1, 2)
    for col, mj in enumerate(cmap.m_j):
        for block, ms in enumerate((half, -half)):
            for row, mi in enumerate(m_i):
                expected = float(CG(half, ms, i_int, int(mi), _half(cmap.J), _half(mj)).doit())
                assert cmap.embedding[block * n_i + row, col].real == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("i_int", [0, 1, 2, 3])
def test_embedding_isometry_and_quantum_numbers(i_int):
    cmap = clebsch_embed(i_int)
    e = cmap.embedding
    ops = product_operators(i_int)
    assert max_abs(e.conj().T @ e - np.eye(e.shape[1])) <= 1e-12
    assert max_abs(ops.Jz @ e - e @ np.diag(cmap.m_j)) <= 1e-12
    assert max_abs(ops.j_squared() @ e - cmap.J * (cmap.J + 1) * e) <= 1e-12


def test_spin_params_validation():
    with pytest.raises(PreconditionError):
        SpinParams(spin=1, Q=0.0)
    with pytest.raises(PreconditionError):
        SpinParams(spin=1, omega=0.0)
    with pytest.raises(PreconditionError):
        SpinParams(spin=1, B1=-0.1)
    p = SpinParams(spin=3, B0=0.05, B1=0.5)
    assert p.dim == 7 and p.is_integer and p.quadrupole_dominant
    assert p.with_updates(omega=1.5).omega == 1.5
    assert not SpinParams(spin=2.5).is_integer
