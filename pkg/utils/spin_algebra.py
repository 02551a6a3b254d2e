"""Spin operators, the sign-of-M operator I_a, y-rotations, the rotated
initial-state coefficients and the (I_int x 1/2) -> J = I_int + 1/2 embedding.

Basis convention everywhere: |I,M> with M descending (I, I-1, ..., -I).
Product spaces are ordered |S=1/2,M_S> (x) |I,M_I>, M_S = +1/2 block first.
"""
import logging
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Any, Dict, List

import numpy as np
from numpy.typing import NDArray

from utils.errors import PreconditionError
from utils.linalg import ComplexMatrix, expm_unitary, max_abs

logger = logging.getLogger(__name__)


def two_spin(spin: float) -> int:
    """Return 2I as an int, rejecting anything that is not a positive half-integer."""
    doubled = 2.0 * float(spin)
    rounded = int(round(doubled))
    if rounded < 1 or abs(doubled - rounded) > 1e-9:
        raise PreconditionError(f"Spin must be a positive half-integer, got {spin}")
    return rounded


def is_integer_spin(spin: float) -> bool:
    return two_spin(spin) % 2 == 0


def m_values(spin: float) -> NDArray[np.float64]:
    """M = I, I-1, ..., -I."""
    n = two_spin(spin)
    return n / 2.0 - np.arange(n + 1, dtype=np.float64)


@dataclass(frozen=True)
class SpinParams:
    """Physical parameters in units of the quadrupole coupling (hbar = gamma = 1)."""
    spin: float
    Q: float = 1.0
    B0: float = 0.0
    B1: float = 0.0
    omega: float = 1.0

    def __post_init__(self):
        two_spin(self.spin)
        if not self.Q > 0:
            raise PreconditionError(f"Q must be positive, got {self.Q}")
        if self.B1 < 0:
            raise PreconditionError(f"B1 must be non-negative, got {self.B1}")
        if self.B0 < 0:
            raise PreconditionError(f"B0 must be non-negative, got {self.B0}")
        if not self.omega > 0:
            raise PreconditionError(f"omega must be positive, got {self.omega}")

    @property
    def dim(self) -> int:
        return two_spin(self.spin) + 1

    @property
    def is_integer(self) -> bool:
        return is_integer_spin(self.spin)

    @property
    def quadrupole_dominant(self) -> bool:
        return self.B0 < self.Q

    def with_updates(self, **changes) -> "SpinParams":
        values = asdict(self)
        values.update(changes)
        return SpinParams(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SpinOperators:
    dim: int
    Ix: ComplexMatrix
    Iy: ComplexMatrix
    Iz: ComplexMatrix
    Iplus: ComplexMatrix
    Iminus: ComplexMatrix


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@lru_cache(maxsize=None)
def _spin_matrices_cached(doubled: int) -> SpinOperators:
    spin = doubled / 2.0
    m = m_values(spin)
    dim = doubled + 1
    # <M+1|I+|M> sits on the superdiagonal because M descends with the index
    raising = np.zeros((dim, dim), dtype=np.complex128)
    for k in range(1, dim):
        mk = m[k]
        raising[k - 1, k] = np.sqrt(spin * (spin + 1) - mk * (mk + 1))
    lowering = raising.T.copy()
    ix = 0.5 * (raising + lowering)
    iy = (raising - lowering) / 2j
    iz = np.diag(m).astype(np.complex128)
    return SpinOperators(
        dim=dim,
        Ix=_frozen(ix),
        Iy=_frozen(iy),
        Iz=_frozen(iz),
        Iplus=_frozen(raising),
        Iminus=_frozen(lowering),
    )


def spin_matrices(spin: float) -> SpinOperators:
    """Ix, Iy, Iz (and ladder operators) for spin I; cached and read-only."""
    return _spin_matrices_cached(two_spin(spin))


def ia_operator(spin: float) -> ComplexMatrix:
    """Sign-of-M operator: +1 on M >= 1, 0 on M = 0, -1 on M <= -1 (integer spin only)."""
    if not is_integer_spin(spin):
        raise PreconditionError(f"I_a is defined for integer spin only, got {spin}")
    return np.diag(np.sign(m_values(spin))).astype(np.complex128)


def rotation_y(spin: float, angle: float) -> ComplexMatrix:
    """exp(-i angle Iy)."""
    return expm_unitary(spin_matrices(spin).Iy, angle)


def rotated_coeffs(spin: float) -> NDArray[np.float64]:
    """Coefficients c_M of exp(-i pi/2 Iy)|I,I> in the descending |I,M> basis."""
    column = rotation_y(spin, np.pi / 2.0)[:, 0]
    if np.max(np.abs(column.imag)) > 1e-12:
        raise PreconditionError("Rotated coefficients acquired an imaginary part")
    return column.real.copy()


def coefficient_recursion_residual(spin: float, coeffs: NDArray[np.float64]) -> float:
    """Largest violation of the three-term recursion linking c_{M-1}, c_M, c_{M+1}.

    Checked for M = I, ..., -I+1 with c_{I+1} = 0.
    """
    m = m_values(spin)
    padded = np.concatenate(([0.0], np.asarray(coeffs, dtype=np.float64)))
    worst = 0.0
    for k in range(len(m) - 1):
        mk = m[k]
        denom = np.sqrt((spin - mk + 1) * (spin + mk))
        predicted = (padded[k + 1] * 2 * spin - padded[k] * np.sqrt((spin + mk + 1) * (spin - mk))) / denom
        worst = max(worst, abs(predicted - padded[k + 2]))
    return worst


def basis_state(spin: float, m: float) -> NDArray[np.complex128]:
    """|I,m> as a column vector."""
    ms = m_values(spin)
    hits = np.nonzero(np.abs(ms - m) < 1e-9)[0]
    if hits.size == 0:
        raise PreconditionError(f"M={m} is not a level of spin {spin}")
    state = np.zeros(len(ms), dtype=np.complex128)
    state[hits[0]] = 1.0
    return state


def level_index(spin: float, m: float) -> int:
    return int(np.argmax(np.abs(basis_state(spin, m))))


@dataclass(frozen=True)
class CompositionMap:
    I_int: int
    J: float
    embedding: ComplexMatrix

    @property
    def m_j(self) -> NDArray[np.float64]:
        return m_values(self.J)


def clebsch_embed(i_int: int) -> CompositionMap:
    """Embed |J = I_int + 1/2, M_J> into |1/2, M_S> (x) |I_int, M_I>."""
    if int(i_int) != i_int or i_int < 0:
        raise PreconditionError(f"clebsch_embed needs a non-negative integer, got {i_int}")
    i_int = int(i_int)
    j = i_int + 0.5
    n_i = 2 * i_int + 1
    m_i = np.arange(i_int, -i_int - 1, -1, dtype=np.float64)
    m_j = m_values(j)
    embedding = np.zeros((2 * n_i, len(m_j)), dtype=np.complex128)
    for col, mj in enumerate(m_j):
        up = mj - 0.5
        down = mj + 0.5
        if abs(up) <= i_int:
            embedding[int(np.argmin(np.abs(m_i - up))), col] = np.sqrt((j + mj) / (2 * j))
        if abs(down) <= i_int:
            embedding[n_i + int(np.argmin(np.abs(m_i - down))), col] = np.sqrt((j - mj) / (2 * j))
    return CompositionMap(I_int=i_int, J=j, embedding=embedding)


@dataclass(frozen=True)
class ProductOperators:
    """Spin-1/2 (x) spin-I_int operators in the product basis."""
    Ix: ComplexMatrix
    Iy: ComplexMatrix
    Iz: ComplexMatrix
    Ia: ComplexMatrix
    Sx: ComplexMatrix
    Sy: ComplexMatrix
    Sz: ComplexMatrix

    @property
    def Jx(self) -> ComplexMatrix:
        return self.Ix + self.Sx

    @property
    def Jy(self) -> ComplexMatrix:
        return self.Iy + self.Sy

    @property
    def Jz(self) -> ComplexMatrix:
        return self.Iz + self.Sz

    def j_squared(self) -> ComplexMatrix:
        return self.Jx @ self.Jx + self.Jy @ self.Jy + self.Jz @ self.Jz


def product_operators(i_int: int) -> ProductOperators:
    if i_int == 0:
        one_i = np.eye(1, dtype=np.complex128)
        zero = np.zeros((1, 1), dtype=np.complex128)
        ix = iy = iz = ia = zero
    else:
        ops = spin_matrices(i_int)
        one_i = np.eye(ops.dim, dtype=np.complex128)
        ix, iy, iz, ia = ops.Ix, ops.Iy, ops.Iz, ia_operator(i_int)
    half = spin_matrices(0.5)
    one_s = np.eye(2, dtype=np.complex128)
    return ProductOperators(
        Ix=np.kron(one_s, ix),
        Iy=np.kron(one_s, iy),
        Iz=np.kron(one_s, iz),
        Ia=np.kron(one_s, ia),
        Sx=np.kron(half.Ix, one_i),
        Sy=np.kron(half.Iy, one_i),
        Sz=np.kron(half.Iz, one_i),
    )


def algebra_residuals(spin: float) -> List[float]:
    """Commutator and Casimir residuals; all should sit at round-off."""
    ops = spin_matrices(spin)
    one = np.eye(ops.dim)
    return [
        max_abs(ops.Ix @ ops.Iy - ops.Iy @ ops.Ix - 1j * ops.Iz),
        max_abs(ops.Iy @ ops.Iz - ops.Iz @ ops.Iy - 1j * ops.Ix),
        max_abs(ops.Iz @ ops.Ix - ops.Ix @ ops.Iz - 1j * ops.Iy),
        max_abs(ops.Ix @ ops.Ix + ops.Iy @ ops.Iy + ops.Iz @ ops.Iz - spin * (spin + 1) * one),
    ]
