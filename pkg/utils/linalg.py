"""Dense complex small-matrix kernel.

Every operator in the package is a plain ``numpy`` complex array in the
|I,M> basis with M descending. Exponentials of Hermitian generators go through
a Hermitian eigendecomposition, so propagators are unitary to machine
precision by construction.
"""
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, List, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import block_diag

from utils.errors import NumericalError, PreconditionError

logger = logging.getLogger(__name__)

ComplexMatrix = NDArray[np.complex128]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across modules; overridable from the run config."""
    hermitian: float = 1e-10
    jacobi_max_sweeps: int = 100
    jacobi_rel_threshold: float = 1e-13
    su3_degeneracy: float = 1e-3
    leakage: float = 1e-6
    chrw_crosscheck: float = 1e-6

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


TOLERANCES = Tolerances()


def set_tolerances(**overrides) -> Tolerances:
    """Replace the process-wide tolerances. Unknown keys raise PreconditionError."""
    global TOLERANCES
    known = {f.name for f in fields(Tolerances)}
    unknown = set(overrides) - known
    if unknown:
        raise PreconditionError(f"Unknown tolerance keys: {sorted(unknown)}")
    TOLERANCES = replace(TOLERANCES, **overrides)
    logger.debug(f"Tolerances set to {TOLERANCES}")
    return TOLERANCES


def get_tolerances() -> Tolerances:
    return TOLERANCES


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: NDArray[np.float64]
    eigenvectors: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(a) -> ComplexMatrix:
    """Coerce a scalar, nested list or array into a square complex matrix."""
    m = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PreconditionError(f"Expected a square matrix, got shape {m.shape}")
    return m


def hermitian_residual(a: ComplexMatrix) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def is_hermitian(a: ComplexMatrix, tol: float = None) -> bool:
    tol = TOLERANCES.hermitian if tol is None else tol
    scale = max(1.0, float(np.max(np.abs(a)))) if np.size(a) else 1.0
    return hermitian_residual(a) <= tol * scale


def _jacobi_rotation(a: ComplexMatrix, v: ComplexMatrix, p: int, q: int) -> None:
    # Phase the (p, q) element real, then apply the real symmetric rotation
    apq = a[p, q]
    r = abs(apq)
    phase = apq / r
    theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
    t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=np.complex128)
    idx = [p, q]
    a[:, idx] = a[:, idx] @ g
    a[idx, :] = g.conj().T @ a[idx, :]
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    v[:, idx] = v[:, idx] @ g


def hermitian_eig(a: ComplexMatrix) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.

    Eigenvalues are returned ascending with orthonormal eigenvector columns.
    Degenerate eigenspaces come back in an arbitrary orthonormal basis; callers
    only ever use V f(L) V^dagger.
    """
    a = as_matrix(a)
    if not is_hermitian(a):
        raise PreconditionError(
            f"hermitian_eig needs a Hermitian matrix (residual {hermitian_residual(a):.3e})"
        )
    n = a.shape[0]
    work = 0.5 * (a + a.conj().T)
    vecs = np.eye(n, dtype=np.complex128)
    norm = float(np.linalg.norm(work))
    threshold = TOLERANCES.jacobi_rel_threshold * norm

    def off_norm() -> float:
        return float(np.sqrt(max(0.0, np.sum(np.abs(work) ** 2) - np.sum(np.abs(np.diag(work)) ** 2))))

    off = off_norm()
    sweeps = 0
    while off > threshold:
        if sweeps >= TOLERANCES.jacobi_max_sweeps:
            raise NumericalError(
                f"Jacobi eigensolver did not converge after {sweeps} sweeps", residual=off
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(work[p, q]) > 0.0:
                    _jacobi_rotation(work, vecs, p, q)
        sweeps += 1
        off = off_norm()

    eigenvalues = np.real(np.diag(work)).copy()
    order = np.argsort(eigenvalues, kind="stable")
    return EigenDecomposition(eigenvalues=eigenvalues[order], eigenvectors=vecs[:, order])


def expm_from_eig(decomp: EigenDecomposition, t: float) -> ComplexMatrix:
    """U = V diag(exp(-i lambda t)) V^dagger for a precomputed decomposition."""
    v = decomp.eigenvectors
    return (v * np.exp(-1j * decomp.eigenvalues * t)) @ v.conj().T


def expm_unitary(h: ComplexMatrix, t: float) -> ComplexMatrix:
    """exp(-i H t) for Hermitian H."""
    return expm_from_eig(hermitian_eig(h), t)


def direct_sum(blocks: Sequence) -> ComplexMatrix:
    """Block-diagonal matrix of the blocks in the caller's order."""
    if not blocks:
        raise PreconditionError("direct_sum needs at least one block")
    return np.asarray(block_diag(*[as_matrix(b) for b in blocks]), dtype=np.complex128)


def unitarity_residual(u: ComplexMatrix) -> float:
    u = as_matrix(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def polar_unitary(u: ComplexMatrix) -> ComplexMatrix:
    """Nearest unitary U (U^dagger U)^(-1/2), via the eigendecomposition of U^dagger U."""
    u = as_matrix(u)
    gram = hermitian_eig(u.conj().T @ u)
    if gram.eigenvalues[0] <= 0.0:
        raise NumericalError("Polar projection of a singular matrix", residual=float(gram.eigenvalues[0]))
    v = gram.eigenvectors
    inv_sqrt = (v / np.sqrt(gram.eigenvalues)) @ v.conj().T
    return u @ inv_sqrt


BASIS_LABEL = "|I,M> descending"


@dataclass
class Propagator:
    """A propagator matrix at time t, tagged with the method that produced it."""
    matrix: ComplexMatrix
    t: float
    method: str
    basis: str = BASIS_LABEL
    warnings: List[str] = field(default_factory=list)
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, state: NDArray[np.complex128]) -> NDArray[np.complex128]:
        return self.matrix @ state


def commutator(a: ComplexMatrix, b: ComplexMatrix) -> ComplexMatrix:
    return a @ b - b @ a


def max_abs(a: ComplexMatrix) -> float:
    return float(np.max(np.abs(a)))
