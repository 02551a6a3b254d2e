"""Standard RWA on reduced subspaces.

Near omega ~ (2M-1)Q the drive acts on the pairs {|M>,|M-1>} and
{|-M+1>,|-M>}; near omega ~ Q it acts on the central {|1>,|0>,|-1>} triple
(integer spin) or on {|1/2>,|-1/2>} (half-integer spin). Each active block
gets its closed-form RWA propagator, every other level keeps its static phase.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from utils.errors import DomainError, PreconditionError
from utils.exact_evolution import static_phases
from utils.linalg import (ComplexMatrix, EigenDecomposition, Propagator, expm_from_eig,
                          expm_unitary, get_tolerances, hermitian_eig)
from utils.spin_algebra import SpinParams, level_index, m_values, spin_matrices

logger = logging.getLogger(__name__)

RWA_REDUCED_METHOD = "rwa-reduced"
RWA_ZEEMAN_METHOD = "rwa-zeeman"

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)

PLUS = "plus"
MINUS = "minus"


class BlockKind(str, Enum):
    TWO_LEVEL_PAIR = "two_level_pair"
    CENTRAL_THREE_LEVEL = "central_three_level"
    CENTRAL_TWO_LEVEL_HALF = "central_two_level_half"


@dataclass
class ReducedBlockSpec:
    M_target: float
    kind: BlockKind
    omega0_plus: float
    omega0_minus: float
    B1_eff: float
    warnings: List[str] = field(default_factory=list)

    def omega0(self, side: str) -> float:
        return self.omega0_plus if side == PLUS else self.omega0_minus

    @property
    def sides(self) -> Tuple[str, ...]:
        if self.kind == BlockKind.TWO_LEVEL_PAIR:
            return (PLUS, MINUS)
        if self.kind == BlockKind.CENTRAL_TWO_LEVEL_HALF:
            return (PLUS,)
        return ()


def candidate_targets(spin: float) -> List[float]:
    """Upper levels M of the transitions a drive can target: 1..I or 1/2..I."""
    return sorted(m for m in m_values(spin) if m > 0)


def resonance_frequency(params: SpinParams, m: float, side: str = PLUS) -> float:
    """omega_M = (2M-1) Q +/- B0."""
    sign = 1.0 if side == PLUS else -1.0
    return (2 * m - 1) * params.Q + sign * params.B0


def block_spec(params: SpinParams, m_target: float) -> ReducedBlockSpec:
    """Build the block description for an explicitly chosen transition."""
    if not any(abs(m_target - m) < 1e-9 for m in candidate_targets(params.spin)):
        raise PreconditionError(f"M_target={m_target} is not a transition of spin {params.spin}")
    spin = params.spin
    if abs(m_target - 1.0) < 1e-9 and params.is_integer:
        kind = BlockKind.CENTRAL_THREE_LEVEL
        b1_eff = np.sqrt(spin * (spin + 1) / 2.0) * params.B1
    else:
        kind = BlockKind.CENTRAL_TWO_LEVEL_HALF if abs(m_target - 0.5) < 1e-9 else BlockKind.TWO_LEVEL_PAIR
        b1_eff = 0.5 * params.B1 * np.sqrt((spin + m_target) * (spin - m_target + 1))
    return ReducedBlockSpec(
        M_target=float(m_target),
        kind=kind,
        omega0_plus=resonance_frequency(params, m_target, PLUS),
        omega0_minus=resonance_frequency(params, m_target, MINUS),
        B1_eff=float(b1_eff),
    )


def select_block(params: SpinParams) -> ReducedBlockSpec:
    """Pick the transition nearest to the drive; ties go to the smaller M."""
    best_m, best_detuning = None, np.inf
    for m in candidate_targets(params.spin):
        detuning = abs(params.omega - resonance_frequency(params, m))
        if detuning < best_detuning - 1e-12:
            best_m, best_detuning = m, detuning
    spec = block_spec(params, best_m)
    # Adjacent resonances are 2Q apart
    gap = 2.0 * params.Q
    if best_detuning > 0.5 * gap:
        message = (f"Drive omega={params.omega:.4g} is {best_detuning:.4g} from the nearest "
                   f"resonance (M*={best_m}); the reduced-space picture is doubtful")
        logger.warning(message)
        spec.warnings.append(message)
    if not params.quadrupole_dominant:
        message = f"B0={params.B0:.4g} >= Q={params.Q:.4g}: outside the quadrupole-dominant regime"
        logger.warning(message)
        spec.warnings.append(message)
    return spec


def block_levels(spec: ReducedBlockSpec, side: Optional[str] = None) -> List[float]:
    """M values spanned by a block, in descending order."""
    m = spec.M_target
    if spec.kind == BlockKind.CENTRAL_THREE_LEVEL:
        return [1.0, 0.0, -1.0]
    if side == MINUS:
        return [-m + 1, -m]
    return [m, m - 1]


def side_sign(side: str) -> float:
    if side not in (PLUS, MINUS):
        raise PreconditionError(f"side must be '{PLUS}' or '{MINUS}', got {side!r}")
    return 1.0 if side == PLUS else -1.0


def two_level_effective_hamiltonian(spec: ReducedBlockSpec, side: str, omega: float) -> ComplexMatrix:
    """+/-(omega0 - omega)/2 sigma_z + (B1_eff/2) sigma_x in the (upper M, lower M) basis.

    On the minus side the first basis state is the lower-energy level, so the
    splitting enters with the opposite sign.
    """
    s = side_sign(side)
    return s * 0.5 * (spec.omega0(side) - omega) * SIGMA_Z + 0.5 * spec.B1_eff * SIGMA_X


def frame_rotation_2(side: str, omega: float, t: float) -> ComplexMatrix:
    """exp(-/+ i omega sigma_z t / 2)."""
    phase = side_sign(side) * omega * t / 2.0
    return np.diag([np.exp(-1j * phase), np.exp(1j * phase)])


def check_two_level_block(spec: ReducedBlockSpec, side: str) -> None:
    if spec.kind == BlockKind.CENTRAL_THREE_LEVEL:
        raise PreconditionError("Two-level propagator requested for the central three-level block")
    if side not in spec.sides:
        raise PreconditionError(f"Block {spec.kind.value} has no '{side}' side")


def two_level_block_propagator(spec: ReducedBlockSpec, side: str, params: SpinParams, t: float) -> ComplexMatrix:
    check_two_level_block(spec, side)
    h_eff = two_level_effective_hamiltonian(spec, side, params.omega)
    return frame_rotation_2(side, params.omega, t) @ expm_unitary(h_eff, t)


@dataclass(frozen=True)
class TwoLevelClosedForm:
    """Coefficients of U = tau0 1 - i (taux sx + tauy sy + tauz sz)/2."""
    Delta: float
    Omega: float
    tau0: float
    taux: float
    tauy: float
    tauz: float

    def matrix(self) -> ComplexMatrix:
        return (self.tau0 * IDENTITY_2
                - 0.5j * (self.taux * SIGMA_X + self.tauy * SIGMA_Y + self.tauz * SIGMA_Z))

    def unitarity_defect(self) -> float:
        return abs(self.tau0 ** 2 + (self.taux ** 2 + self.tauy ** 2 + self.tauz ** 2) / 4.0 - 1.0)


def two_level_tau_form(omega0: float, b1_eff: float, omega: float, t: float) -> TwoLevelClosedForm:
    """Expanded form of exp(-i omega sz t/2) exp(-i H_eff t) on the plus side.

    tau_z carries Delta sin(Omega t)/Omega without an extra drive factor;
    only this reading reproduces the operator product.
    """
    delta = omega0 - omega
    big_omega = np.sqrt(delta ** 2 + b1_eff ** 2) / 2.0
    # sin(Omega t)/Omega, finite as Omega -> 0
    sin_ratio = t * np.sinc(big_omega * t / np.pi)
    half_c, half_s = np.cos(omega * t / 2.0), np.sin(omega * t / 2.0)
    cos_big = np.cos(big_omega * t)
    return TwoLevelClosedForm(
        Delta=float(delta),
        Omega=float(big_omega),
        tau0=float(half_c * cos_big - 0.5 * delta * sin_ratio * half_s),
        taux=float(b1_eff * sin_ratio * half_c),
        tauy=float(b1_eff * sin_ratio * half_s),
        tauz=float(delta * sin_ratio * half_c + 2.0 * cos_big * half_s),
    )


# SU(3) closed form for exp(-i H t) with a 3x3 Hermitian generator

@dataclass(frozen=True)
class Su3ClosedForm:
    """Spectral data of H = shift 1 + sqrt(u/2) Hcal with Tr Hcal = 0, Tr Hcal^2 = 2."""
    u: float
    alpha: float
    Hcal: ComplexMatrix
    shift: float
    generator: ComplexMatrix

    @property
    def scalar(self) -> bool:
        return self.u <= 1e-24 * max(1.0, self.shift ** 2)

    @property
    def angles(self) -> NDArray[np.float64]:
        return self.alpha + 2.0 * np.pi * np.arange(3) / 3.0

    @property
    def eigenvalues(self) -> NDArray[np.float64]:
        """Eigenvalues of Hcal, (2/sqrt 3) sin(alpha + 2 pi k / 3)."""
        return 2.0 / np.sqrt(3.0) * np.sin(self.angles)

    @property
    def denominators(self) -> NDArray[np.float64]:
        return 1.0 - 2.0 * np.cos(2.0 * self.angles)

    @property
    def degenerate(self) -> bool:
        return not self.scalar and float(np.min(np.abs(self.denominators))) < get_tolerances().su3_degeneracy

    def evolve(self, t: float) -> ComplexMatrix:
        """exp(-i H t); falls back to the eigendecomposition when eigenvalues nearly coincide."""
        if self.scalar:
            return np.exp(-1j * self.shift * t) * np.eye(3, dtype=np.complex128)
        if self.degenerate:
            logger.debug("SU(3) closed form near-degenerate; using the spectral exponential")
            return expm_unitary(self.generator, t)
        hcal = self.Hcal
        hcal2 = hcal @ hcal
        one = np.eye(3, dtype=np.complex128)
        rate = np.sqrt(self.u / 2.0)
        total = np.zeros((3, 3), dtype=np.complex128)
        for lam, phi, denom in zip(self.eigenvalues, self.angles, self.denominators):
            numerator = hcal2 + lam * hcal - (1.0 + 2.0 * np.cos(2.0 * phi)) / 3.0 * one
            total += numerator / denom * np.exp(-1j * t * rate * lam)
        return np.exp(-1j * self.shift * t) * total


def su3_closed_form(h: ComplexMatrix) -> Su3ClosedForm:
    h = np.asarray(h, dtype=np.complex128)
    if h.shape != (3, 3):
        raise PreconditionError(f"SU(3) closed form needs a 3x3 generator, got {h.shape}")
    shift = float(np.real(np.trace(h))) / 3.0
    a = h - shift * np.eye(3)
    u = float(np.real(np.trace(a @ a)))
    if u <= 1e-24 * max(1.0, shift ** 2):
        return Su3ClosedForm(u=u, alpha=0.0, Hcal=np.zeros((3, 3), dtype=np.complex128), shift=shift, generator=h)
    hcal = np.sqrt(2.0 / u) * a
    x = 1.5 * np.sqrt(3.0) * float(np.real(np.linalg.det(hcal)))
    if abs(x) > 1.0 + 1e-10:
        raise DomainError(f"arccos argument {x:.12g} outside [-1, 1]; generator normalisation is broken")
    x = min(1.0, max(-1.0, x))
    alpha = (np.arccos(x) - np.pi / 2.0) / 3.0
    return Su3ClosedForm(u=u, alpha=float(alpha), Hcal=hcal, shift=shift, generator=h)


def spin1_operators():
    return spin_matrices(1)


def three_level_effective_hamiltonian(params: SpinParams, b1_eff: float) -> ComplexMatrix:
    """(Q - omega) Sz^2 + B0 Sz + (B1'/2) Sx."""
    s = spin1_operators()
    return ((params.Q - params.omega) * s.Iz @ s.Iz + params.B0 * s.Iz + 0.5 * b1_eff * s.Ix)


def quadrupole_frame(omega: float, t: float) -> ComplexMatrix:
    """R = exp(-i omega Sz^2 t) = (e^{-i omega t} - 1) Sz^2 + 1."""
    phase = np.exp(-1j * omega * t)
    return np.diag([phase, 1.0, phase])


def central_b1_eff(params: SpinParams) -> float:
    return float(np.sqrt(params.spin * (params.spin + 1) / 2.0) * params.B1)


def check_central_block(params: SpinParams) -> None:
    if not params.is_integer:
        raise PreconditionError("The central three-level block exists for integer spin only")


def three_level_su3_propagator(params: SpinParams, t: float) -> ComplexMatrix:
    check_central_block(params)
    h_eff = three_level_effective_hamiltonian(params, central_b1_eff(params))
    return quadrupole_frame(params.omega, t) @ su3_closed_form(h_eff).evolve(t)


# Assembly into the full space

@dataclass(frozen=True)
class BlockMethod:
    """Pair of block propagators used by the assembler (standard RWA or CHRW)."""
    name: str
    three_level: Callable[[SpinParams, float], ComplexMatrix]
    two_level: Callable[[ReducedBlockSpec, str, SpinParams, float], ComplexMatrix]


RWA_BLOCKS = BlockMethod(
    name=RWA_REDUCED_METHOD,
    three_level=three_level_su3_propagator,
    two_level=two_level_block_propagator,
)


def level_energy(params: SpinParams, m: float) -> float:
    return params.Q * m * m + params.B0 * m


def assemble_reduced(params: SpinParams, spec: ReducedBlockSpec, t: float,
                     block_method: BlockMethod = RWA_BLOCKS) -> Propagator:
    """Full-dimension propagator: active blocks plus static phases on every other level.

    Two-level blocks carry the phase of their mean level energy, which the
    block Hamiltonian drops as a constant.
    """
    matrix = np.diag(static_phases(params, t)).astype(np.complex128)
    covered: Dict[int, str] = {}

    def place(levels: List[float], block: ComplexMatrix, label: str) -> None:
        idx = [level_index(params.spin, m) for m in levels]
        overlap = [i for i in idx if i in covered]
        assert not overlap, f"block {label} overlaps {[covered[i] for i in overlap]}"
        if idx != list(range(idx[0], idx[0] + len(idx))):
            raise PreconditionError(f"Block levels {levels} are not contiguous")
        for i in idx:
            covered[i] = label
        sl = slice(idx[0], idx[-1] + 1)
        matrix[sl, :] = 0.0
        matrix[:, sl] = 0.0
        matrix[sl, sl] = block

    if spec.kind == BlockKind.CENTRAL_THREE_LEVEL:
        place(block_levels(spec), block_method.three_level(params, t), "central")
    else:
        for side in spec.sides:
            levels = block_levels(spec, side)
            centre = 0.5 * sum(level_energy(params, m) for m in levels)
            block = block_method.two_level(spec, side, params, t) * np.exp(-1j * centre * t)
            place(levels, block, side)
    return Propagator(matrix=matrix, t=float(t), method=block_method.name, warnings=list(spec.warnings))


class ReducedRwaPropagator:
    """Callable t -> Propagator for one parameter point."""

    method = RWA_REDUCED_METHOD

    def __init__(self, params: SpinParams, m_target: Optional[float] = None,
                 block_method: BlockMethod = RWA_BLOCKS):
        self.params = params
        self.spec = select_block(params) if m_target is None else block_spec(params, m_target)
        self.block_method = block_method

    def __call__(self, t: float) -> Propagator:
        return assemble_reduced(self.params, self.spec, t, self.block_method)


# Zeeman-dominant RWA

class ZeemanRwaPropagator:
    """U(t) = exp(-i omega Iz t) exp(-i H_eff t), H_eff = (B0 - omega) Iz + Q Iz^2 + (B1/2) Ix."""

    method = RWA_ZEEMAN_METHOD

    def __init__(self, params: SpinParams):
        self.params = params
        ops = spin_matrices(params.spin)
        self.m = np.real(np.diag(ops.Iz))
        h_eff = ((params.B0 - params.omega) * ops.Iz + params.Q * ops.Iz @ ops.Iz
                 + 0.5 * params.B1 * ops.Ix)
        self._eig: EigenDecomposition = hermitian_eig(h_eff)

    def __call__(self, t: float) -> Propagator:
        frame = np.exp(-1j * self.params.omega * self.m * t)
        matrix = frame[:, None] * expm_from_eig(self._eig, t)
        return Propagator(matrix=matrix, t=float(t), method=self.method)


def zeeman_rwa_propagator(params: SpinParams, t: float) -> Propagator:
    return ZeemanRwaPropagator(params)(t)
