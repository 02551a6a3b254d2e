"""RWA in the full Hilbert space.

Integer spin: rotating frame exp(-i omega t Iz Ia) with
H_eff = Q Iz^2 - omega Iz Ia + B0 Iz + (B1/2) Ix.

Half-integer spin J: write J = I + S with integer I and S = 1/2, apply the
integer frame to I and an ordinary frame to S, then project the product-space
propagator onto the J = I + 1/2 multiplet.
"""
import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from utils.errors import PreconditionError
from utils.linalg import (ComplexMatrix, Propagator, commutator, expm_from_eig, get_tolerances,
                          hermitian_eig, max_abs, polar_unitary)
from utils.spin_algebra import (SpinParams, clebsch_embed, ia_operator, m_values, product_operators,
                                spin_matrices)

logger = logging.getLogger(__name__)

RWA_FULL_METHOD = "rwa-full"


@dataclass(frozen=True)
class FullRwaGenerator:
    frame: ComplexMatrix
    Heff: ComplexMatrix


def full_rwa_generator(params: SpinParams) -> FullRwaGenerator:
    if not params.is_integer:
        raise PreconditionError("full_rwa_integer needs integer spin; use full_rwa_half_integer")
    ops = spin_matrices(params.spin)
    iz_ia = ops.Iz @ ia_operator(params.spin)
    h_eff = (params.Q * ops.Iz @ ops.Iz - params.omega * iz_ia
             + params.B0 * ops.Iz + 0.5 * params.B1 * ops.Ix)
    return FullRwaGenerator(frame=iz_ia, Heff=h_eff)


def interaction_picture_couplings(params: SpinParams) -> List[Tuple[float, float]]:
    """(M, rate) for each adjacent pair (M, M-1): the phase rate of the kept drive term.

    Read off the diagonal generator Q Iz^2 + B0 Iz - omega Iz Ia.
    """
    gen = full_rwa_generator(params)
    ops = spin_matrices(params.spin)
    diagonal = np.real(np.diag(params.Q * ops.Iz @ ops.Iz + params.B0 * ops.Iz - params.omega * gen.frame))
    m = m_values(params.spin)
    return [(float(m[k]), float(diagonal[k] - diagonal[k + 1])) for k in range(len(m) - 1)]


class FullRwaIntegerPropagator:
    method = RWA_FULL_METHOD

    def __init__(self, params: SpinParams):
        self.params = params
        self.generator = full_rwa_generator(params)
        self._frame_diag = np.real(np.diag(self.generator.frame))
        self._eig = hermitian_eig(self.generator.Heff)

    def __call__(self, t: float) -> Propagator:
        frame = np.exp(-1j * self.params.omega * self._frame_diag * t)
        matrix = frame[:, None] * expm_from_eig(self._eig, t)
        return Propagator(matrix=matrix, t=float(t), method=self.method)


class FullRwaHalfIntegerPropagator:
    """Product-space construction projected onto J = I_int + 1/2.

    The projection is exact only if the transformed evolution keeps the
    multiplet invariant; ``leakage`` measures how far it does not.
    """

    method = RWA_FULL_METHOD

    def __init__(self, params: SpinParams):
        if params.is_integer:
            raise PreconditionError("full_rwa_half_integer needs half-integer spin; use full_rwa_integer")
        self.params = params
        self.i_int = int(round(params.spin - 0.5))
        ops = product_operators(self.i_int)
        self.ops = ops
        iz_ia = ops.Iz @ ops.Ia
        # Q Sz^2 is a constant and is dropped
        self.h_eff = (params.Q * ops.Iz @ ops.Iz - params.omega * iz_ia + params.B0 * ops.Iz
                      + 0.5 * params.B1 * ops.Ix + (params.B0 - params.omega) * ops.Sz
                      + 0.5 * params.B1 * ops.Sx + 2.0 * params.Q * ops.Iz @ ops.Sz)
        self._frame_diag = np.real(np.diag(iz_ia + ops.Sz))
        self._eig = hermitian_eig(self.h_eff)
        self.embedding = clebsch_embed(self.i_int).embedding
        self._j_squared = ops.j_squared()
        self._leak_logged = False

    def product_propagator(self, t: float) -> ComplexMatrix:
        frame = np.exp(-1j * self.params.omega * self._frame_diag * t)
        return frame[:, None] * expm_from_eig(self._eig, t)

    def __call__(self, t: float) -> Propagator:
        e = self.embedding
        u_product = self.product_propagator(t)
        projected = e.conj().T @ u_product @ e
        leakage = max_abs(u_product @ e - e @ projected)
        j2_commutator = max_abs(commutator(u_product, self._j_squared))
        warnings = []
        threshold = get_tolerances().leakage
        if leakage <= threshold:
            projected = polar_unitary(projected)
        else:
            message = (f"Half-integer full-space RWA leaks out of the J={self.params.spin:g} multiplet "
                       f"(above {threshold:.0e}); returning the unprojected block")
            warnings.append(message)
            # Logged once per instance
            if not self._leak_logged:
                logger.warning(f"{message}; first seen at t={t:.4g} with leakage {leakage:.3e}")
                self._leak_logged = True
        return Propagator(matrix=projected, t=float(t), method=self.method, warnings=warnings,
                          diagnostics={"leakage": leakage, "j2_commutator": j2_commutator})


class FullRwaPropagator:
    """Dispatches on spin parity."""

    method = RWA_FULL_METHOD

    def __init__(self, params: SpinParams):
        self._impl = (FullRwaIntegerPropagator(params) if params.is_integer
                      else FullRwaHalfIntegerPropagator(params))

    def __call__(self, t: float) -> Propagator:
        return self._impl(t)


def full_rwa_integer(params: SpinParams, t: float) -> Propagator:
    return FullRwaIntegerPropagator(params)(t)


def full_rwa_half_integer(params: SpinParams, t: float) -> Propagator:
    return FullRwaHalfIntegerPropagator(params)(t)
