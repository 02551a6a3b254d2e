"""Ground-truth propagator by classical RK4 on i dU/dt = H(t) U, plus the
closed-form spin-vector results for free quadrupole evolution.
"""
import logging
from dataclasses import asdict, dataclass
from math import comb
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from utils.errors import ConfigError, PreconditionError
from utils.linalg import ComplexMatrix, Propagator, expm_unitary, polar_unitary
from utils.spin_algebra import SpinParams, is_integer_spin, rotated_coeffs, spin_matrices, two_spin

logger = logging.getLogger(__name__)

EXACT_METHOD = "exact"


@dataclass(frozen=True)
class ExactSolverConfig:
    """RK4 settings. ``dt=None`` picks (2 pi / omega_max) / 200."""
    dt: Optional[float] = None
    renormalize: bool = True
    renorm_interval: int = 1000
    allow_large_dt: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def omega_max(params: SpinParams) -> float:
    """Fastest frequency the integrator must resolve: drive or widest adjacent splitting."""
    return max(abs(params.omega), (two_spin(params.spin) - 1) * params.Q + params.B0)


def resolve_dt(params: SpinParams, cfg: ExactSolverConfig) -> float:
    period = 2.0 * np.pi / omega_max(params)
    if cfg.dt is None:
        return period / 200.0
    if cfg.dt <= 0:
        raise ConfigError(f"dt must be positive, got {cfg.dt}")
    limit = period / 100.0
    if cfg.dt > limit:
        if not cfg.allow_large_dt:
            raise ConfigError(
                f"dt={cfg.dt:.4g} exceeds the stability limit {limit:.4g}; pass the override flag to force it"
            )
        logger.warning(f"dt={cfg.dt:.4g} exceeds the recommended limit {limit:.4g}")
    return float(cfg.dt)


class RungeKuttaSolver:
    """Propagates U(t) from U(0) = 1 and checkpoints it at requested times.

    The traceless part of H(t) is integrated; the constant trace phase
    exp(-i Q I(I+1) t / 3) is multiplied back exactly.
    """

    def __init__(self, params: SpinParams, cfg: Optional[ExactSolverConfig] = None):
        self.params = params
        self.cfg = cfg or ExactSolverConfig()
        self.dt = resolve_dt(params, self.cfg)
        ops = spin_matrices(params.spin)
        self.dim = ops.dim
        self.trace_shift = params.Q * params.spin * (params.spin + 1) / 3.0
        self._static = (params.Q * ops.Iz @ ops.Iz + params.B0 * ops.Iz
                        - self.trace_shift * np.eye(self.dim))
        self._drive = params.B1 * np.asarray(ops.Ix)
        self.steps_taken = 0

    def _generator(self, t: float) -> ComplexMatrix:
        return -1j * (self._static + np.cos(self.params.omega * t) * self._drive)

    def _step(self, u: ComplexMatrix, t: float, h: float) -> ComplexMatrix:
        k1 = self._generator(t) @ u
        mid = self._generator(t + 0.5 * h)
        k2 = mid @ (u + 0.5 * h * k1)
        k3 = mid @ (u + 0.5 * h * k2)
        k4 = self._generator(t + h) @ (u + h * k3)
        return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def _advance(self, u: ComplexMatrix, t_start: float, t_end: float) -> ComplexMatrix:
        span = t_end - t_start
        if span <= 0:
            return u
        n_full = int(np.floor(span / self.dt + 1e-9))
        remainder = span - n_full * self.dt
        if remainder <= 1e-12 * max(1.0, span):
            remainder = 0.0
        for j in range(n_full):
            u = self._step(u, t_start + j * self.dt, self.dt)
            u = self._maybe_renormalize(u)
        if remainder > 0.0:
            u = self._step(u, t_start + n_full * self.dt, remainder)
            u = self._maybe_renormalize(u)
        return u

    def _maybe_renormalize(self, u: ComplexMatrix) -> ComplexMatrix:
        self.steps_taken += 1
        if self.cfg.renormalize and self.steps_taken % self.cfg.renorm_interval == 0:
            return polar_unitary(u)
        return u

    def propagate(self, times: Sequence[float]) -> List[ComplexMatrix]:
        """U at each time in ``times`` (non-decreasing, all >= 0)."""
        times = [float(t) for t in times]
        if any(t < 0 for t in times):
            raise PreconditionError("Propagation times must be non-negative")
        if any(b < a for a, b in zip(times, times[1:])):
            raise PreconditionError("Propagation times must be non-decreasing")
        self.steps_taken = 0
        u = np.eye(self.dim, dtype=np.complex128)
        t_now = 0.0
        results = []
        for t in times:
            u = self._advance(u, t_now, t)
            t_now = max(t_now, t)
            results.append(u * np.exp(-1j * self.trace_shift * t))
        logger.debug(f"RK4 took {self.steps_taken} steps (dt={self.dt:.3e}) to t={t_now:.4g}")
        return results


def rk4_propagator(params: SpinParams, t_final: float,
                   cfg: Optional[ExactSolverConfig] = None) -> Propagator:
    if t_final < 0:
        raise PreconditionError(f"t_final must be non-negative, got {t_final}")
    solver = RungeKuttaSolver(params, cfg)
    matrix = solver.propagate([t_final])[0]
    return Propagator(matrix=matrix, t=float(t_final), method=EXACT_METHOD,
                      diagnostics={"dt": solver.dt, "steps": float(solver.steps_taken)})


class ExactPropagator:
    """Single-time RK4 propagator; sampled traces checkpoint one solver run instead."""

    method = EXACT_METHOD

    def __init__(self, params: SpinParams, cfg: Optional[ExactSolverConfig] = None):
        self.params = params
        self.cfg = cfg or ExactSolverConfig()
        resolve_dt(params, self.cfg)

    def __call__(self, t: float) -> Propagator:
        return rk4_propagator(self.params, t, self.cfg)


def static_phases(params: SpinParams, t: float) -> NDArray[np.complex128]:
    """exp(-i (Q M^2 + B0 M) t) for every level, the drive-free evolution."""
    ops = spin_matrices(params.spin)
    energies = np.real(np.diag(params.Q * ops.Iz @ ops.Iz + params.B0 * ops.Iz))
    return np.exp(-1j * energies * t)


# Spin vector under free quadrupole evolution, starting from the Ix eigenstate

@dataclass(frozen=True)
class SpinVectorSample:
    t: float
    Vx: float
    Vy: float
    Vz: float

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.Vx ** 2 + self.Vy ** 2 + self.Vz ** 2))


@dataclass(frozen=True)
class RotatingTerm:
    """One term of the spin-vector decomposition; chirality is 'R', 'L' or 'const'."""
    omega: float
    weight: float
    chirality: str

    def vector(self, t: float) -> Tuple[float, float]:
        if self.chirality == "const":
            return self.weight, 0.0
        sign = 1.0 if self.chirality == "R" else -1.0
        return self.weight * np.cos(self.omega * t), sign * self.weight * np.sin(self.omega * t)


def spin_vector_closed(spin: float, Q: float, t: float) -> SpinVectorSample:
    """V(t) = I cos(Qt)^(2I-1) x."""
    exponent = two_spin(spin) - 1
    return SpinVectorSample(t=t, Vx=float(spin * np.cos(Q * t) ** exponent), Vy=0.0, Vz=0.0)


def spin_vector_heisenberg(spin: float, Q: float, t: float) -> SpinVectorSample:
    """Expectation values with the state evolved under exp(-i Q Iz^2 t) explicitly."""
    ops = spin_matrices(spin)
    psi0 = rotated_coeffs(spin).astype(np.complex128)
    psi = expm_unitary(Q * ops.Iz @ ops.Iz, t) @ psi0
    expect = [float(np.real(np.vdot(psi, op @ psi))) for op in (ops.Ix, ops.Iy, ops.Iz)]
    return SpinVectorSample(t=t, Vx=expect[0], Vy=expect[1], Vz=expect[2])


def spin_vector_series(spin: float, Q: float, t: float) -> SpinVectorSample:
    """<Ix(t)> as the sum over adjacent levels of c_M c_{M+1} sqrt((I-M)(I+M+1)) cos[(2M+1)Qt]."""
    coeffs = rotated_coeffs(spin)
    n = len(coeffs)
    vx = 0.0
    # coeffs[k] is c_M with M = I - k; c_{M+1} is coeffs[k - 1]
    for k in range(1, n):
        m = spin - k
        vx += np.sqrt((spin - m) * (spin + m + 1)) * coeffs[k] * coeffs[k - 1] * np.cos((2 * m + 1) * Q * t)
    return SpinVectorSample(t=t, Vx=float(vx), Vy=0.0, Vz=0.0)


def spin_vector_decomposition(spin: float, Q: float, t: float = 0.0) -> List[RotatingTerm]:
    """Rotating-vector terms whose vector sum is I cos(Qt)^(2I-1) x.

    Each pair at omega_k = (2I-1-2k) Q carries I C(2I-1, k) / 2^(2I-2),
    split equally between the clockwise and counterclockwise vectors.
    Half-integer spin adds the constant I C(2I-1, I-1/2) / 2^(2I-1).
    ``t`` is accepted for signature symmetry; the terms themselves are time independent.
    """
    n = two_spin(spin) - 1
    terms: List[RotatingTerm] = []
    n_pairs = int(spin) if is_integer_spin(spin) else int(spin - 0.5)
    for k in range(n_pairs):
        pair_weight = spin * comb(n, k) / 2.0 ** (n - 1)
        omega_k = (n - 2 * k) * Q
        terms.append(RotatingTerm(omega=omega_k, weight=pair_weight / 2.0, chirality="R"))
        terms.append(RotatingTerm(omega=omega_k, weight=pair_weight / 2.0, chirality="L"))
    if not is_integer_spin(spin):
        terms.append(RotatingTerm(omega=0.0, weight=spin * comb(n, n // 2) / 2.0 ** n, chirality="const"))
    return terms


def resum_decomposition(terms: Sequence[RotatingTerm], t: float) -> SpinVectorSample:
    vx = vy = 0.0
    for term in terms:
        dx, dy = term.vector(t)
        vx += dx
        vy += dy
    return SpinVectorSample(t=t, Vx=float(vx), Vy=float(vy), Vz=0.0)
