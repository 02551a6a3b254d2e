"""State and operator fidelity, the pi-rotation timescale and sampled
fidelity traces of the approximate methods against the RK4 reference.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from numpy.typing import NDArray

from utils.errors import PreconditionError, UndefinedTimescaleError
from utils.exact_evolution import EXACT_METHOD, ExactSolverConfig, RungeKuttaSolver
from utils.linalg import ComplexMatrix, as_matrix
from utils.method_engine import MethodEngine
from utils.spin_algebra import SpinParams, basis_state, rotated_coeffs

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_PI = 20.0
OPERATOR = "operator"
STATE = "state"


def operator_fidelity(u_approx: ComplexMatrix, u_exact: ComplexMatrix) -> float:
    """F = |Tr(U_approx^dag U_exact) / N|^2."""
    a, b = as_matrix(u_approx), as_matrix(u_exact)
    if a.shape != b.shape:
        raise PreconditionError(f"Operator fidelity needs equal dimensions, got {a.shape} and {b.shape}")
    overlap = np.vdot(a, b) / a.shape[0]
    return float(abs(overlap) ** 2)


def normalized_operator_fidelity(u_approx: ComplexMatrix, u_exact: ComplexMatrix) -> float:
    """|Tr(A^dag B)|^2 / (Tr(A^dag A) Tr(B^dag B)); equals operator_fidelity for unitary arguments.

    Used on sampled traces so RK4 norm drift and leaky projections do not bias F.
    """
    a, b = as_matrix(u_approx), as_matrix(u_exact)
    if a.shape != b.shape:
        raise PreconditionError(f"Operator fidelity needs equal dimensions, got {a.shape} and {b.shape}")
    norms = np.vdot(a, a).real * np.vdot(b, b).real
    if norms <= 0.0:
        raise PreconditionError("Operator fidelity of a zero matrix")
    return float(abs(np.vdot(a, b)) ** 2 / norms)


def state_fidelity(psi_a: NDArray[np.complex128], psi_b: NDArray[np.complex128], tol: float = 1e-8) -> float:
    """f = |<a|b>| for unit vectors."""
    a = np.asarray(psi_a, dtype=np.complex128).ravel()
    b = np.asarray(psi_b, dtype=np.complex128).ravel()
    if a.shape != b.shape:
        raise PreconditionError(f"State fidelity needs equal dimensions, got {a.shape} and {b.shape}")
    for name, v in (("psi_a", a), ("psi_b", b)):
        norm = float(np.linalg.norm(v))
        if abs(norm - 1.0) > tol:
            raise PreconditionError(f"{name} is not normalised (|psi| = {norm:.12g})")
    return float(abs(np.vdot(a, b)))


def _unit(v: NDArray[np.complex128]) -> NDArray[np.complex128]:
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else v


@dataclass(frozen=True)
class PiTime:
    value: float


def t_pi(params: SpinParams) -> PiTime:
    """T_pi = pi / sqrt(I(I+1) B1^2 / 2 + (Q - omega)^2)."""
    spin = params.spin
    denom_sq = 0.5 * spin * (spin + 1) * params.B1 ** 2 + (params.Q - params.omega) ** 2
    if denom_sq <= 0.0:
        raise UndefinedTimescaleError("T_pi is undefined for B1 = 0 at omega = Q")
    return PiTime(value=float(np.pi / np.sqrt(denom_sq)))


@dataclass(frozen=True)
class InitialState:
    """Either a basis state |I, M> (kind 'basis') or the Ix eigenstate (kind 'x')."""
    kind: str
    m: Optional[float] = None

    @property
    def label(self) -> str:
        return "x" if self.kind == "x" else f"M={self.m:g}"

    def vector(self, spin: float) -> NDArray[np.complex128]:
        if self.kind == "x":
            return rotated_coeffs(spin).astype(np.complex128)
        return basis_state(spin, self.m)


def sample_times(t_max: float, n_samples: int) -> NDArray[np.float64]:
    """t_k = k t_max / n for k = 1..n."""
    if n_samples < 2:
        raise PreconditionError(f"n_samples must be at least 2, got {n_samples}")
    if not t_max > 0:
        raise PreconditionError(f"t_max must be positive, got {t_max}")
    return t_max * np.arange(1, n_samples + 1, dtype=np.float64) / n_samples


@dataclass
class FidelityTrace:
    method: str
    times: NDArray[np.float64]
    t_over_pi: NDArray[np.float64]
    f_state: NDArray[np.float64]
    F_op: NDArray[np.float64]
    initial_state: NDArray[np.complex128]
    warnings: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def __len__(self) -> int:
        return len(self.times)


def trace_methods(params: SpinParams,
                  methods: Sequence[str],
                  t_max_pi: float,
                  n_samples: int,
                  initial: InitialState,
                  engine: Optional[MethodEngine] = None,
                  solver_cfg: Optional[ExactSolverConfig] = None) -> List[FidelityTrace]:
    """Sample every method on the shared grid against one checkpointed RK4 run.

    A method that raises yields a trace of nan values carrying the error.
    """
    solver_cfg = solver_cfg or (engine.solver_cfg if engine else ExactSolverConfig())
    engine = engine or MethodEngine(params, solver_cfg=solver_cfg)
    tp = t_pi(params).value
    times = sample_times(t_max_pi * tp, n_samples)
    psi0 = initial.vector(params.spin)

    reference = RungeKuttaSolver(params, solver_cfg).propagate(times)
    psi_ref = [_unit(u @ psi0) for u in reference]
    logger.info(f"Exact reference ready: {n_samples} samples up to {t_max_pi:g} T_pi (T_pi={tp:.6g})")

    traces = []
    for name in methods:
        f_state = np.full(n_samples, np.nan)
        f_op = np.full(n_samples, np.nan)
        warnings: List[str] = []
        error = None
        try:
            if name == EXACT_METHOD:
                matrices = reference
            else:
                build = engine.build(name)
                matrices = []
                for t in times:
                    prop = build(float(t))
                    warnings.extend(w for w in prop.warnings if w not in warnings)
                    matrices.append(prop.matrix)
            for k, (u, u_ref) in enumerate(zip(matrices, reference)):
                f_op[k] = normalized_operator_fidelity(u, u_ref)
                f_state[k] = state_fidelity(_unit(u @ psi0), psi_ref[k])
        except Exception as exc:
            error = f"{type(exc).__name__}: {exc}"
            logger.warning(f"Method '{name}' failed: {error}")
            f_state[:] = np.nan
            f_op[:] = np.nan
        traces.append(FidelityTrace(
            method=name,
            times=times,
            t_over_pi=times / tp,
            f_state=f_state,
            F_op=f_op,
            initial_state=psi0,
            warnings=warnings,
            error=error,
        ))
    return traces


def window_average(trace: FidelityTrace, metric: str = OPERATOR, window_pi: float = DEFAULT_WINDOW_PI) -> float:
    """Mean of F_op (or f_state) over the samples in [0, window_pi T_pi]."""
    if len(trace) == 0:
        raise PreconditionError("Cannot average an empty trace")
    if metric not in (OPERATOR, STATE):
        raise PreconditionError(f"metric must be '{OPERATOR}' or '{STATE}', got {metric!r}")
    values = trace.F_op if metric == OPERATOR else trace.f_state
    mask = trace.t_over_pi <= window_pi * (1.0 + 1e-12)
    if not np.any(mask):
        raise PreconditionError(f"No samples inside the {window_pi:g} T_pi window")
    return float(np.mean(values[mask]))


def trace_summary(trace: FidelityTrace) -> Dict[str, float]:
    summary: Dict[str, float] = {}
    for key, values in (("f_state", trace.f_state), ("F_op", trace.F_op)):
        summary[f"{key}_mean"] = float(np.mean(values))
        summary[f"{key}_min"] = float(np.min(values))
        summary[f"{key}_max"] = float(np.max(values))
        summary[f"{key}_final"] = float(values[-1])
    return summary
