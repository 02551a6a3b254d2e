"""Invariant suites runnable without pytest: `app.py selftest [--quick] [--seed N]`."""
import logging
import time
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np
import pandas as pd
from scipy.special import jv

from utils.chrw import (ChrwPropagator, bessel_j, harmonic_average_residual, solve_xi,
                        spin1_cross_identity_residual, spin1_drive_identity_residual,
                        spin1_frame_identity_residual)
from utils.exact_evolution import (ExactSolverConfig, RungeKuttaSolver, resum_decomposition,
                                   spin_vector_closed, spin_vector_decomposition, spin_vector_heisenberg)
from utils.fidelity import InitialState, t_pi, trace_methods
from utils.linalg import expm_unitary, hermitian_eig, max_abs, unitarity_residual
from utils.rwa_full import FullRwaPropagator, full_rwa_integer
from utils.rwa_reduced import ReducedRwaPropagator, ZeemanRwaPropagator, su3_closed_form, three_level_su3_propagator
from utils.spin_algebra import (SpinParams, algebra_residuals, clebsch_embed, coefficient_recursion_residual,
                                rotated_coeffs)

logger = logging.getLogger(__name__)

CheckResult = Tuple[bool, str]
SPINS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass(frozen=True)
class Check:
    name: str
    run: Callable[[np.random.Generator, bool], CheckResult]
    quick: bool = True


def _random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (a + a.conj().T)


def check_eigensolver(rng, quick) -> CheckResult:
    worst = 0.0
    for n in (2, 3, 5, 7, 8):
        h = _random_hermitian(rng, n)
        d = hermitian_eig(h)
        worst = max(worst, max_abs(d.reconstruct() - h) / max(1.0, max_abs(h)))
    return worst <= 1e-10, f"reconstruction {worst:.2e}"


def check_group_property(rng, quick) -> CheckResult:
    h = _random_hermitian(rng, 6)
    s, t = rng.uniform(0, 3, size=2)
    err = max_abs(expm_unitary(h, s) @ expm_unitary(h, t) - expm_unitary(h, s + t))
    return err <= 1e-9, f"composition {err:.2e}"


def check_spin_algebra(rng, quick) -> CheckResult:
    worst = max(max(algebra_residuals(s)) for s in SPINS)
    rec = max(coefficient_recursion_residual(s, rotated_coeffs(s)) for s in SPINS)
    emb = max(max_abs(e.conj().T @ e - np.eye(e.shape[1])) for e in (clebsch_embed(k).embedding for k in range(4)))
    ok = worst <= 1e-12 and rec <= 1e-10 and emb <= 1e-12
    return ok, f"commutators {worst:.1e}, recursion {rec:.1e}, embedding {emb:.1e}"


def check_spin_vector(rng, quick) -> CheckResult:
    times = np.linspace(0.0, 2.0 * np.pi, 25 if quick else 100)
    closed_err = resum_err = 0.0
    for spin in (0.5, 1.0, 1.5, 2.0, 3.0):
        terms = spin_vector_decomposition(spin, 1.0)
        for t in times:
            closed = spin_vector_closed(spin, 1.0, t)
            matrix = spin_vector_heisenberg(spin, 1.0, t)
            resum = resum_decomposition(terms, t)
            closed_err = max(closed_err, abs(closed.Vx - matrix.Vx), abs(matrix.Vy), abs(matrix.Vz))
            resum_err = max(resum_err, abs(resum.Vx - closed.Vx), abs(resum.Vy))
    return closed_err <= 1e-9 and resum_err <= 1e-10, f"matrix {closed_err:.1e}, resum {resum_err:.1e}"


def check_su3_closed_form(rng, quick) -> CheckResult:
    n = 3 if quick else 5
    worst = 0.0
    for b0 in np.linspace(0.0, 0.5, n):
        for b1 in np.linspace(0.05, 1.0, n):
            for detuning in np.linspace(-0.5, 0.5, n):
                params = SpinParams(spin=1, B0=b0, B1=b1, omega=1.0 + detuning)
                u = three_level_su3_propagator(params, 1.3)
                s = params
                h = ((s.Q - s.omega) * np.diag([1.0, 0.0, 1.0]) + s.B0 * np.diag([1.0, 0.0, -1.0])
                     + 0.5 * b1 * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / np.sqrt(2.0))
                oracle = np.diag(np.exp(-1j * s.omega * 1.3 * np.array([1.0, 0.0, 1.0]))) @ expm_unitary(h, 1.3)
                worst = max(worst, max_abs(u - oracle))
    return worst <= 1e-8, f"max deviation {worst:.2e} over {n ** 3} points"


def check_spin1_consistency(rng, quick) -> CheckResult:
    worst = 0.0
    for _ in range(5 if quick else 20):
        params = SpinParams(spin=1, B0=rng.uniform(0, 0.3), B1=rng.uniform(0, 1), omega=rng.uniform(0.5, 1.5))
        t = rng.uniform(0, 10)
        worst = max(worst, max_abs(full_rwa_integer(params, t).matrix - three_level_su3_propagator(params, t)))
    return worst <= 1e-9, f"full vs reduced {worst:.2e}"


def draw_near_resonant(rng: np.random.Generator) -> SpinParams:
    """Random point in the quadrupole-dominant regime with the drive near one transition."""
    spin = float(rng.choice([1.0, 1.5, 2.0, 2.5, 3.0]))
    b0 = rng.uniform(0.01, 0.3)
    targets = [m for m in np.arange(spin, 0.0, -1.0)]
    m = float(rng.choice(targets))
    if m == 0.5:
        omega = rng.uniform(0.8, 1.2)
    else:
        omega = max(0.8, (2 * m - 1) + b0 + rng.uniform(-0.3, 0.3))
    return SpinParams(spin=spin, B0=b0, B1=rng.uniform(0.05, 0.5), omega=omega)


def check_unitarity(rng, quick) -> CheckResult:
    draws = 10 if quick else 50
    worst = 0.0
    for _ in range(draws):
        params = draw_near_resonant(rng)
        t = rng.uniform(0, 20) * t_pi(params).value
        props = [ZeemanRwaPropagator(params), ReducedRwaPropagator(params), ChrwPropagator(params)]
        if params.is_integer:
            props.append(FullRwaPropagator(params))
        for prop in props:
            worst = max(worst, unitarity_residual(prop(t).matrix))
    return worst <= 1e-9, f"closed forms {worst:.2e} over {draws} draws"


def check_exact_unitarity(rng, quick) -> CheckResult:
    params = SpinParams(spin=3, B0=0.05, B1=0.5, omega=1.0)
    t = (2.0 if quick else 20.0) * t_pi(params).value
    u = RungeKuttaSolver(params).propagate([t])[0]
    res = unitarity_residual(u)
    return res <= 1e-7, f"RK4 residual {res:.2e} at t={t:.3g}"


def check_rk4_order(rng, quick) -> CheckResult:
    params = SpinParams(spin=1, B0=0.05, B1=0.5, omega=1.0)
    t = 2.0
    ref = RungeKuttaSolver(params, ExactSolverConfig(dt=0.04 / 8, renormalize=False)).propagate([t])[0]
    errs = []
    for dt in (0.04, 0.02):
        u = RungeKuttaSolver(params, ExactSolverConfig(dt=dt, renormalize=False)).propagate([t])[0]
        errs.append(max_abs(u - ref))
    ratio = errs[0] / errs[1]
    return 12.0 <= ratio <= 20.0, f"halving ratio {ratio:.2f}"


def check_bessel_and_xi(rng, quick) -> CheckResult:
    xs = np.linspace(-10.0, 10.0, 41)
    bessel = max(max(abs(bessel_j(0, x) - jv(0, x)), abs(bessel_j(1, x) - jv(1, x))) for x in xs)
    small = solve_xi(1.0, 1e-6, 1.0)
    fig = solve_xi(1.0, 0.5 * np.sqrt(6.0), 1.0)
    ok = bessel <= 1e-11 and abs(small.xi - 0.5) <= 1e-5 and fig.residual <= 1e-12
    return ok, f"series {bessel:.1e}, weak-drive xi {small.xi:.8f}, residual {fig.residual:.1e}"


def check_spin1_identities(rng, quick) -> CheckResult:
    grid = np.linspace(0.0, 2.0 * np.pi, 100)
    worst = max(max(spin1_frame_identity_residual(p), spin1_cross_identity_residual(1.3, p),
                    spin1_drive_identity_residual(1.3, p)) for p in grid)
    cp = solve_xi(1.0, 0.5 * np.sqrt(6.0), 1.0)
    harmonic = harmonic_average_residual(cp)
    return worst <= 1e-12 and harmonic <= 1e-10, f"identities {worst:.1e}, harmonic average {harmonic:.1e}"


def check_exact_self_trace(rng, quick) -> CheckResult:
    params = SpinParams(spin=2, B0=0.05, B1=0.5, omega=1.0)
    trace = trace_methods(params, ["exact"], 1.0, 4, InitialState(kind="basis", m=0.0))[0]
    dev = max(float(np.max(np.abs(trace.f_state - 1.0))), float(np.max(np.abs(trace.F_op - 1.0))))
    return dev <= 1e-12, f"self fidelity deviation {dev:.1e}"


CHECKS: List[Check] = [
    Check("linalg.eigensolver", check_eigensolver),
    Check("linalg.group_property", check_group_property),
    Check("spin_algebra.invariants", check_spin_algebra),
    Check("exact.spin_vector", check_spin_vector),
    Check("rwa_reduced.su3_closed_form", check_su3_closed_form),
    Check("rwa_full.spin1_consistency", check_spin1_consistency),
    Check("all.unitarity", check_unitarity),
    Check("exact.unitarity", check_exact_unitarity),
    Check("exact.rk4_order", check_rk4_order, quick=False),
    Check("chrw.bessel_and_xi", check_bessel_and_xi),
    Check("chrw.spin1_identities", check_spin1_identities),
    Check("fidelity.exact_self_trace", check_exact_self_trace),
]


def run_checks(seed: int = 0, quick: bool = False) -> pd.DataFrame:
    records = []
    for check in CHECKS:
        if quick and not check.quick:
            continue
        rng = np.random.default_rng(seed)
        started = time.perf_counter()
        try:
            passed, detail = check.run(rng, quick)
        except Exception as exc:
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        records.append({"check": check.name, "status": "PASS" if passed else "FAIL",
                        "detail": detail, "seconds": round(time.perf_counter() - started, 2)})
        logger.debug(f"{check.name}: {detail}")
    return pd.DataFrame(records, columns=["check", "status", "detail", "seconds"])


def cmd_selftest(seed: int = 0, quick: bool = False) -> int:
    report = run_checks(seed=seed, quick=quick)
    print(report.drop(columns=["seconds"]).to_string(index=False))
    failed = report[report["status"] == "FAIL"]
    if not failed.empty:
        for name in failed["check"]:
            logger.error(f"Invariant failed: {name}")
        return 1
    print(f"All {len(report)} checks passed.")
    return 0
