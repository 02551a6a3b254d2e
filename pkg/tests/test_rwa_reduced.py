import numpy as np
import pytest
from scipy.linalg import expm

from utils.errors import PreconditionError
from utils.exact_evolution import static_phases
from utils.fidelity import InitialState, trace_methods
from utils.linalg import max_abs, unitarity_residual
from utils.rwa_reduced import (MINUS, PLUS, BlockKind, ReducedRwaPropagator, assemble_reduced, block_spec,
                               central_b1_eff, quadrupole_frame, select_block, su3_closed_form,
                               three_level_effective_hamiltonian, three_level_su3_propagator,
                               two_level_block_propagator, two_level_effective_hamiltonian, two_level_tau_form,
                               zeeman_rwa_propagator)
from utils.spin_algebra import SpinParams


def test_select_central_block(fig2_params):
    spec = select_block(fig2_params)
    assert spec.kind == BlockKind.CENTRAL_THREE_LEVEL
    assert spec.M_target == 1.0
    assert spec.B1_eff == pytest.approx(np.sqrt(6.0) * 0.5)
    assert spec.warnings == []


def test_select_outer_pair():
    spec = select_block(SpinParams(spin=3, B0=0.05, B1=0.5, omega=5.05))
    assert spec.kind == BlockKind.TWO_LEVEL_PAIR
    assert spec.M_target == 3.0
    assert spec.omega0_plus == pytest.approx(5.05)
    assert spec.omega0_minus == pytest.approx(4.95)
    assert spec.B1_eff == pytest.approx(0.25 * np.sqrt(6.0))


def test_half_integer_tie_goes_to_central():
    spec = select_block(SpinParams(spin=2.5, B0=0.0, B1=0.1, omega=1.0))
    assert spec.kind == BlockKind.CENTRAL_TWO_LEVEL_HALF
    assert spec.M_target == 0.5
    assert spec.sides == (PLUS,)


def test_far_detuned_drive_warns():
    spec = select_block(SpinParams(spin=1, B0=0.05, B1=0.1, omega=4.0))
    assert any("doubtful" in w for w in spec.warnings)


def test_unknown_target_rejected(fig2_params):
    with pytest.raises(PreconditionError):
        block_spec(fig2_params, 4.0)
    with pytest.raises(PreconditionError):
        block_spec(fig2_params, 1.5)


def test_two_level_identity_at_zero():
    params = SpinParams(spin=3, B0=0.05, B1=0.5, omega=5.0)
    spec = block_spec(params, 3.0)
    for side in (PLUS, MINUS):
        assert max_abs(two_level_block_propagator(spec, side, params, 0.0) - np.eye(2)) <= 1e-15


def test_two_level_resonant_pi_pulse():
    params = SpinParams(spin=3, B0=0.05, B1=0.02, omega=5.05)
    spec = block_spec(params, 3.0)
    u = two_level_block_propagator(spec, PLUS, params, np.pi / spec.B1_eff)
    assert abs(u[1, 0]) == pytest.approx(1.0, abs=1e-12)
    assert abs(u[0, 0]) <= 1e-12


def test_two_level_matches_matrix_exponential():
    params = SpinParams(spin=2, B0=0.1, B1=0.3, omega=3.2)
    spec = block_spec(params, 2.0)
    t = 2.7
    for side, sign in ((PLUS, 1.0), (MINUS, -1.0)):
        h = two_level_effective_hamiltonian(spec, side, params.omega)
        frame = expm(-1j * sign * params.omega * t / 2.0 * np.diag([1.0, -1.0]))
        oracle = frame @ expm(-1j * h * t)
        assert max_abs(two_level_block_propagator(spec, side, params, t) - oracle) <= 1e-12


def test_central_three_level_rejects_two_level_request(fig2_params):
    spec = select_block(fig2_params)
    with pytest.raises(PreconditionError):
        two_level_block_propagator(spec, MINUS, fig2_params, 1.0)


@pytest.mark.parametrize("t", [0.0, 0.3, 4.1, 17.0])
def test_tau_form_reproduces_operator_product(t):
    omega0, b1_eff, omega = 3.05, 0.4, 2.9
    spec = block_spec(SpinParams(spin=2, B0=0.05, B1=0.4, omega=omega), 2.0)
    spec.omega0_plus, spec.B1_eff = omega0, b1_eff
    tau = two_level_tau_form(omega0, b1_eff, omega, t)
    direct = two_level_block_propagator(spec, PLUS, SpinParams(spin=2, B0=0.05, B1=0.4, omega=omega), t)
    assert max_abs(tau.matrix() - direct) <= 1e-12
    assert tau.unitarity_defect() <= 1e-10


def test_tau_form_at_resonance_without_drive():
    tau = two_level_tau_form(1.0, 0.0, 1.0, 2.0)
    assert tau.Omega == 0.0
    assert tau.unitarity_defect() <= 1e-12


def test_su3_normalisation_and_eigenvalues(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    h = 0.5 * (a + a.conj().T)
    form = su3_closed_form(h)
    assert abs(np.trace(form.Hcal)) <= 1e-12
    assert np.trace(form.Hcal @ form.Hcal).real == pytest.approx(2.0, abs=1e-12)
    assert np.allclose(np.sort(form.eigenvalues), np.linalg.eigvalsh(form.Hcal), atol=1e-10)
    assert max_abs(form.evolve(1.3) - expm(-1j * h * 1.3)) <= 1e-9


def test_su3_scalar_generator():
    params = SpinParams(spin=1, B0=0.0, B1=0.0, omega=1.0)
    u = three_level_su3_propagator(params, 2.0)
    assert max_abs(u - np.diag(np.exp(-1j * 2.0 * np.array([1.0, 0.0, 1.0])))) <= 1e-14


def test_su3_degenerate_falls_back_to_spectral():
    form = su3_closed_form(np.diag([1.0, 1.0, 0.0]))
    assert form.degenerate
    assert max_abs(form.evolve(0.8) - np.diag(np.exp(-1j * 0.8 * np.array([1.0, 1.0, 0.0])))) <= 1e-12


def test_su3_rejects_wrong_shape():
    with pytest.raises(PreconditionError):
        su3_closed_form(np.eye(2))


def test_three_level_matches_oracle(fig2_params):
    params = fig2_params.with_updates(spin=1)
    for t in (0.5, 1.0, 7.3):
        h = three_level_effective_hamiltonian(params, central_b1_eff(params))
        oracle = quadrupole_frame(params.omega, t) @ expm(-1j * h * t)
        assert max_abs(three_level_su3_propagator(params, t) - oracle) <= 1e-9


def test_three_level_grid_against_oracle():
    worst = 0.0
    for b0 in np.linspace(0.0, 0.5, 5):
        for b1 in np.linspace(0.05, 1.0, 5):
            for detuning in np.linspace(-0.5, 0.5, 5):
                params = SpinParams(spin=1, B0=b0, B1=b1, omega=1.0 + detuning)
                h = three_level_effective_hamiltonian(params, central_b1_eff(params))
                oracle = quadrupole_frame(params.omega, 1.3) @ expm(-1j * h * 1.3)
                worst = max(worst, max_abs(three_level_su3_propagator(params, 1.3) - oracle))
    assert worst <= 1e-8


def test_three_level_half_integer_rejected():
    with pytest.raises(PreconditionError):
        three_level_su3_propagator(SpinParams(spin=1.5, B1=0.1), 1.0)


def test_undriven_assembly_is_static_phases():
    params = SpinParams(spin=3, B0=0.05, B1=0.0, omega=5.05)
    spec = select_block(params)
    u = assemble_reduced(params, spec, 2.2).matrix
    assert max_abs(u - np.diag(static_phases(params, 2.2))) <= 1e-12


def test_spin_one_assembly_is_the_block(fig2_params):
    params = fig2_params.with_updates(spin=1)
    u = ReducedRwaPropagator(params)(3.0).matrix
    assert max_abs(u - three_level_su3_propagator(params, 3.0)) <= 1e-14


def test_outer_pair_assembly_structure():
    params = SpinParams(spin=3, B0=0.05, B1=0.5, omega=5.0)
    prop = ReducedRwaPropagator(params)(0.7)
    u = prop.matrix
    assert prop.method == "rwa-reduced"
    assert unitarity_residual(u) <= 1e-9
    phases = static_phases(params, 0.7)
    for k in (2, 3, 4):
        expected = np.zeros(7, dtype=complex)
        expected[k] = phases[k]
        assert max_abs(u[:, k] - expected) <= 1e-14
    assert abs(u[1, 0]) > 1e-3 and abs(u[6, 5]) > 1e-3
    assert u[0, 5] == 0.0


def test_m_target_override(fig2_params):
    prop = ReducedRwaPropagator(fig2_params, m_target=2.0)
    assert prop.spec.kind == BlockKind.TWO_LEVEL_PAIR


@pytest.mark.parametrize("spin", [1, 3])
def test_weak_drive_reduced_methods_track_exact(spin):
    params = SpinParams(spin=spin, B0=0.05, B1=0.01, omega=1.05)
    traces = trace_methods(params, ["rwa-reduced", "rwa-full", "chrw"], 1.0, 20, InitialState("basis", 0.0))
    for trace in traces:
        assert not trace.failed, trace.error
        assert np.min(trace.f_state) >= 0.999


def test_zeeman_rwa_undriven_and_identity():
    params = SpinParams(spin=2, B0=0.3, B1=0.0, omega=0.3)
    assert max_abs(zeeman_rwa_propagator(params, 0.0).matrix - np.eye(5)) <= 1e-15
    u = zeeman_rwa_propagator(params, 1.7).matrix
    assert max_abs(u - np.diag(static_phases(params, 1.7))) <= 1e-12


def test_zeeman_rwa_spin_half_rabi():
    params = SpinParams(spin=0.5, Q=1.0, B0=1.0, B1=0.05, omega=1.0)
    trace = trace_methods(params, ["rwa-zeeman"], 1.0, 10, InitialState("basis", 0.5))[0]
    assert not trace.failed
    assert np.min(trace.f_state) >= 0.999
