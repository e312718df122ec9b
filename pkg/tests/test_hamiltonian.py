import numpy as np
import pytest

from quasidark.hamiltonian import (
    FrequencyMismatch,
    HamiltonianError,
    SizeLimit,
    bosonization_report,
    build_circuit_qed,
    build_collective,
    build_effective,
    build_generator,
    build_microscopic,
    build_rotating_frame,
    collective_commutator_expectation,
    collective_map,
    commutator_residual,
    effective_block,
    effective_operator,
    frohlich_block,
    frohlich_consistency_error,
    microscopic_dims,
    mixing_rotation,
    rotating_frame_unitary,
)
from quasidark.hilbert import SpaceSpec, commutator, mode_operators
from quasidark.params import (
    MissingQubitFrequency,
    SystemParams,
    effective_constants,
    frohlich_coefficients,
    solve_resonant_qubit_frequency,
)

BASE = SystemParams.experimental()
SPEC3 = SpaceSpec(3, 3, 3)


def _resonant(Omega: float) -> SystemParams:
    return BASE.with_qubit_frequency(solve_resonant_qubit_frequency(BASE, Omega))


def test_circuit_qed_needs_qubit_frequency():
    with pytest.raises(MissingQubitFrequency):
        build_circuit_qed(BASE)
    h = build_circuit_qed(BASE.with_qubit_frequency(5846.0))
    assert h.is_hermitian()
    spec = SpaceSpec()
    e0 = spec.basis_state(q=1)
    g1 = spec.basis_state(n_cavity=1)
    assert h.element(g1, e0) == pytest.approx(20.0)


def test_circuit_qed_single_excitation_doublet():
    p = BASE.with_qubit_frequency(5846.0)
    spec = SpaceSpec()
    h = build_circuit_qed(p, spec)
    ground = h.element(spec.vacuum(), spec.vacuum()).real
    assert ground == pytest.approx(-0.5 * 5846.0)
    block = h.block([spec.index(q=1), spec.index(n_cavity=1)])
    levels = np.linalg.eigvalsh(block) - ground
    mean = 0.5 * (p.omega + 5846.0)
    split = np.hypot(0.5 * (p.omega - 5846.0), p.g)
    assert levels == pytest.approx([mean - split, mean + split], abs=1e-9)


def test_rotating_frame_removes_the_drive_phase():
    p = _resonant(12.0).with_drive_frequency(5000.0)
    h0, hi = build_rotating_frame(p, 12.0, SPEC3)
    n_c = mode_operators(SPEC3).C.dag() @ mode_operators(SPEC3).C
    for t in (0.0, 0.37, 2.5):
        u = rotating_frame_unitary(p, t, SPEC3)
        lab = build_collective(p, 12.0, t, SPEC3)
        rotated = u.dag() @ lab @ u + p.omega_f * n_c
        assert np.allclose(rotated.matrix, (h0 + hi).matrix, atol=1e-9)


def test_rotating_frame_checks_frequency_matching():
    p = SystemParams.experimental(omega_g=5846.0, omega_c=800.0, omega_f=5000.0)
    with pytest.raises(FrequencyMismatch):
        build_rotating_frame(p, 0.0)
    with pytest.raises(HamiltonianError):
        build_collective(BASE.with_qubit_frequency(5846.0), 0.0, 0.0)


def test_hamiltonian_parts_are_hermitian_and_generator_antihermitian():
    p = _resonant(20.0)
    h0, hi = build_rotating_frame(p, 20.0, SPEC3)
    assert h0.is_hermitian() and hi.is_hermitian()
    assert build_generator(p, 20.0, SPEC3).is_antihermitian()


@pytest.mark.parametrize("Omega", [0.0, 7.5, 15.0, 30.0])
def test_frohlich_condition_holds_on_the_physical_block(Omega):
    p = _resonant(Omega)
    h0, hi = build_rotating_frame(p, Omega, SPEC3)
    s = build_generator(p, Omega, SPEC3)
    assert commutator_residual(h0, hi, s) <= 1e-10


def test_frohlich_condition_for_random_parameters():
    rng = np.random.default_rng(7)
    for _ in range(100):
        omega_a = rng.uniform(5000.0, 6000.0)
        p = SystemParams(
            omega=omega_a + rng.uniform(150.0, 300.0),
            omega_a=omega_a,
            g=rng.uniform(1.0, 30.0),
            zeta=rng.uniform(1.0, 30.0),
            omega_g=omega_a + rng.uniform(-20.0, 20.0),
        )
        Omega = rng.uniform(0.0, 40.0)
        h0, hi = build_rotating_frame(p, Omega, SPEC3)
        assert commutator_residual(h0, hi, build_generator(p, Omega, SPEC3)) <= 1e-10


def test_perturbed_generator_leaves_a_residual():
    p = _resonant(15.0)
    eta1, eta2, eta3 = frohlich_coefficients(p, 15.0)
    h0, hi = build_rotating_frame(p, 15.0, SPEC3)
    s = build_generator(p, 15.0, SPEC3, etas=(eta1 + 1e-3, eta2, eta3))
    assert commutator_residual(h0, hi, s) > 1e-6


def test_residual_on_minimal_cutoffs_is_empty():
    # with two levels per mode the physical block holds no coupled pair
    p = _resonant(15.0)
    h0, hi = build_rotating_frame(p, 15.0, SpaceSpec())
    assert commutator_residual(h0, hi, build_generator(p, 15.0)) == 0.0


@pytest.mark.parametrize("Omega", [0.0, 10.0, 30.0])
def test_second_order_block_matches_effective_model(Omega):
    p = _resonant(Omega)
    assert frohlich_consistency_error(p, Omega) <= 1e-9


def test_second_order_block_off_resonance_keeps_qubit_detuning():
    p = BASE.with_qubit_frequency(5850.0)
    eff = effective_constants(p, 10.0)
    block = frohlich_block(p, 10.0, eff=eff) - eff.omega_D * np.eye(3)
    assert block[0, 0].real == pytest.approx(eff.detuning, abs=1e-8)
    assert frohlich_consistency_error(p, 10.0) <= 1e-9


def test_effective_operator_in_mixed_basis():
    eff = effective_constants(_resonant(30.0), 30.0)
    spec = SpaceSpec()
    h = effective_operator(eff, spec)
    assert h.is_hermitian()
    idx = [spec.index(q=1), spec.index(n_A=1), spec.index(n_C=1)]
    w = mixing_rotation(eff)
    assert np.allclose(w.T @ h.block(idx) @ w, effective_block(eff), atol=1e-12)
    # the vacuum is a zero-energy eigenstate
    assert np.allclose((h @ spec.vacuum()).amplitudes, 0.0)


def test_effective_model_conserves_excitations():
    p = _resonant(20.0)
    h = build_effective(p, 20.0, SPEC3)
    n_op = mode_operators(SPEC3).excitation_number()
    assert commutator(h, n_op).norm() == pytest.approx(0.0, abs=1e-12)


def test_microscopic_size_limits():
    assert microscopic_dims(3) == (2, 2, 3, 3, 3)
    with pytest.raises(SizeLimit):
        microscopic_dims(5)
    with pytest.raises(SizeLimit):
        collective_map(0)


def test_collective_map_is_an_isometry():
    cmap = collective_map(3, 2, 2)
    v = cmap.isometry
    assert np.allclose(v.conj().T @ v, np.eye(v.shape[1]))
    assert all(lab[2] + lab[3] <= 2 for lab in cmap.labels)
    single = cmap.sector(1)
    assert sorted(single.labels) == [(0, 0, 0, 1), (0, 0, 1, 0), (0, 1, 0, 0), (1, 0, 0, 0)]


def test_microscopic_model_is_hermitian():
    p = _resonant(10.0)
    assert build_microscopic(p, 2, 10.0).is_hermitian()


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_commutator_defect_is_two_over_n(n):
    assert 1.0 - collective_commutator_expectation(n) == pytest.approx(2.0 / n)


def test_bosonization_single_excitation_spectra_agree():
    p = _resonant(15.0)
    for n in range(1, 5):
        rep = bosonization_report(p, n, Omega=15.0, double=False)
        assert rep.single_excitation_error <= 1e-10
        assert rep.spectrum_embedding_error <= 1e-10
        assert rep.commutator_defect == pytest.approx(2.0 / n)


def test_bosonization_double_excitation_deviation_shrinks():
    p = _resonant(15.0)
    devs = [bosonization_report(p, n, Omega=15.0).double_excitation_deviation for n in (2, 3, 4)]
    assert all(d is not None for d in devs)
    assert devs[0] > devs[1] > devs[2]
    single = bosonization_report(p, 1, Omega=15.0)
    assert single.double_excitation_deviation is None and single.notes
