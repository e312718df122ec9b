import math

import numpy as np
import pytest
from scipy.linalg import expm

from quasidark.dynamics import (
    DynamicsError,
    LinearHamiltonian,
    PropagationConfig,
    Schedule,
    compare_models,
    dress,
    logical_state,
    propagate,
    storage_sweep,
)
from quasidark.hilbert import SpaceSpec, StateVector
from quasidark.params import SystemParams, effective_constants, solve_resonant_qubit_frequency
from quasidark.spectral import quasi_dark_state

P = SystemParams.experimental()
RELAXED = PropagationConfig(rtol=1e-8, atol=1e-10)


def test_schedule_endpoints_and_rates():
    s = Schedule(duration=100.0)
    assert s.omega(0.0) == pytest.approx(30.0)
    assert s.omega(100.0) == pytest.approx(0.0)
    assert s.omega(50.0) == pytest.approx(15.0)
    assert s.omega_rate(0.0) == pytest.approx(0.0)
    assert s.omega_rate(50.0) == pytest.approx(-30.0 * math.pi / 200.0)
    lin = Schedule(duration=10.0, ramp="linear")
    assert np.allclose(lin.omega_rate(np.array([0.0, 3.0, 10.0])), -3.0)
    # clamped outside the ramp
    assert s.omega(150.0) == pytest.approx(0.0)
    assert len(s.times()) == 401


def test_schedule_reverse_and_validation():
    s = Schedule(duration=20.0).reversed()
    assert (s.omega(0.0), s.omega(20.0)) == (pytest.approx(0.0), pytest.approx(30.0))
    assert Schedule().with_duration(5.0).duration == 5.0
    with pytest.raises(DynamicsError):
        Schedule(ramp="gaussian")
    with pytest.raises(DynamicsError):
        Schedule(duration=0.0)
    with pytest.raises(DynamicsError):
        Schedule(n_samples=1)


def test_propagate_static_rabi_oscillation():
    h = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    psi0 = StateVector(np.array([1.0, 0.0]), (2,))
    ts = np.linspace(0.0, math.pi / 2, 11)
    traj = propagate(h, psi0, ts)
    assert abs(traj.final.amplitudes[1]) ** 2 == pytest.approx(1.0, abs=1e-9)
    expected = expm(-1j * h * ts[4]) @ psi0.amplitudes
    assert np.allclose(traj.states[4], expected, atol=1e-9)
    assert traj.norm_drift <= 1e-8


def test_eigenstate_populations_are_stationary():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = m + m.conj().T
    _, vecs = np.linalg.eigh(h)
    psi0 = StateVector(vecs[:, 1], (4,))
    traj = propagate(h, psi0, np.linspace(0.0, 5.0, 21))
    pops = np.abs(traj.states) ** 2
    assert np.allclose(pops, pops[0], atol=1e-8)


def test_energy_is_conserved_for_static_hamiltonian():
    rng = np.random.default_rng(12)
    m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    h = m + m.conj().T
    psi0 = StateVector(rng.normal(size=4) + 1j * rng.normal(size=4), (4,)).normalized()
    traj = propagate(h, psi0, np.linspace(0.0, 5.0, 21))
    energies = np.einsum("ti,ij,tj->t", traj.states.conj(), h, traj.states).real
    assert np.allclose(energies, energies[0], atol=1e-8)


def test_propagate_accepts_time_dependent_callables():
    h = np.diag([0.0, 2.0]).astype(complex)
    psi0 = StateVector(np.array([1.0, 1.0]) / math.sqrt(2.0), (2,))
    lin = LinearHamiltonian(np.zeros((2, 2)), [h], lambda t: np.array([1.0]))
    a = propagate(lin, psi0, [0.0, 1.0])
    b = propagate(lambda t: h, psi0, [0.0, 1.0])
    assert np.allclose(a.final.amplitudes, b.final.amplitudes, atol=1e-9)
    assert np.allclose(lin(0.3), h)


def test_propagate_rejects_bad_input():
    psi0 = StateVector(np.array([1.0, 0.0]), (2,))
    h = np.eye(2)
    with pytest.raises(DynamicsError):
        propagate(h, psi0, [0.0, 1.0, 0.5])
    with pytest.raises(DynamicsError):
        propagate(h, StateVector(np.array([2.0, 0.0]), (2,)), [0.0, 1.0])
    with pytest.raises(DynamicsError):
        propagate(h, psi0, [])
    single = propagate(h, psi0, [0.0])
    assert single.states.shape == (1, 2)


def test_resonance_track_follows_the_solver():
    s = Schedule(duration=10.0, n_samples=21)
    track = s.track(P)
    assert track.omega_g[0] == pytest.approx(solve_resonant_qubit_frequency(P, 30.0), abs=1e-7)
    assert track.omega_g[-1] == pytest.approx(solve_resonant_qubit_frequency(P, 0.0), abs=1e-7)
    assert track.omega_g_at(float(track.times[5])) == pytest.approx(track.omega_g[5])
    mid = 0.5 * (track.times[7] + track.times[8])
    eff = track.constants_at(float(mid))
    assert abs(eff.detuning) < 1e-3


def test_effective_storage_moves_excitation_into_c_mode():
    spec = SpaceSpec()
    traj = storage_sweep(P, Schedule(duration=100.0), spec.basis_state(q=1), "effective")
    pops = traj.populations()
    assert pops["pop_C"][-1] >= 0.99
    assert pops["pop_A"][-1] <= 0.01
    assert np.max(pops["pop_photon"]) == pytest.approx(0.0, abs=1e-14)
    assert traj.norm_drift <= 1e-8
    assert traj.observables["leakage"][0] == pytest.approx(0.0052, abs=3e-4)
    assert traj.observables["leakage"][-1] == pytest.approx(0.0, abs=1e-12)
    header, rows = traj.table()
    assert header[0] == "t" and len(rows) == 401


def test_dark_state_following_improves_with_duration():
    spec = SpaceSpec()
    wg = solve_resonant_qubit_frequency(P, 30.0)
    dark = quasi_dark_state(effective_constants(P.with_qubit_frequency(wg), 30.0), spec)

    def final_infidelity(T):
        traj = storage_sweep(P, Schedule(duration=T), dark, "effective")
        return 1.0 - traj.observables["dark_overlap"][-1]

    slow = final_infidelity(80.0)
    assert slow < final_infidelity(5.0)
    assert slow <= 5e-3


def test_bright_population_stays_below_adiabaticity_bound():
    spec = SpaceSpec()
    wg = solve_resonant_qubit_frequency(P, 30.0)
    dark = quasi_dark_state(effective_constants(P.with_qubit_frequency(wg), 30.0), spec)

    def run(T):
        traj = storage_sweep(P, Schedule(duration=T), dark, "effective")
        bright = 1.0 - traj.observables["dark_overlap"]
        return float(np.max(bright)), float(np.nanmax(traj.observables["adiabaticity"]))

    bright_fast, metric_fast = run(40.0)
    bright_slow, metric_slow = run(80.0)
    assert metric_fast == pytest.approx(2.0 * metric_slow, rel=1e-6)
    assert bright_fast > bright_slow
    # the metric bounds the nonadiabatic amplitude
    assert bright_fast <= metric_fast**2
    assert bright_slow <= metric_slow**2


def test_unknown_model_rejected():
    with pytest.raises(DynamicsError):
        storage_sweep(P, Schedule(duration=1.0), SpaceSpec().vacuum(), "exact")


def test_full_model_requires_empty_cavity_when_dressing():
    spec = SpaceSpec()
    with pytest.raises(DynamicsError):
        storage_sweep(P, Schedule(duration=1.0, n_samples=3), spec.basis_state(n_cavity=1), "full")


def test_dress_and_undress_are_inverse():
    spec = SpaceSpec(3, 3, 3)
    p = P.with_qubit_frequency(solve_resonant_qubit_frequency(P, 30.0))
    bare = spec.basis_state(q=1)
    dressed = dress(bare, p, 30.0)
    assert dressed.norm() == pytest.approx(1.0)
    # virtual photon admixture of order eta1
    photon = float(np.sum(np.abs(dressed.amplitudes) ** 2 * spec.occupations()[:, 1]))
    assert 1e-3 < photon < 0.02
    back = logical_state(dressed, p, 30.0)
    assert abs(back.inner(bare)) ** 2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.slow
def test_full_model_keeps_photons_virtual():
    spec = SpaceSpec()
    psi0 = (spec.vacuum() + spec.basis_state(q=1)).normalized()
    traj = storage_sweep(P, Schedule(duration=60.0), psi0, "full", config=RELAXED)
    assert np.max(traj.populations()["pop_photon"]) <= 0.012
    assert traj.norm_drift <= 1e-5


@pytest.mark.slow
def test_full_and_effective_models_agree():
    spec = SpaceSpec()
    psi0 = (spec.vacuum() + spec.basis_state(q=1)).normalized()
    cmp = compare_models(P, Schedule(duration=60.0), psi0, config=RELAXED)
    assert cmp.max_infidelity <= 0.03
    assert cmp.infidelity[0] == pytest.approx(0.0, abs=1e-9)


@pytest.mark.slow
def test_model_discrepancy_falls_with_weaker_couplings():
    def worst(p):
        spec = SpaceSpec()
        psi0 = (spec.vacuum() + spec.basis_state(q=1)).normalized()
        return compare_models(p, Schedule(duration=60.0), psi0, config=RELAXED).max_infidelity

    strong = worst(P)
    weak = worst(SystemParams.experimental(g=10.0, zeta=10.0))
    assert weak * 4.0 <= strong
