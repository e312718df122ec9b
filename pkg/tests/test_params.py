import math

import numpy as np
import pytest

from quasidark.params import (
    DegenerateMixing,
    MissingQubitFrequency,
    NoConvergence,
    ParamsError,
    RootOutOfBracket,
    SingularDetuning,
    SystemParams,
    UndefinedMetric,
    adiabaticity_estimate,
    adiabaticity_metric,
    effective_constants,
    frohlich_coefficients,
    mode_mixing,
    resonant_constants,
    solve_resonant_qubit_frequency,
    track_resonance,
    validity_report,
)

P = SystemParams.experimental()


def test_experimental_defaults():
    assert (P.g, P.zeta, P.omega, P.omega_a) == (20.0, 20.0, 6044.0, 5844.0)
    assert P.omega_g is None
    with pytest.raises(MissingQubitFrequency):
        P.qubit_frequency()


def test_system_params_validation():
    with pytest.raises(ParamsError):
        SystemParams(omega=6044.0, omega_a=5844.0, g=-1.0, zeta=20.0)
    with pytest.raises(ParamsError):
        SystemParams(omega=math.nan, omega_a=5844.0, g=20.0, zeta=20.0)
    with pytest.raises(ParamsError):
        SystemParams(omega=6044.0, omega_a=5844.0, g=20.0, zeta=20.0, n_molecules=0)
    with pytest.raises(ParamsError):
        SystemParams(omega=6044.0, omega_a=5844.0, g=20.0, zeta=20.0, xi=7.0, n_molecules=4)


def test_single_molecule_coupling_and_drive_frequency():
    p = SystemParams.from_single_molecule(omega=6044.0, omega_a=5844.0, g=20.0, xi=10.0, n_molecules=4)
    assert p.zeta == pytest.approx(20.0)
    assert p.single_molecule_coupling() == pytest.approx(10.0)
    assert P.single_molecule_coupling(16) == pytest.approx(5.0)
    driven = P.with_drive_frequency(5000.0)
    assert driven.omega_c == pytest.approx(844.0)
    assert driven.frequency_matched()
    assert not SystemParams(6044.0, 5844.0, 20.0, 20.0, omega_c=800.0, omega_f=5000.0).frequency_matched()


def test_params_dict_roundtrip():
    p = P.with_qubit_frequency(5846.0)
    assert SystemParams.from_dict(p.to_dict()) == p


def test_frohlich_coefficients_formulae():
    p = P.with_qubit_frequency(5846.0)
    eta1, eta2, eta3 = frohlich_coefficients(p, 30.0)
    assert eta1 == pytest.approx(20.0 / 198.0)
    assert eta2 == pytest.approx(20.0 * 200.0 / (200.0**2 - 30.0**2))
    assert eta3 == pytest.approx(20.0 * 30.0 / (200.0**2 - 30.0**2))
    assert frohlich_coefficients(p, 0.0)[2] == 0.0


def test_frohlich_coefficients_singular():
    with pytest.raises(SingularDetuning):
        frohlich_coefficients(P.with_qubit_frequency(6044.0), 0.0)
    with pytest.raises(SingularDetuning):
        frohlich_coefficients(P.with_qubit_frequency(5846.0), 200.0)


def test_mode_mixing_normalised_and_degenerate():
    a, b = mode_mixing((0.1, 0.11, 0.015), P)
    assert a * a + b * b == pytest.approx(1.0, abs=1e-14)
    assert a > 0 and b > 0
    a0, b0 = mode_mixing((0.1, 0.1, 0.0), P)
    assert (a0, b0) == (pytest.approx(1.0), pytest.approx(0.0))
    with pytest.raises(DegenerateMixing):
        mode_mixing((0.0, 0.0, 0.0), P)


def test_resonance_at_zero_field():
    wg = solve_resonant_qubit_frequency(P, 0.0)
    assert P.omega - wg == pytest.approx(197.98, abs=0.05)
    eff = effective_constants(P.with_qubit_frequency(wg), 0.0)
    assert abs(eff.detuning) < 1e-6
    assert eff.theta == pytest.approx(math.pi / 2, abs=1e-12)
    assert eff.Omega_d == pytest.approx(0.0, abs=1e-12)
    assert (eff.alpha, eff.beta) == (pytest.approx(1.0), pytest.approx(0.0))
    assert abs(eff.g_m) == pytest.approx(2.010, abs=0.005)
    assert eff.leakage == pytest.approx(0.0, abs=1e-15)


def test_resonance_at_strong_field():
    eff = resonant_constants(P, 30.0)
    assert P.omega - eff.omega_g == pytest.approx(202.6, abs=0.1)
    assert eff.theta == pytest.approx(0.068, abs=0.003)
    assert eff.leakage == pytest.approx(0.0052, abs=0.0003)
    assert eff.Omega_d < 0 and eff.g_m < 0
    assert eff.Theta == pytest.approx(math.sqrt(eff.Delta**2 + 4 * (eff.g_m**2 + eff.Omega_d**2)))


def test_effective_coupling_nearly_field_independent():
    omegas = np.linspace(0.0, 30.0, 31)
    wgs = track_resonance(P, omegas)
    g_m = [abs(effective_constants(P.with_qubit_frequency(w), om).g_m) for w, om in zip(wgs, omegas)]
    assert min(g_m) >= 2.00 and max(g_m) <= 2.03


def test_theta_monotone_along_sweep():
    omegas = np.linspace(0.0, 30.0, 16)
    wgs = track_resonance(P, omegas)
    thetas = [effective_constants(P.with_qubit_frequency(w), om).theta for w, om in zip(wgs, omegas)]
    assert all(b < a for a, b in zip(thetas, thetas[1:]))


def test_seeded_solve_matches_cold_solve():
    cold = solve_resonant_qubit_frequency(P, 17.0)
    seeded = solve_resonant_qubit_frequency(P, 17.0, seed=solve_resonant_qubit_frequency(P, 16.0))
    assert seeded == pytest.approx(cold, abs=1e-7)


def test_bracketed_fallback_agrees_with_fixed_point():
    fixed = solve_resonant_qubit_frequency(P, 10.0)
    # zero iterations forces the bracketed solver
    fallback = solve_resonant_qubit_frequency(P, 10.0, max_iter=1, damping=1e-6)
    assert fallback == pytest.approx(fixed, abs=1e-6)


def test_solver_errors():
    with pytest.raises(NoConvergence):
        solve_resonant_qubit_frequency(P, 10.0, max_iter=1, damping=1e-6, fallback=False)
    with pytest.raises(RootOutOfBracket):
        solve_resonant_qubit_frequency(P, 10.0, bracket=(300.0, 400.0))


def test_resonance_with_vanishing_qubit_coupling():
    p = SystemParams.experimental(g=0.0)
    wg = solve_resonant_qubit_frequency(p, 10.0)
    assert math.isfinite(wg)
    with pytest.raises(DegenerateMixing):
        effective_constants(SystemParams.experimental(g=0.0, zeta=0.0).with_qubit_frequency(5846.0), 0.0)


def test_adiabaticity_metric_scales_with_rate():
    eff = resonant_constants(P, 15.0)
    p = P.with_qubit_frequency(eff.omega_g)
    slow = adiabaticity_metric(p, 15.0, 0.1, eff=eff)
    fast = adiabaticity_metric(p, 15.0, 1.0, eff=eff)
    assert fast == pytest.approx(10.0 * slow)
    assert adiabaticity_metric(p, 15.0, 0.0, eff=eff) == 0.0


def test_adiabaticity_substitutes_magnitudes_for_negative_sum():
    eff = resonant_constants(P, 15.0)
    est = adiabaticity_estimate(P.with_qubit_frequency(eff.omega_g), 15.0, 0.3, eff=eff)
    # g_m and Omega_d are both negative on the sweep
    assert est.magnitude_substituted
    assert est.value > 0


def test_adiabaticity_undefined_when_gap_closes():
    eff = resonant_constants(P, 0.0)
    closed = eff.__class__(**{**eff.to_dict(), "g_m": 0.0, "Omega_d": 0.0, "Theta": abs(eff.Delta)})
    with pytest.raises(UndefinedMetric):
        adiabaticity_estimate(P, 0.0, 0.3, eff=closed)


def test_validity_report_flags():
    p = P.with_qubit_frequency(solve_resonant_qubit_frequency(P, 30.0))
    rep = validity_report(p, 30.0)
    assert rep.ok
    assert set(rep.magnitudes) == {"eta1", "eta2", "eta3"}
    strict = validity_report(p, 30.0, threshold=0.01)
    assert not strict.ok and not strict.passed["eta1"]
    singular = validity_report(P.with_qubit_frequency(6044.0), 0.0)
    assert singular.singular and not singular.ok
    d = rep.to_dict()
    assert d["ok"] is True and d["notes"]


def test_validity_report_mentions_commutator_defect():
    p = SystemParams.experimental(n_molecules=4, omega_g=5846.0)
    notes = " ".join(validity_report(p, 0.0).notes)
    assert "2/N" in notes
