"""Quasi-dark state, bright modes and their numerical verification.

In the single-excitation basis {σ+|0>, B†|0>, D†|0>} the effective model is
[[0, g_m, 0], [g_m, Δ, Ω_d], [0, Ω_d, 0]]. The dark vector has no B
component; the two bright vectors mix B†|0> with the direction
u = (g_m σ+|0> + Ω_d D†|0>) / r, r = sqrt(g_m² + Ω_d²), and have energies
E± = (Δ ± Θ)/2.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Tuple

import numpy as np

from .hamiltonian import DEFAULT_SPACE, effective_operator
from .hilbert import SpaceSpec, StateVector
from .params import EffectiveParams


class SpectralError(Exception):
    pass


class UndefinedAngle(SpectralError):
    pass


class DegenerateBrightModes(SpectralError):
    pass


def _sign(x: float) -> float:
    return -1.0 if x < 0 else 1.0


@dataclass(frozen=True, eq=False)
class DarkStateDecomposition:
    theta: float
    dark: StateVector
    bright_plus: StateVector
    bright_minus: StateVector
    E_plus: float
    E_minus: float
    Theta: float
    Delta: float


def single_excitation_states(
    eff: EffectiveParams, spec: SpaceSpec = DEFAULT_SPACE
) -> Tuple[StateVector, StateVector, StateVector]:
    """(σ+|0>, B†|0>, D†|0>) with B = αA + βC and D = βA − αC."""
    e = spec.basis_state(q=1)
    a1 = spec.basis_state(n_A=1)
    c1 = spec.basis_state(n_C=1)
    return e, eff.alpha * a1 + eff.beta * c1, eff.beta * a1 - eff.alpha * c1


def dark_coefficients(eff: EffectiveParams) -> Tuple[float, float]:
    """(qubit, D-mode) amplitudes of the dark vector: (cosθ, −s·sinθ), s = sgn(g_m)·sgn(Ω_d)."""
    if eff.g_m == 0.0 and eff.Omega_d == 0.0:
        raise UndefinedAngle("mixing angle undefined for g_m = Omega_d = 0")
    s = _sign(eff.g_m) * _sign(eff.Omega_d)
    return math.cos(eff.theta), -s * math.sin(eff.theta)


def quasi_dark_state(eff: EffectiveParams, spec: SpaceSpec = DEFAULT_SPACE) -> StateVector:
    ce, cd = dark_coefficients(eff)
    e, _, d = single_excitation_states(eff, spec)
    return ce * e + cd * d


def leakage_amplitude(eff: EffectiveParams) -> float:
    """A-mode amplitude magnitude of the quasi-dark state, β·sinθ."""
    return eff.beta * math.sin(eff.theta)


def bright_energies(eff: EffectiveParams) -> Tuple[float, float]:
    return (0.5 * (eff.Delta + eff.Theta), 0.5 * (eff.Delta - eff.Theta))


def bright_energies_radical(eff: EffectiveParams) -> Tuple[float, float]:
    """E± = ±sqrt((Θ±Δ) r² / (Θ∓Δ)); undefined when Θ = |Δ|."""
    r2 = eff.g_m**2 + eff.Omega_d**2
    th, d = eff.Theta, eff.Delta
    if th - abs(d) <= 0.0:
        raise DegenerateBrightModes("Theta == |Delta|")
    return math.sqrt((th + d) * r2 / (th - d)), -math.sqrt((th - d) * r2 / (th + d))


def bright_modes(eff: EffectiveParams, spec: SpaceSpec = DEFAULT_SPACE) -> DarkStateDecomposition:
    if not eff.Theta > abs(eff.Delta):
        raise DegenerateBrightModes(f"Theta={eff.Theta} is not above |Delta|={abs(eff.Delta)}")
    e, b, d = single_excitation_states(eff, spec)
    r = eff.coupling_norm
    u = (eff.g_m / r) * e + (eff.Omega_d / r) * d
    th, delta = eff.Theta, eff.Delta
    cp = math.sqrt((th + delta) / (2.0 * th))
    cm = math.sqrt((th - delta) / (2.0 * th))
    e_plus, e_minus = bright_energies(eff)
    return DarkStateDecomposition(
        theta=eff.theta,
        dark=quasi_dark_state(eff, spec),
        bright_plus=cp * b + cm * u,
        bright_minus=cm * b - cp * u,
        E_plus=e_plus,
        E_minus=e_minus,
        Theta=th,
        Delta=delta,
    )


@dataclass
class EigensystemReport:
    Omega: float
    eigenvalue_error: float
    max_residual: float
    dark_residual: float
    max_overlap_deficit: float
    orthonormality_error: float
    radical_form_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return (
            max(
                self.eigenvalue_error,
                self.max_residual,
                self.max_overlap_deficit,
                self.orthonormality_error,
            )
            <= self.tolerance
        )

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def verify_eigensystem(
    eff: EffectiveParams,
    spec: SpaceSpec = DEFAULT_SPACE,
    *,
    theta_offset: float = 0.0,
    tolerance: float = 1e-9,
) -> EigensystemReport:
    """Compare the analytic eigensystem with a dense eigensolve of the single-excitation block.

    ``theta_offset`` rotates the analytic dark vector away from its exact
    angle, which makes its residual grow linearly.
    """
    h = effective_operator(eff, spec)
    dec = bright_modes(eff, spec)
    dark = dec.dark
    if theta_offset:
        ce, cd = dark_coefficients(eff)
        ang = math.atan2(-cd, ce) + theta_offset
        e, _, d = single_excitation_states(eff, spec)
        dark = math.cos(ang) * e - math.sin(ang) * d

    idx = [spec.index(q=1), spec.index(n_A=1), spec.index(n_C=1)]
    block = h.block(idx)
    evals, evecs = np.linalg.eigh(block)
    analytic = [(dec.E_minus, dec.bright_minus), (0.0, dark), (dec.E_plus, dec.bright_plus)]

    eig_err = float(np.max(np.abs(evals - np.array([e for e, _ in analytic]))))
    residuals = [float(np.linalg.norm((h @ v).amplitudes - e * v.amplitudes)) for e, v in analytic]
    deficits = [
        1.0 - abs(np.vdot(v.amplitudes[idx], evecs[:, k])) ** 2
        for k, (_, v) in enumerate(analytic)
    ]
    gram = np.array([[u.inner(v) for _, v in analytic] for _, u in analytic])
    ortho = float(np.max(np.abs(gram - np.eye(3))))
    try:
        rad = bright_energies_radical(eff)
        radical_err = max(abs(rad[0] - dec.E_plus), abs(rad[1] - dec.E_minus))
    except DegenerateBrightModes:
        radical_err = math.nan
    return EigensystemReport(
        Omega=eff.Omega,
        eigenvalue_error=eig_err,
        max_residual=max(residuals),
        dark_residual=residuals[1],
        max_overlap_deficit=float(max(deficits)),
        orthonormality_error=ortho,
        radical_form_error=float(radical_err),
        tolerance=tolerance,
    )
