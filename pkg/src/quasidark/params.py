"""Closed-form parameter algebra for the qubit / cavity / molecular-ensemble system.

All frequencies are angular frequencies in MHz (rad/µs) with hbar = 1.
Time is measured in µs, so a rate such as dOmega/dt is in MHz².

The functions here are pure: they take a SystemParams (and the control Rabi
frequency Omega) and return derived quantities. The resonance solver keeps
the qubit on the two-photon resonance omega_g' = omega_D while Omega changes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .observability import logger, metrics

DEFAULT_EPSILON = 1e-9
DEFAULT_VALIDITY_THRESHOLD = 0.2
DEFAULT_RESONANCE_TOL = 1e-9
DEFAULT_MAX_ITER = 200
DEFAULT_DAMPING = 0.9
DEFAULT_BRACKET_MARGIN = 50.0

LOW_EXCITATION_NOTE = (
    "collective A/C modes are bosonic only in the large-N, low-excitation limit; "
    "the single-excitation protocol is exact, higher sectors deviate as O(1/N)"
)


class ParamsError(Exception):
    pass


class SingularDetuning(ParamsError):
    pass


class DegenerateMixing(ParamsError):
    pass


class NoConvergence(ParamsError):
    pass


class RootOutOfBracket(ParamsError):
    pass


class UndefinedMetric(ParamsError):
    pass


class MissingQubitFrequency(ParamsError):
    pass


@dataclass(frozen=True)
class SystemParams:
    """Physical constants of the hybrid system (MHz).

    omega_g may be left unset and filled in by the resonance solver.
    omega_c / omega_f are optional; when both are present the
    frequency-matching condition omega_a = omega_c + omega_f is checked by
    the rotating-frame builders.
    """

    omega: float
    omega_a: float
    g: float
    zeta: float
    omega_g: Optional[float] = None
    omega_c: Optional[float] = None
    omega_f: Optional[float] = None
    xi: Optional[float] = None
    n_molecules: Optional[int] = None

    def __post_init__(self) -> None:
        for name in ("omega", "omega_a", "g", "zeta", "omega_g", "omega_c", "omega_f", "xi"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ParamsError(f"{name} must be finite, got {v}")
        if self.g < 0 or self.zeta < 0:
            raise ParamsError("couplings g and zeta must be non-negative")
        if self.n_molecules is not None and self.n_molecules < 1:
            raise ParamsError("n_molecules must be a positive integer")
        if self.xi is not None and self.n_molecules is not None:
            collective = self.xi * math.sqrt(self.n_molecules)
            if abs(collective - self.zeta) > 1e-9 * max(1.0, self.zeta):
                raise ParamsError(
                    f"zeta = {self.zeta} does not match xi * sqrt(n_molecules) = {collective}"
                )

    @classmethod
    def experimental(cls, **overrides: Any) -> "SystemParams":
        """Stripline / charge-qubit / polar-molecule values: g = zeta = 20 MHz,
        omega = 6044 MHz, omega_a = 5844 MHz."""
        base: Dict[str, Any] = {"omega": 6044.0, "omega_a": 5844.0, "g": 20.0, "zeta": 20.0}
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_single_molecule(
        cls, *, omega: float, omega_a: float, g: float, xi: float, n_molecules: int, **kw: Any
    ) -> "SystemParams":
        return cls(
            omega=omega,
            omega_a=omega_a,
            g=g,
            zeta=xi * math.sqrt(n_molecules),
            xi=xi,
            n_molecules=n_molecules,
            **kw,
        )

    def qubit_frequency(self) -> float:
        if self.omega_g is None:
            raise MissingQubitFrequency(
                "omega_g is not set; solve the two-photon resonance first"
            )
        return self.omega_g

    def with_qubit_frequency(self, omega_g: float) -> "SystemParams":
        return replace(self, omega_g=float(omega_g))

    def with_drive_frequency(self, omega_f: float) -> "SystemParams":
        """Set omega_f and the matching metastable frequency omega_c = omega_a - omega_f."""
        return replace(self, omega_f=float(omega_f), omega_c=self.omega_a - float(omega_f))

    def frequency_matched(self, tol: float = 1e-9) -> bool:
        if self.omega_c is None or self.omega_f is None:
            return True
        return abs(self.omega_a - (self.omega_c + self.omega_f)) <= tol

    def single_molecule_coupling(self, n_molecules: Optional[int] = None) -> float:
        n = n_molecules or self.n_molecules
        if self.xi is not None and n in (None, self.n_molecules):
            return self.xi
        if not n:
            raise ParamsError("n_molecules is required for the single-molecule coupling")
        return self.zeta / math.sqrt(n)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "SystemParams":
        return cls(**d)


@dataclass(frozen=True)
class EffectiveParams:
    """Derived constants of the effective qubit / D-mode / B-mode model."""

    Omega: float
    omega_g: float
    eta1: float
    eta2: float
    eta3: float
    alpha: float
    beta: float
    g_m: float
    omega_g_prime: float
    omega_B: float
    omega_D: float
    Omega_d: float
    Delta: float
    Theta: float
    theta: float

    @property
    def etas(self) -> Tuple[float, float, float]:
        return (self.eta1, self.eta2, self.eta3)

    @property
    def coupling_norm(self) -> float:
        """sqrt(g_m² + Omega_d²)."""
        return math.hypot(self.g_m, self.Omega_d)

    @property
    def detuning(self) -> float:
        """Qubit detuning from the two-photon resonance, omega_g' - omega_D."""
        return self.omega_g_prime - self.omega_D

    @property
    def leakage(self) -> float:
        """Amplitude of the excited molecular level in the quasi-dark state."""
        return self.beta * math.sin(self.theta)

    def is_perturbative(self, threshold: float = DEFAULT_VALIDITY_THRESHOLD) -> bool:
        return all(abs(e) <= threshold for e in self.etas)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class AdiabaticityEstimate:
    value: float
    magnitude_substituted: bool = False


@dataclass
class ValidityReport:
    Omega: float
    threshold: float
    magnitudes: Dict[str, float] = field(default_factory=dict)
    passed: Dict[str, bool] = field(default_factory=dict)
    singular: bool = False
    notes: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.singular and all(self.passed.values())

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def frohlich_coefficients(
    p: SystemParams, Omega: float, *, epsilon: float = DEFAULT_EPSILON
) -> Tuple[float, float, float]:
    """Return (eta1, eta2, eta3) of the generator that removes the cavity coupling."""
    x = p.omega - p.qubit_frequency()
    d = p.omega - p.omega_a
    den = d * d - Omega * Omega
    if abs(x) < epsilon:
        raise SingularDetuning(f"cavity-qubit detuning {x} below epsilon {epsilon}")
    if abs(den) < epsilon:
        raise SingularDetuning(
            f"(omega - omega_a)^2 - Omega^2 = {den} below epsilon {epsilon} at Omega={Omega}"
        )
    return (p.g / x, p.zeta * d / den, p.zeta * Omega / den)


def mode_mixing(e: Sequence[float], p: SystemParams) -> Tuple[float, float]:
    """Return (alpha, beta) defining B = alpha A + beta C and D = beta A - alpha C."""
    eta1, eta2, eta3 = e
    x = eta2 * p.g + eta1 * p.zeta
    y = eta3 * p.g
    n = math.hypot(x, y)
    if not n > 0.0:
        raise DegenerateMixing("mode mixing undefined: qubit does not couple to the ensemble")
    return (x / n, y / n)


def _decoupled_mixing(p: SystemParams, Omega: float, epsilon: float) -> Tuple[float, float]:
    # g -> 0+ limit: alpha ∝ eta2 + zeta/(omega - omega_g), beta ∝ eta3
    _, eta2, eta3 = frohlich_coefficients(p, Omega, epsilon=epsilon)
    x = eta2 + p.zeta / (p.omega - p.qubit_frequency())
    n = math.hypot(x, eta3)
    if not n > 0.0:
        return (1.0, 0.0)
    return (x / n, eta3 / n)


def _dressed_levels(
    p: SystemParams, Omega: float, etas: Tuple[float, float, float], alpha: float, beta: float
) -> Tuple[float, float, float]:
    _, eta2, eta3 = etas
    drive = Omega - 0.5 * eta3 * p.zeta
    omega_B = p.omega_a - eta2 * p.zeta * alpha**2 + 2.0 * drive * alpha * beta
    omega_D = p.omega_a - eta2 * p.zeta * beta**2 - 2.0 * drive * alpha * beta
    Omega_d = -eta2 * p.zeta * alpha * beta + drive * (beta**2 - alpha**2)
    return omega_B, omega_D, Omega_d


def effective_constants(
    p: SystemParams, Omega: float, *, epsilon: float = DEFAULT_EPSILON
) -> EffectiveParams:
    etas = frohlich_coefficients(p, Omega, epsilon=epsilon)
    alpha, beta = mode_mixing(etas, p)
    eta1, eta2, eta3 = etas
    g_m = -0.5 * math.hypot(eta3 * p.g, eta2 * p.g + eta1 * p.zeta)
    omega_B, omega_D, Omega_d = _dressed_levels(p, Omega, etas, alpha, beta)
    Delta = omega_B - omega_D
    Theta = math.sqrt(Delta * Delta + 4.0 * (g_m * g_m + Omega_d * Omega_d))
    omega_g = p.qubit_frequency()
    return EffectiveParams(
        Omega=float(Omega),
        omega_g=omega_g,
        eta1=eta1,
        eta2=eta2,
        eta3=eta3,
        alpha=alpha,
        beta=beta,
        g_m=g_m,
        omega_g_prime=omega_g - eta1 * p.g,
        omega_B=omega_B,
        omega_D=omega_D,
        Omega_d=Omega_d,
        Delta=Delta,
        Theta=Theta,
        theta=math.atan2(abs(g_m), abs(Omega_d)),
    )


def _dark_mode_frequency(p: SystemParams, Omega: float, epsilon: float) -> float:
    etas = frohlich_coefficients(p, Omega, epsilon=epsilon)
    if p.g == 0.0:
        alpha, beta = _decoupled_mixing(p, Omega, epsilon)
    else:
        alpha, beta = mode_mixing(etas, p)
    return _dressed_levels(p, Omega, etas, alpha, beta)[1]


def _resonance_residual(p: SystemParams, Omega: float, x: float, epsilon: float) -> float:
    # omega_g' - omega_D as a function of the cavity-qubit detuning x
    q = p.with_qubit_frequency(p.omega - x)
    return (p.omega - x) - p.g * p.g / x - _dark_mode_frequency(q, Omega, epsilon)


def _default_bracket(p: SystemParams, Omega: float, margin: float, epsilon: float) -> Tuple[float, float]:
    d = p.omega - p.omega_a
    s = 1.0 if d >= 0 else -1.0
    # the large-detuning root lies above the parabola vertex x = g
    lo = max(p.g, 10.0 * epsilon)
    hi = abs(d) + abs(Omega) + margin
    return (s * lo, s * hi) if s > 0 else (s * hi, s * lo)


def solve_resonant_qubit_frequency(
    p: SystemParams,
    Omega: float,
    *,
    seed: Optional[float] = None,
    tol: float = DEFAULT_RESONANCE_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    damping: float = DEFAULT_DAMPING,
    bracket: Optional[Tuple[float, float]] = None,
    bracket_margin: float = DEFAULT_BRACKET_MARGIN,
    fallback: bool = True,
    epsilon: float = DEFAULT_EPSILON,
) -> float:
    """Return the qubit frequency omega_g on the two-photon resonance.

    Solves omega_g - g²/(omega - omega_g) = omega_D(Omega, omega_g) by damped
    fixed-point iteration, seeded either with ``seed`` (a neighbouring
    solution, for continuation) or with the large root of the Omega = 0
    quadratic. Falls back to bracketed root finding on the detuning
    x = omega - omega_g when the iteration fails.
    """
    metrics.inc("resonance_solves")
    d = p.omega - p.omega_a
    if seed is not None:
        x = p.omega - seed
    else:
        disc = d * d / 4.0 - p.g * p.g
        x = d / 2.0 + math.copysign(math.sqrt(disc), d) if disc >= 0 else d
    lo, hi = bracket or _default_bracket(p, Omega, bracket_margin, epsilon)

    reason = "max_iter"
    for it in range(1, max_iter + 1):
        try:
            wg = p.omega - x
            target = _dark_mode_frequency(p.with_qubit_frequency(wg), Omega, epsilon) + p.g * p.g / x
        except ParamsError as exc:
            reason = str(exc)
            break
        step = damping * (target - wg)
        x_new = x - step
        if not math.isfinite(x_new) or not lo <= x_new <= hi:
            reason = f"iterate left bracket ({lo}, {hi})"
            break
        x = x_new
        if abs(step) < tol:
            logger.info("resonance_solved", Omega=Omega, detuning=x, iterations=it)
            return p.omega - x

    if not fallback:
        raise NoConvergence(f"fixed-point iteration failed at Omega={Omega}: {reason}")

    metrics.inc("resonance_fallbacks")
    logger.warning("resonance_bisection_fallback", Omega=Omega, reason=reason)
    try:
        root, res = optimize.brentq(
            lambda xx: _resonance_residual(p, Omega, xx, epsilon),
            lo,
            hi,
            xtol=tol,
            maxiter=max_iter,
            full_output=True,
            disp=False,
        )
    except ValueError as exc:
        raise RootOutOfBracket(
            f"no resonance with detuning in ({lo}, {hi}) at Omega={Omega}: {exc}"
        ) from exc
    except ParamsError as exc:
        raise RootOutOfBracket(str(exc)) from exc
    if not res.converged:
        raise NoConvergence(f"bracketed solve did not converge at Omega={Omega}: {res.flag}")
    return p.omega - root


def track_resonance(
    p: SystemParams, omegas: Sequence[float], *, tol: float = DEFAULT_RESONANCE_TOL, **kw: Any
) -> np.ndarray:
    """Continuation along a sweep: each point is seeded with its neighbour's solution."""
    out = np.empty(len(omegas))
    seed: Optional[float] = None
    for i, Om in enumerate(omegas):
        seed = solve_resonant_qubit_frequency(p, float(Om), seed=seed, tol=tol, **kw)
        out[i] = seed
    return out


def resonant_constants(
    p: SystemParams, Omega: float, *, tol: float = DEFAULT_RESONANCE_TOL
) -> EffectiveParams:
    wg = solve_resonant_qubit_frequency(p, Omega, tol=tol)
    return effective_constants(p.with_qubit_frequency(wg), Omega)


def adiabaticity_estimate(
    p: SystemParams, Omega: float, dOmega_dt: float, *, eff: Optional[EffectiveParams] = None
) -> AdiabaticityEstimate:
    eff = eff or effective_constants(p, Omega)
    gm = abs(eff.g_m)
    gap = eff.Theta - abs(eff.Delta)
    if not gap > 0.0:
        raise UndefinedMetric(f"Theta == |Delta| at Omega={Omega}")
    s = eff.g_m + eff.Omega_d
    substituted = False
    if not s > 0.0:
        s = gm + abs(eff.Omega_d)
        substituted = True
    if not s > 0.0:
        raise UndefinedMetric(f"g_m + Omega_d vanishes at Omega={Omega}")
    value = gm * (eff.Theta + abs(eff.Delta)) * abs(dOmega_dt) / math.sqrt(eff.Theta * gap * s**3)
    return AdiabaticityEstimate(value=value, magnitude_substituted=substituted)


def adiabaticity_metric(
    p: SystemParams, Omega: float, dOmega_dt: float, *, eff: Optional[EffectiveParams] = None
) -> float:
    return adiabaticity_estimate(p, Omega, dOmega_dt, eff=eff).value


def validity_report(
    p: SystemParams,
    Omega: float,
    *,
    threshold: float = DEFAULT_VALIDITY_THRESHOLD,
    epsilon: float = DEFAULT_EPSILON,
) -> ValidityReport:
    report = ValidityReport(Omega=float(Omega), threshold=threshold)
    try:
        etas = frohlich_coefficients(p, Omega, epsilon=epsilon)
    except SingularDetuning as exc:
        report.singular = True
        report.notes.append(f"singular detuning: {exc}")
        etas = (math.inf, math.inf, math.inf)
    except MissingQubitFrequency as exc:
        report.singular = True
        report.notes.append(str(exc))
        etas = (math.nan, math.nan, math.nan)
    for name, value in zip(("eta1", "eta2", "eta3"), etas, strict=True):
        report.magnitudes[name] = abs(value)
        report.passed[name] = abs(value) <= threshold
    report.notes.append(LOW_EXCITATION_NOTE)
    if p.n_molecules is not None:
        report.notes.append(
            f"N={p.n_molecules}: commutator defect of the collective mode is 2/N = {2.0 / p.n_molecules:.3g}"
        )
    return report
