"""Time-dependent Schrödinger propagation through adiabatic control-field ramps.

Both models live on the same SpaceSpec and in the same frame: energies are
measured from the dark-mode frequency omega_D(t), so the quasi-dark state has
zero energy in either model.

- ``effective``: H_int(t) with coefficients taken from the resonance-tracked
  effective constants.
- ``full``: rotating-frame H0 + HI with omega_D(t) times the excitation number
  subtracted. The constant -omega_g/2 is dropped. The bare initial state is
  dressed with e^{S(0)} so the cavity only carries virtual photons.

Time is in µs and frequencies are in MHz (rad/µs).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import expm

from .hamiltonian import build_generator, effective_coefficients, effective_terms
from .hilbert import (
    Operator,
    SpaceSpec,
    StateVector,
    mode_operators,
    phase_optimized_fidelity,
    vacuum_partition,
)
from .observability import logger, metrics
from .params import (
    DEFAULT_RESONANCE_TOL,
    EffectiveParams,
    SystemParams,
    UndefinedMetric,
    adiabaticity_estimate,
    effective_constants,
    track_resonance,
)
from .spectral import quasi_dark_state

RAMPS = ("linear", "cosine")
MODELS = ("effective", "full")
TRAJECTORY_COLUMNS = (
    "t",
    "Omega",
    "omega_g",
    "pop_e",
    "pop_photon",
    "pop_A",
    "pop_C",
    "dark_overlap",
    "leakage",
    "adiabaticity",
)


class DynamicsError(Exception):
    pass


class StepSizeUnderflow(DynamicsError):
    pass


class PropagationError(DynamicsError):
    pass


@dataclass(frozen=True)
class Schedule:
    """Control-field ramp Omega(t) on [0, duration] (µs)."""

    omega_start: float = 30.0
    omega_end: float = 0.0
    duration: float = 100.0
    ramp: str = "cosine"
    n_samples: int = 401

    def __post_init__(self) -> None:
        if self.ramp not in RAMPS:
            raise DynamicsError(f"unknown ramp {self.ramp!r}; expected one of {RAMPS}")
        if not self.duration > 0.0:
            raise DynamicsError("ramp duration must be positive")
        if self.n_samples < 2:
            raise DynamicsError("a schedule needs at least two samples")

    def _progress(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        s = np.clip(np.asarray(t, dtype=float) / self.duration, 0.0, 1.0)
        if self.ramp == "linear":
            return s
        return 0.5 * (1.0 - np.cos(np.pi * s))

    def omega(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        out = self.omega_start + (self.omega_end - self.omega_start) * self._progress(t)
        return float(out) if np.ndim(out) == 0 else out

    def omega_rate(self, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        """dOmega/dt in MHz/µs."""
        span = (self.omega_end - self.omega_start) / self.duration
        s = np.clip(np.asarray(t, dtype=float) / self.duration, 0.0, 1.0)
        if self.ramp == "linear":
            out = span * np.ones_like(s)
        else:
            out = span * 0.5 * np.pi * np.sin(np.pi * s)
        return float(out) if np.ndim(out) == 0 else out

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.duration, self.n_samples)

    def reversed(self) -> "Schedule":
        return replace(self, omega_start=self.omega_end, omega_end=self.omega_start)

    def with_duration(self, duration: float) -> "Schedule":
        return replace(self, duration=float(duration))

    def track(self, p: SystemParams, *, tol: float = DEFAULT_RESONANCE_TOL) -> "ResonanceTrack":
        return ResonanceTrack(p, self, tol=tol)


class ResonanceTrack:
    """Resonance-tracked qubit frequency and effective constants along a schedule.

    Grid values come from continuation of the resonance solver; values between
    grid points are cubic-spline interpolated.
    """

    def __init__(self, p: SystemParams, schedule: Schedule, *, tol: float = DEFAULT_RESONANCE_TOL):
        self.params = p
        self.schedule = schedule
        self.times = schedule.times()
        self.omegas = np.asarray(schedule.omega(self.times))
        self.omega_g = track_resonance(p, self.omegas, tol=tol)
        self.constants: Tuple[EffectiveParams, ...] = tuple(
            effective_constants(p.with_qubit_frequency(wg), float(om))
            for wg, om in zip(self.omega_g, self.omegas, strict=True)
        )
        self.omega_D = np.array([c.omega_D for c in self.constants])
        coeffs = np.array([effective_coefficients(c) for c in self.constants])
        self._omega_g = CubicSpline(self.times, self.omega_g)
        self._omega_D = CubicSpline(self.times, self.omega_D)
        self._coeffs = CubicSpline(self.times, coeffs, axis=0)

    def omega_g_at(self, t: float) -> float:
        return float(self._omega_g(t))

    def omega_D_at(self, t: float) -> float:
        return float(self._omega_D(t))

    def effective_coefficients_at(self, t: float) -> np.ndarray:
        return self._coeffs(t)

    def params_at(self, index: int) -> SystemParams:
        return self.params.with_qubit_frequency(self.omega_g[index])

    def constants_at(self, t: float) -> EffectiveParams:
        return effective_constants(
            self.params.with_qubit_frequency(self.omega_g_at(t)), self.schedule.omega(t)
        )


class LinearHamiltonian:
    """H(t) = static + sum_k c_k(t) M_k with fixed matrices M_k."""

    def __init__(
        self,
        static: np.ndarray,
        terms: Sequence[np.ndarray],
        coefficients: Callable[[float], np.ndarray],
    ):
        self.static = np.asarray(static, dtype=complex)
        self.terms = np.stack([np.asarray(m, dtype=complex) for m in terms])
        self.coefficients = coefficients

    def __call__(self, t: float) -> np.ndarray:
        return self.static + np.tensordot(self.coefficients(t), self.terms, axes=1)

    def apply(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.static @ y + self.coefficients(t) @ (self.terms @ y)


HamiltonianLike = Union[Operator, np.ndarray, LinearHamiltonian, Callable[[float], np.ndarray]]


@dataclass(frozen=True)
class PropagationConfig:
    method: str = "DOP853"
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = math.inf
    renormalize: bool = False


@dataclass(eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    dims: Tuple[int, ...]
    model: str = "generic"
    observables: Dict[str, np.ndarray] = field(default_factory=dict)
    track: Optional[ResonanceTrack] = None
    nfev: int = 0

    def state(self, index: int) -> StateVector:
        return StateVector(self.states[index], self.dims)

    @property
    def final(self) -> StateVector:
        return self.state(-1)

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norms() - 1.0)))

    def populations(self) -> Dict[str, np.ndarray]:
        """Mean occupations of the qubit excited level, cavity, A and C modes per time."""
        occ = SpaceSpec.from_dims(self.dims).occupations()
        probs = np.abs(self.states) ** 2
        weighted = probs @ occ
        return {
            "pop_e": weighted[:, 0],
            "pop_photon": weighted[:, 1],
            "pop_A": weighted[:, 2],
            "pop_C": weighted[:, 3],
        }

    def table(self) -> Tuple[List[str], List[List[float]]]:
        cols: Dict[str, np.ndarray] = {"t": self.times}
        cols.update(self.populations())
        nan = np.full(self.times.shape, math.nan)
        for name in ("Omega", "omega_g", "dark_overlap", "leakage", "adiabaticity"):
            cols[name] = self.observables.get(name, nan)
        rows = [[float(cols[c][i]) for c in TRAJECTORY_COLUMNS] for i in range(len(self.times))]
        return list(TRAJECTORY_COLUMNS), rows


def _hamiltonian_callable(h: HamiltonianLike) -> Callable[[float, np.ndarray], np.ndarray]:
    if isinstance(h, Operator):
        m = h.matrix
        return lambda t, y: -1j * (m @ y)
    if isinstance(h, np.ndarray):
        return lambda t, y: -1j * (h @ y)
    if isinstance(h, LinearHamiltonian):
        return lambda t, y: -1j * h.apply(t, y)

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        m = h(t)
        mat = m.matrix if isinstance(m, Operator) else m
        return -1j * (mat @ y)

    return rhs


def propagate(
    hamiltonian: HamiltonianLike,
    psi0: StateVector,
    grid: Sequence[float],
    config: Optional[PropagationConfig] = None,
) -> Trajectory:
    """Integrate i dψ/dt = H(t) ψ and sample ψ on ``grid``."""
    cfg = config or PropagationConfig()
    ts = np.asarray(grid, dtype=float)
    if ts.ndim != 1 or ts.size == 0:
        raise DynamicsError("time grid must be a non-empty 1-D sequence")
    if ts.size > 1 and np.any(np.diff(ts) <= 0):
        raise DynamicsError("time grid must be strictly increasing")
    if abs(psi0.norm() - 1.0) > 1e-6:
        raise DynamicsError(f"initial state must be normalized, norm={psi0.norm()}")
    y0 = psi0.amplitudes.astype(complex)
    if ts.size == 1:
        return Trajectory(ts, y0[None, :].copy(), psi0.dims)

    t0 = time.perf_counter()
    sol = solve_ivp(
        _hamiltonian_callable(hamiltonian),
        (ts[0], ts[-1]),
        y0,
        method=cfg.method,
        t_eval=ts,
        rtol=cfg.rtol,
        atol=cfg.atol,
        max_step=cfg.max_step,
    )
    elapsed = time.perf_counter() - t0
    metrics.inc("propagations")
    metrics.timing("propagation_seconds", elapsed)
    if sol.status == -1:
        if "step size" in (sol.message or "").lower():
            raise StepSizeUnderflow(sol.message)
        raise PropagationError(sol.message)
    states = sol.y.T.copy()
    if cfg.renormalize:
        states /= np.linalg.norm(states, axis=1)[:, None]
    traj = Trajectory(ts, states, psi0.dims, nfev=int(sol.nfev))
    logger.info(
        "propagation_completed",
        method=cfg.method,
        nfev=int(sol.nfev),
        seconds=round(elapsed, 4),
        norm_drift=traj.norm_drift,
    )
    return traj


def effective_hamiltonian(track: ResonanceTrack, spec: SpaceSpec) -> LinearHamiltonian:
    terms = [op.matrix for op in effective_terms(spec)]
    return LinearHamiltonian(np.zeros((spec.dim, spec.dim)), terms, track.effective_coefficients_at)


def full_hamiltonian(track: ResonanceTrack, spec: SpaceSpec) -> LinearHamiltonian:
    p = track.params
    ops = mode_operators(spec)
    sp = ops.sm.dag()
    hop = ops.A.dag() @ ops.C
    terms = [
        (sp @ ops.sm).matrix,
        (ops.a.dag() @ ops.a).matrix,
        (ops.A.dag() @ ops.A + ops.C.dag() @ ops.C).matrix,
        (hop + hop.dag()).matrix,
    ]
    static = (
        p.g * (ops.a @ sp + ops.a.dag() @ ops.sm) + p.zeta * (ops.a @ ops.A.dag() + ops.a.dag() @ ops.A)
    ).matrix
    schedule = track.schedule

    def coefficients(t: float) -> np.ndarray:
        w_d = track.omega_D_at(t)
        return np.array(
            [track.omega_g_at(t) - w_d, p.omega - w_d, p.omega_a - w_d, schedule.omega(t)]
        )

    return LinearHamiltonian(static, terms, coefficients)


def dress(state: StateVector, p: SystemParams, Omega: float) -> StateVector:
    """e^{S} applied to a bare state."""
    spec = SpaceSpec.from_dims(state.dims)
    s = build_generator(p, Omega, spec)
    return StateVector(expm(s.matrix) @ state.amplitudes, state.dims)


def logical_state(state: StateVector, p: SystemParams, Omega: float, *, undress: bool = True) -> StateVector:
    """Undress with e^{-S}, keep the zero-photon sector and renormalize."""
    spec = SpaceSpec.from_dims(state.dims)
    amps = state.amplitudes
    if undress:
        amps = expm(-build_generator(p, Omega, spec).matrix) @ amps
    amps = np.where(spec.occupations()[:, 1] == 0, amps, 0.0)
    return StateVector(amps, state.dims).normalized()


def storage_sweep(
    p: SystemParams,
    schedule: Schedule,
    psi0: StateVector,
    model: str = "effective",
    *,
    config: Optional[PropagationConfig] = None,
    track: Optional[ResonanceTrack] = None,
    dress_initial: bool = True,
    resonance_tol: float = DEFAULT_RESONANCE_TOL,
) -> Trajectory:
    """Propagate ``psi0`` through ``schedule`` under the chosen model and record observables."""
    if model not in MODELS:
        raise DynamicsError(f"unknown model {model!r}; expected one of {MODELS}")
    spec = SpaceSpec.from_dims(psi0.dims)
    track = track or schedule.track(p, tol=resonance_tol)
    if model == "effective":
        ham = effective_hamiltonian(track, spec)
        start = psi0
    else:
        photons = float(np.sum(np.abs(psi0.amplitudes) ** 2 * spec.occupations()[:, 1]))
        if dress_initial:
            if photons > 1e-12:
                raise DynamicsError("full-model runs start from a bare state with the cavity in vacuum")
            start = dress(psi0, track.params_at(0), float(track.omegas[0]))
        else:
            start = psi0
        ham = full_hamiltonian(track, spec)

    traj = propagate(ham, start, track.times, config)
    traj.model = model
    traj.track = track

    dark_overlap = np.empty(len(track.times))
    leakage = np.empty(len(track.times))
    adiabaticity = np.empty(len(track.times))
    rates = np.asarray(schedule.omega_rate(track.times))
    substituted = 0
    for i, eff in enumerate(track.constants):
        dark = quasi_dark_state(eff, spec).amplitudes
        dark_overlap[i] = abs(np.vdot(dark, traj.states[i])) ** 2
        leakage[i] = eff.leakage
        try:
            est = adiabaticity_estimate(p, eff.Omega, float(rates[i]), eff=eff)
            adiabaticity[i] = est.value
            substituted += int(est.magnitude_substituted)
        except UndefinedMetric:
            adiabaticity[i] = math.nan
    if substituted:
        logger.warning("adiabaticity_magnitude_substituted", points=substituted, model=model)
    traj.observables = {
        "Omega": track.omegas.copy(),
        "omega_g": track.omega_g.copy(),
        "dark_overlap": dark_overlap,
        "leakage": leakage,
        "adiabaticity": adiabaticity,
    }
    return traj


@dataclass(eq=False)
class ModelComparison:
    times: np.ndarray
    infidelity: np.ndarray
    effective: Trajectory
    full: Trajectory

    @property
    def max_infidelity(self) -> float:
        return float(np.max(self.infidelity))


def compare_models(
    p: SystemParams,
    schedule: Schedule,
    psi0: StateVector,
    *,
    config: Optional[PropagationConfig] = None,
) -> ModelComparison:
    """Infidelity between the undressed, zero-photon-projected full model and the effective model."""
    track = schedule.track(p)
    eff_traj = storage_sweep(p, schedule, psi0, "effective", config=config, track=track)
    full_traj = storage_sweep(p, schedule, psi0, "full", config=config, track=track)
    spec = SpaceSpec.from_dims(psi0.dims)
    partition = vacuum_partition(spec)
    infid = np.empty(len(track.times))
    for i in range(len(track.times)):
        logical = logical_state(full_traj.state(i), track.params_at(i), float(track.omegas[i]))
        infid[i] = 1.0 - phase_optimized_fidelity(logical, eff_traj.state(i), partition)
    logger.info("models_compared", max_infidelity=float(np.max(infid)), points=len(infid))
    return ModelComparison(track.times, infid, eff_traj, full_traj)
