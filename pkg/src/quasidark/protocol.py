"""Storage and retrieval experiments, figure tables and fidelity reports.

A qubit state gamma|g> + delta|e> is written into the molecular C mode by
ramping the control field from a strong value (mixing angle near 0) down to
zero (mixing angle pi/2) while the qubit tracks the two-photon resonance.
Retrieval runs the same ramp backwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import (
    MODELS,
    PropagationConfig,
    Schedule,
    Trajectory,
    logical_state,
    storage_sweep,
)
from .hilbert import SpaceSpec, StateVector, phase_optimized_fidelity, vacuum_partition
from .observability import logger
from .output import write_csv
from .params import (
    DEFAULT_RESONANCE_TOL,
    EffectiveParams,
    SystemParams,
    effective_constants,
    track_resonance,
)
from .sweep import GridExecutor

SUDDEN_DURATION = 1e-3

DERIVE_COLUMNS = (
    "Omega",
    "omega_g",
    "detuning_MHz",
    "eta1",
    "eta2",
    "eta3",
    "alpha",
    "beta",
    "g_m",
    "omega_g_prime",
    "omega_B",
    "omega_D",
    "Omega_d",
    "Delta",
    "Theta",
    "theta",
    "leakage",
    "perturbative",
)


class ProtocolError(Exception):
    pass


@dataclass(frozen=True)
class StorageTask:
    gamma: complex = 0.0
    delta: complex = 1.0
    schedule: Schedule = field(default_factory=Schedule)
    model: str = "effective"
    spec: SpaceSpec = field(default_factory=SpaceSpec)
    params: SystemParams = field(default_factory=SystemParams.experimental)
    config: PropagationConfig = field(default_factory=PropagationConfig)
    dress_initial: bool = True
    resonance_tol: float = DEFAULT_RESONANCE_TOL

    def __post_init__(self) -> None:
        norm = abs(self.gamma) ** 2 + abs(self.delta) ** 2
        if abs(norm - 1.0) > 1e-9:
            raise ProtocolError(f"|gamma|^2 + |delta|^2 must be 1, got {norm}")
        if self.model not in MODELS:
            raise ProtocolError(f"unknown model {self.model!r}; expected one of {MODELS}")

    @classmethod
    def from_polar(cls, delta_abs: float, delta_phase: float = 0.0, **kw: Any) -> "StorageTask":
        """gamma = sqrt(1 - |delta|^2) (real), delta = |delta| e^{i phase}."""
        if not 0.0 <= delta_abs <= 1.0:
            raise ProtocolError(f"|delta| must lie in [0, 1], got {delta_abs}")
        gamma = math.sqrt(max(0.0, 1.0 - delta_abs * delta_abs))
        return cls(gamma=gamma, delta=delta_abs * complex(math.cos(delta_phase), math.sin(delta_phase)), **kw)

    def initial_state(self) -> StateVector:
        return self.gamma * self.spec.vacuum() + self.delta * self.spec.basis_state(q=1)

    def with_duration(self, duration: float) -> "StorageTask":
        return replace(self, schedule=self.schedule.with_duration(duration))

    def sudden(self) -> "StorageTask":
        return self.with_duration(SUDDEN_DURATION)


@dataclass(eq=False)
class StorageReport:
    model: str
    duration: float
    gamma: complex
    delta: complex
    final_state: StateVector
    fidelity_vs_ideal: float
    fidelity_vs_memory: float
    leakage_max: float
    photon_max: float
    adiabaticity_max: float
    norm_drift: float
    final_populations: Dict[str, float]
    round_trip_fidelity: Optional[float] = None
    trajectory: Optional[Trajectory] = None

    def to_dict(self, include_state: bool = True) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "model": self.model,
            "duration_us": self.duration,
            "gamma": [complex(self.gamma).real, complex(self.gamma).imag],
            "delta": [complex(self.delta).real, complex(self.delta).imag],
            "fidelity_vs_ideal": self.fidelity_vs_ideal,
            "fidelity_vs_memory": self.fidelity_vs_memory,
            "leakage_max": self.leakage_max,
            "photon_max": self.photon_max,
            "adiabaticity_max": self.adiabaticity_max,
            "norm_drift": self.norm_drift,
            "final_populations": dict(self.final_populations),
            "round_trip_fidelity": self.round_trip_fidelity,
        }
        if include_state:
            d["final_state"] = self.final_state.to_dict()
        return d


def ideal_target(task: StorageTask, eff: EffectiveParams) -> StateVector:
    """gamma|0> + delta(alpha|c> - beta|a>), the memory image of the qubit state at the final field."""
    spec = task.spec
    excitation = eff.alpha * spec.basis_state(n_C=1) - eff.beta * spec.basis_state(n_A=1)
    return (task.gamma * spec.vacuum() + task.delta * excitation).normalized()


def memory_target(task: StorageTask) -> StateVector:
    spec = task.spec
    return task.gamma * spec.vacuum() + task.delta * spec.basis_state(n_C=1)


def _final_logical(traj: Trajectory) -> StateVector:
    track = traj.track
    if traj.model == "full" and track is not None:
        return logical_state(traj.final, track.params_at(-1), float(track.omegas[-1]))
    return traj.final.normalized()


def _summaries(traj: Trajectory) -> Dict[str, float]:
    pops = traj.populations()
    return {
        "leakage_max": float(np.max(traj.observables["leakage"])),
        "photon_max": float(np.max(pops["pop_photon"])),
        "adiabaticity_max": float(np.nanmax(traj.observables["adiabaticity"]))
        if np.any(np.isfinite(traj.observables["adiabaticity"]))
        else math.nan,
        "norm_drift": traj.norm_drift,
    }


def _final_populations(traj: Trajectory) -> Dict[str, float]:
    return {k: float(v[-1]) for k, v in traj.populations().items()}


def run_storage(task: StorageTask) -> StorageReport:
    traj = storage_sweep(
        task.params,
        task.schedule,
        task.initial_state(),
        task.model,
        config=task.config,
        dress_initial=task.dress_initial,
        resonance_tol=task.resonance_tol,
    )
    if traj.track is None:
        raise ProtocolError("storage sweep returned no resonance track")
    final = _final_logical(traj)
    partition = vacuum_partition(task.spec)
    eff_end = traj.track.constants[-1]
    report = StorageReport(
        model=task.model,
        duration=task.schedule.duration,
        gamma=complex(task.gamma),
        delta=complex(task.delta),
        final_state=traj.final,
        fidelity_vs_ideal=phase_optimized_fidelity(final, ideal_target(task, eff_end), partition),
        fidelity_vs_memory=phase_optimized_fidelity(final, memory_target(task), partition),
        final_populations=_final_populations(traj),
        trajectory=traj,
        **_summaries(traj),
    )
    logger.info(
        "storage_completed",
        model=task.model,
        duration=task.schedule.duration,
        fidelity_vs_ideal=report.fidelity_vs_ideal,
        fidelity_vs_memory=report.fidelity_vs_memory,
        photon_max=report.photon_max,
    )
    return report


def run_retrieval(
    stored: StorageReport, task: StorageTask, schedule: Optional[Schedule] = None
) -> StorageReport:
    """Release the stored state back into the qubit by reversing the ramp.

    fidelity_vs_ideal and round_trip_fidelity compare with the original qubit
    state; fidelity_vs_memory is carried over from the storage pass.
    """
    schedule = schedule or task.schedule.reversed()
    traj = storage_sweep(
        task.params,
        schedule,
        stored.final_state.normalized(),
        task.model,
        config=task.config,
        dress_initial=False,
        resonance_tol=task.resonance_tol,
    )
    final = _final_logical(traj)
    round_trip = phase_optimized_fidelity(final, task.initial_state(), vacuum_partition(task.spec))
    logger.info("retrieval_completed", model=task.model, round_trip_fidelity=round_trip)
    return StorageReport(
        model=task.model,
        duration=schedule.duration,
        gamma=complex(task.gamma),
        delta=complex(task.delta),
        final_state=traj.final,
        fidelity_vs_ideal=round_trip,
        fidelity_vs_memory=stored.fidelity_vs_memory,
        final_populations=_final_populations(traj),
        round_trip_fidelity=round_trip,
        trajectory=traj,
        **_summaries(traj),
    )


def converge_duration(
    task: StorageTask,
    *,
    initial_duration: Optional[float] = None,
    tolerance: float = 1e-4,
    max_doublings: int = 6,
) -> Tuple[float, StorageReport]:
    """Double the ramp duration until fidelity_vs_ideal changes by less than ``tolerance``."""
    duration = initial_duration or task.schedule.duration
    previous = run_storage(task.with_duration(duration))
    for _ in range(max_doublings):
        duration *= 2.0
        current = run_storage(task.with_duration(duration))
        change = abs(current.fidelity_vs_ideal - previous.fidelity_vs_ideal)
        if change < tolerance:
            logger.info("duration_converged", duration=duration, change=change)
            return duration, current
        previous = current
    logger.warning("duration_not_converged", duration=duration, tolerance=tolerance)
    return duration, previous


@dataclass
class FigureTable:
    name: str
    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]]

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows], dtype=float)

    def to_csv(self, path: str | Path) -> Path:
        return write_csv(path, self.columns, self.rows)


def resonant_constants_grid(
    p: SystemParams,
    omegas: Sequence[float],
    executor: Optional[GridExecutor] = None,
    *,
    tol: float = DEFAULT_RESONANCE_TOL,
) -> List[EffectiveParams]:
    """Effective constants along an Omega grid with the qubit kept on resonance."""
    if len(omegas) == 0:
        raise ProtocolError("empty Omega grid")
    omega_g = track_resonance(p, [float(x) for x in omegas], tol=tol)
    points = list(zip(omega_g.tolist(), [float(x) for x in omegas], strict=True))
    ex = executor or GridExecutor()
    return ex.map(
        lambda pt: effective_constants(p.with_qubit_frequency(pt[0]), pt[1]),
        points,
        label="effective_constants",
    )


def figure_theta(
    p: SystemParams, omegas: Sequence[float], executor: Optional[GridExecutor] = None,
    *,
    tol: float = DEFAULT_RESONANCE_TOL,
) -> FigureTable:
    consts = resonant_constants_grid(p, omegas, executor, tol=tol)
    return FigureTable("theta", ("Omega", "theta"), [(c.Omega, c.theta) for c in consts])


def figure_detuning(
    p: SystemParams, omegas: Sequence[float], executor: Optional[GridExecutor] = None,
    *,
    tol: float = DEFAULT_RESONANCE_TOL,
) -> FigureTable:
    consts = resonant_constants_grid(p, omegas, executor, tol=tol)
    return FigureTable(
        "detuning", ("Omega", "detuning_MHz"), [(c.Omega, p.omega - c.omega_g) for c in consts]
    )


def figure_leakage(
    p: SystemParams, omegas: Sequence[float], executor: Optional[GridExecutor] = None,
    *,
    tol: float = DEFAULT_RESONANCE_TOL,
) -> FigureTable:
    consts = resonant_constants_grid(p, omegas, executor, tol=tol)
    return FigureTable("leakage", ("Omega", "beta_sin_theta"), [(c.Omega, c.leakage) for c in consts])


def derive_table(
    p: SystemParams,
    omegas: Sequence[float],
    executor: Optional[GridExecutor] = None,
    *,
    threshold: float = 0.2,
    tol: float = DEFAULT_RESONANCE_TOL,
) -> FigureTable:
    rows = []
    for c in resonant_constants_grid(p, omegas, executor, tol=tol):
        rows.append(
            (
                c.Omega,
                c.omega_g,
                p.omega - c.omega_g,
                c.eta1,
                c.eta2,
                c.eta3,
                c.alpha,
                c.beta,
                c.g_m,
                c.omega_g_prime,
                c.omega_B,
                c.omega_D,
                c.Omega_d,
                c.Delta,
                c.Theta,
                c.theta,
                c.leakage,
                c.is_perturbative(threshold),
            )
        )
    return FigureTable("effective_constants", DERIVE_COLUMNS, rows)
