"""Storage walkthrough using quasidark.

Simple workflow:
    Effective constants -> Figure tables -> Adiabatic storage -> Retrieval

Run directly for local exploration; tables land in ``cookbook_out/``.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from quasidark.dynamics import Schedule
from quasidark.params import SystemParams
from quasidark.protocol import (
    StorageTask,
    converge_duration,
    figure_leakage,
    figure_theta,
    run_retrieval,
    run_storage,
)
from quasidark.sweep import GridExecutor

OUT = Path(__file__).resolve().parent / "cookbook_out"


def show_constants(p: SystemParams) -> None:
    omegas = np.linspace(0.0, 30.0, 31)
    ex = GridExecutor(max_workers=4)
    theta = figure_theta(p, omegas, ex)
    leak = figure_leakage(p, omegas, ex)
    theta.to_csv(OUT / "fig_theta.csv")
    leak.to_csv(OUT / "fig_leakage.csv")
    print(f"theta: {theta.column('theta')[0]:.4f} -> {theta.column('theta')[-1]:.4f} rad")
    print(f"max leakage beta*sin(theta): {leak.column('beta_sin_theta').max():.2e}")


def store_and_retrieve(p: SystemParams) -> None:
    task = StorageTask.from_polar(1.0 / math.sqrt(2.0), params=p, schedule=Schedule(duration=100.0))
    stored = run_storage(task)
    print(f"stored: fidelity_vs_ideal={stored.fidelity_vs_ideal:.5f} pop_C={stored.final_populations['pop_C']:.4f}")
    back = run_retrieval(stored, task)
    print(f"retrieved: round_trip_fidelity={back.round_trip_fidelity:.5f}")

    sudden = run_storage(task.sudden())
    print(f"sudden switch-off: fidelity_vs_ideal={sudden.fidelity_vs_ideal:.5f}")


def pick_duration(p: SystemParams) -> None:
    task = StorageTask.from_polar(1.0, params=p, schedule=Schedule(duration=20.0))
    duration, report = converge_duration(task, tolerance=1e-3)
    print(f"converged ramp duration: {duration:g} µs (fidelity {report.fidelity_vs_ideal:.5f})")


if __name__ == "__main__":
    params = SystemParams.experimental()
    show_constants(params)
    store_and_retrieve(params)
    pick_duration(params)
