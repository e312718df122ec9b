"""Command-line front end: ``quasidark {derive,figures,storage,verify}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (including
failed verification checks).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence

from .checks import VerifyContext, default_registry
from .config import ConfigError, RunConfig, load_config
from .dynamics import RAMPS, DynamicsError
from .hamiltonian import HamiltonianError
from .hilbert import HilbertError, SpaceSpec
from .observability import logger
from .output import OutputError, write_csv, write_json
from .params import ParamsError
from .protocol import (
    ProtocolError,
    StorageReport,
    derive_table,
    figure_detuning,
    figure_leakage,
    figure_theta,
    run_retrieval,
    run_storage,
)
from .spectral import SpectralError
from .sweep import GridExecutor, SweepError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

NUMERICAL_ERRORS = (
    ParamsError,
    HilbertError,
    HamiltonianError,
    SpectralError,
    DynamicsError,
    ProtocolError,
    SweepError,
    OutputError,
)

# flag dest -> dotted config key
FLAG_KEYS = {
    "out": "out_dir",
    "omega_max": "grid.omega_max",
    "grid_steps": "grid.steps",
    "ramp": "schedule.ramp",
    "duration_us": "schedule.duration_us",
    "model": "storage.model",
    "gamma": "storage.gamma",
    "delta_abs": "storage.delta_abs",
    "delta_phase": "storage.delta_phase",
    "sudden": "storage.sudden",
    "retrieve": "storage.retrieve",
    "inject_eta_error": "verify.eta_perturbation",
}


def _common_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON run configuration")
    p.add_argument("--out", help="output directory")
    p.add_argument("--omega-max", type=float, help="largest control field on the grid (MHz)")
    p.add_argument("--grid-steps", type=int, help="number of grid intervals")
    p.add_argument("--ramp", choices=RAMPS)
    p.add_argument("--duration-us", type=float, help="ramp duration in µs")
    p.add_argument("--model", choices=("full", "effective"))
    p.add_argument("--gamma", type=float, help="ground-state amplitude")
    p.add_argument("--delta-abs", type=float, help="|delta|, excited-state amplitude")
    p.add_argument("--delta-phase", type=float, help="phase of delta (rad)")
    p.add_argument("--sudden", action="store_true", default=None, help="switch the field off abruptly")
    p.add_argument("--retrieve", action="store_true", default=None, help="run the reverse ramp afterwards")
    p.add_argument("--inject-eta-error", type=float, help=argparse.SUPPRESS)
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quasidark",
        description="Quasi-dark-state storage of a charge qubit in a molecular ensemble.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_flags()
    sub.add_parser("derive", parents=[common], help="effective constants over the Omega grid")
    sub.add_parser("figures", parents=[common], help="theta, detuning and leakage tables")
    sub.add_parser("storage", parents=[common], help="time-dependent storage (and retrieval) run")
    sub.add_parser("verify", parents=[common], help="run the invariant checks")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {key: getattr(args, dest) for dest, key in FLAG_KEYS.items()}


def cmd_derive(cfg: RunConfig) -> int:
    table = derive_table(
        cfg.system.to_params(),
        cfg.grid.omegas(),
        GridExecutor(),
        threshold=cfg.tolerances.validity_threshold,
        tol=cfg.tolerances.resonance_tol,
    )
    path = table.to_csv(Path(cfg.out_dir) / "effective_constants.csv")
    g_m = table.column("g_m")
    print(f"wrote {len(table.rows)} rows to {path}; g_m in [{g_m.min():.4f}, {g_m.max():.4f}] MHz")
    return EXIT_OK


def cmd_figures(cfg: RunConfig) -> int:
    p = cfg.system.to_params()
    omegas = cfg.grid.omegas()
    ex = GridExecutor()
    out = Path(cfg.out_dir)
    for name, build in (("theta", figure_theta), ("detuning", figure_detuning), ("leakage", figure_leakage)):
        table = build(p, omegas, ex, tol=cfg.tolerances.resonance_tol)
        path = table.to_csv(out / f"fig_{name}.csv")
        print(f"wrote {path}")
    return EXIT_OK


def _write_trajectory(report: StorageReport, path: Path) -> None:
    if report.trajectory is None:
        raise ProtocolError("report carries no trajectory")
    header, rows = report.trajectory.table()
    write_csv(path, header, rows)


def cmd_storage(cfg: RunConfig) -> int:
    task = cfg.storage_task()
    out = Path(cfg.out_dir)
    stored = run_storage(task)
    _write_trajectory(stored, out / "trajectory.csv")
    payload: Dict[str, Any] = {"storage": stored.to_dict(), "config": cfg.model_dump()}
    if cfg.storage.retrieve:
        retrieved = run_retrieval(stored, task)
        _write_trajectory(retrieved, out / "retrieval_trajectory.csv")
        payload["retrieval"] = retrieved.to_dict()
    path = write_json(out / "storage_report.json", payload)
    print(
        f"{task.model} storage over {task.schedule.duration} µs: "
        f"fidelity_vs_ideal={stored.fidelity_vs_ideal:.6f} photon_max={stored.photon_max:.3e}"
    )
    if "retrieval" in payload:
        print(f"round-trip fidelity={payload['retrieval']['round_trip_fidelity']:.6f}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    space = cfg.space
    # commutator residuals need one level above the single-excitation block
    spec = SpaceSpec(max(space.n_cavity, 3), max(space.n_A, 3), max(space.n_C, 3))
    ctx = VerifyContext(
        params=cfg.system.to_params(),
        omegas=cfg.verify.omegas(cfg.grid.omega_max),
        spec=spec,
        max_molecules=cfg.verify.max_molecules,
        eta_perturbation=cfg.verify.eta_perturbation,
    )
    results = default_registry.run_all(ctx)
    failed = [r.name for r in results if not r.passed]
    path = write_json(
        Path(cfg.out_dir) / "verify_report.json",
        {"passed": not failed, "failed": failed, "checks": [r.to_dict() for r in results]},
    )
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.value:.3e} {r.detail}".rstrip())
    print(f"wrote {path}")
    return EXIT_NUMERICAL if failed else EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "derive": cmd_derive,
    "figures": cmd_figures,
    "storage": cmd_storage,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    try:
        cfg = load_config(args.config, _overrides(args))
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        logger.warning("command_failed", command=args.command, error=str(exc), exit_code=EXIT_CONFIG)
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        logger.warning("command_failed", command=args.command, error=str(exc), exit_code=EXIT_NUMERICAL)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
