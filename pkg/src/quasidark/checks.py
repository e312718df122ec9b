"""Verification checks behind ``quasidark verify``.

Provides a ChecksRegistry for registering named invariant checks, a ``check``
decorator for convenience, and the built-in suite: Fröhlich residuals,
second-order consistency, eigensystem identities, resonance and mixing
normalisation, and the exact N-molecule comparison.

Each check takes a VerifyContext and returns a CheckResult. A check that raises
is reported as failed with the error text; it never aborts the suite.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

from .hamiltonian import (
    bosonization_report,
    build_generator,
    build_rotating_frame,
    commutator_residual,
    frohlich_consistency_error,
)
from .hilbert import SpaceSpec
from .observability import logger, metrics
from .params import (
    SystemParams,
    effective_constants,
    frohlich_coefficients,
    solve_resonant_qubit_frequency,
)
from .spectral import verify_eigensystem


class ChecksError(Exception):
    pass


@dataclass
class VerifyContext:
    params: SystemParams
    omegas: Sequence[float] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    spec: SpaceSpec = field(default_factory=lambda: SpaceSpec(3, 3, 3))
    max_molecules: int = 4
    bosonization_omega: float = 15.0
    eta_perturbation: float = 0.0
    _resonant: Dict[float, SystemParams] = field(default_factory=dict, repr=False)

    def resonant(self, Omega: float) -> SystemParams:
        """Params with omega_g on the two-photon resonance at Omega (cached)."""
        key = float(Omega)
        if key not in self._resonant:
            wg = solve_resonant_qubit_frequency(self.params, key)
            self._resonant[key] = self.params.with_qubit_frequency(wg)
        return self._resonant[key]


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


CheckFunc = Callable[[VerifyContext], CheckResult]


class CheckMeta:
    def __init__(self, name: str, func: CheckFunc, description: Optional[str] = None) -> None:
        self.name = name
        self.func = func
        self.description = description or ""


class ChecksRegistry:
    """Registry for verification checks.

    Methods:
    - register(name, func, description)
    - unregister(name)
    - get(name) -> CheckMeta
    - list_checks() -> List[str]
    - run(name, context) -> CheckResult
    - run_all(context) -> List[CheckResult] (registration order)
    """

    def __init__(self) -> None:
        self._checks: Dict[str, CheckMeta] = {}

    def register(self, name: str, func: CheckFunc, description: Optional[str] = None) -> None:
        # re-registration replaces the previous callable
        self._checks[name] = CheckMeta(name, func, description)

    def unregister(self, name: str) -> None:
        if name not in self._checks:
            raise ChecksError(f"Check {name} not found")
        del self._checks[name]

    def get(self, name: str) -> CheckMeta:
        c = self._checks.get(name)
        if not c:
            raise ChecksError(f"Check {name} not found")
        return c

    def list_checks(self) -> List[str]:
        return sorted(self._checks.keys())

    def run(self, name: str, context: VerifyContext) -> CheckResult:
        meta = self.get(name)
        t0 = time.perf_counter()
        try:
            result = meta.func(context)
        except Exception as exc:
            result = CheckResult(name, False, float("nan"), float("nan"), f"error: {exc}")
        metrics.inc("checks_run")
        if not result.passed:
            metrics.inc("checks_failed")
        logger.info(
            "check_completed",
            check=name,
            passed=result.passed,
            value=result.value,
            seconds=round(time.perf_counter() - t0, 4),
        )
        return result

    def run_all(self, context: VerifyContext) -> List[CheckResult]:
        return [self.run(name, context) for name in list(self._checks)]


# module-level default registry
default_registry = ChecksRegistry()


def check(
    name: Optional[str] = None,
    description: Optional[str] = None,
    registry: ChecksRegistry = default_registry,
):
    """Decorator to register a function as a check in the given registry.

    Usage:
        @check("norms", description="state norms stay at one")
        def norms(ctx):
            return CheckResult("norms", True, 0.0, 1e-9)
    """

    def deco(func: CheckFunc) -> CheckFunc:
        nm = name or getattr(func, "__name__", None)
        if not nm:
            raise ChecksError("Check must have a name")
        registry.register(nm, func, description=description)
        return func

    return deco


def _result(name: str, value: float, threshold: float, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(value <= threshold), float(value), threshold, detail)


@check("mixing_normalization", description="alpha^2 + beta^2 = 1 along the sweep")
def mixing_normalization(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    for om in ctx.omegas:
        eff = effective_constants(ctx.resonant(om), om)
        worst = max(worst, abs(eff.alpha**2 + eff.beta**2 - 1.0))
    return _result("mixing_normalization", worst, 1e-12)


@check("resonance_condition", description="|omega_g' - omega_D| after solving the resonance")
def resonance_condition(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    for om in ctx.omegas:
        worst = max(worst, abs(effective_constants(ctx.resonant(om), om).detuning))
    return _result("resonance_condition", worst, 1e-6)


@check("frohlich_residual", description="||HI + [H0, S]|| / ||HI|| on the untruncated block")
def frohlich_residual(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    for om in ctx.omegas:
        p = ctx.resonant(om)
        eta1, eta2, eta3 = frohlich_coefficients(p, om)
        etas = (eta1 + ctx.eta_perturbation, eta2, eta3)
        h0, hi = build_rotating_frame(p, om, ctx.spec)
        s = build_generator(p, om, ctx.spec, etas=etas)
        worst = max(worst, commutator_residual(h0, hi, s))
    detail = f"eta1 perturbed by {ctx.eta_perturbation}" if ctx.eta_perturbation else ""
    return _result("frohlich_residual", worst, 1e-10, detail)


@check("frohlich_consistency", description="second-order block vs effective model")
def frohlich_consistency(ctx: VerifyContext) -> CheckResult:
    worst = max(frohlich_consistency_error(ctx.resonant(om), om) for om in ctx.omegas)
    return _result("frohlich_consistency", worst, 1e-9)


@check("eigensystem", description="analytic dark/bright eigensystem vs dense eigensolve")
def eigensystem(ctx: VerifyContext) -> CheckResult:
    worst = 0.0
    for om in ctx.omegas:
        rep = verify_eigensystem(effective_constants(ctx.resonant(om), om), ctx.spec)
        worst = max(
            worst,
            rep.eigenvalue_error,
            rep.max_residual,
            rep.max_overlap_deficit,
            rep.orthonormality_error,
            rep.radical_form_error,
        )
    return _result("eigensystem", worst, 1e-9)


@check("bosonization_single", description="N-molecule vs collective single-excitation spectra")
def bosonization_single(ctx: VerifyContext) -> CheckResult:
    p = ctx.resonant(ctx.bosonization_omega)
    worst = 0.0
    for n in range(1, ctx.max_molecules + 1):
        rep = bosonization_report(p, n, Omega=ctx.bosonization_omega, double=False)
        worst = max(worst, rep.single_excitation_error, rep.spectrum_embedding_error)
    return _result("bosonization_single", worst, 1e-10, f"N = 1..{ctx.max_molecules}")


@check("bosonization_double", description="double-excitation deviation shrinks with N")
def bosonization_double(ctx: VerifyContext) -> CheckResult:
    p = ctx.resonant(ctx.bosonization_omega)
    devs = []
    for n in range(2, ctx.max_molecules + 1):
        rep = bosonization_report(p, n, Omega=ctx.bosonization_omega)
        devs.append(float(rep.double_excitation_deviation or 0.0))
    decreasing = all(b < a for a, b in zip(devs, devs[1:]))
    detail = ", ".join(f"N={n}: {d:.3e}" for n, d in zip(range(2, ctx.max_molecules + 1), devs))
    return CheckResult("bosonization_double", decreasing, devs[-1] if devs else 0.0, float("nan"), detail)
