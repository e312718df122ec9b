"""Hamiltonian builders.

- circuit QED (qubit + stripline cavity), lab frame
- collective molecule/cavity/qubit model, lab frame and rotating frame
- the Fröhlich generator S and its commutator residual
- the second-order effective block and the effective model H_int
- an exact N-molecule (N <= 4) model for checking the collective bosonization
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .hilbert import (
    SIGMA_MINUS,
    SIGMA_Z,
    Operator,
    SpaceSpec,
    annihilator,
    basis_occupations,
    commutator,
    embed_factor,
    mode_operators,
    physical_mask,
)
from .params import EffectiveParams, SystemParams, effective_constants, frohlich_coefficients

MAX_MOLECULES = 4
MOLECULE_LEVELS = 3  # b, a, c
LEVEL_B, LEVEL_A, LEVEL_C = 0, 1, 2


class HamiltonianError(Exception):
    pass


class FrequencyMismatch(HamiltonianError):
    pass


class SizeLimit(HamiltonianError):
    pass


DEFAULT_SPACE = SpaceSpec()


def build_circuit_qed(p: SystemParams, spec: SpaceSpec = DEFAULT_SPACE) -> Operator:
    ops = mode_operators(spec)
    sp = ops.sm.dag()
    return (
        0.5 * p.qubit_frequency() * ops.sz
        + p.omega * (ops.a.dag() @ ops.a)
        + p.g * (ops.a @ sp + ops.a.dag() @ ops.sm)
    )


def _interaction(p: SystemParams, spec: SpaceSpec) -> Operator:
    ops = mode_operators(spec)
    sp = ops.sm.dag()
    return p.g * (ops.a @ sp + ops.a.dag() @ ops.sm) + p.zeta * (
        ops.a @ ops.A.dag() + ops.a.dag() @ ops.A
    )


def build_collective(
    p: SystemParams, Omega: float, t: float, spec: SpaceSpec = DEFAULT_SPACE
) -> Operator:
    """Lab-frame Hamiltonian with the explicit e^{-i omega_f t} phase of the control field."""
    if p.omega_c is None or p.omega_f is None:
        raise HamiltonianError("lab-frame model needs both omega_c and omega_f")
    ops = mode_operators(spec)
    drive = Omega * np.exp(-1j * p.omega_f * t) * (ops.A.dag() @ ops.C)
    free = (
        0.5 * p.qubit_frequency() * ops.sz
        + p.omega * (ops.a.dag() @ ops.a)
        + p.omega_a * (ops.A.dag() @ ops.A)
        + p.omega_c * (ops.C.dag() @ ops.C)
    )
    return free + _interaction(p, spec) + drive + drive.dag()


def rotating_frame_unitary(p: SystemParams, t: float, spec: SpaceSpec = DEFAULT_SPACE) -> Operator:
    """U(t) = exp(i omega_f t C†C), diagonal in the number basis."""
    if p.omega_f is None:
        raise HamiltonianError("rotating frame needs omega_f")
    n_c = spec.occupations()[:, 3]
    return Operator(np.diag(np.exp(1j * p.omega_f * t * n_c)), spec.dims)


def build_rotating_frame(
    p: SystemParams, Omega: float, spec: SpaceSpec = DEFAULT_SPACE
) -> Tuple[Operator, Operator]:
    """Return (H0, HI) in the frame rotating at omega_f on the C mode."""
    if not p.frequency_matched():
        raise FrequencyMismatch(
            f"omega_a={p.omega_a} != omega_c + omega_f = {p.omega_c} + {p.omega_f}"
        )
    ops = mode_operators(spec)
    h0 = (
        0.5 * p.qubit_frequency() * ops.sz
        + p.omega * (ops.a.dag() @ ops.a)
        + p.omega_a * (ops.A.dag() @ ops.A + ops.C.dag() @ ops.C)
        + Omega * (ops.A.dag() @ ops.C + ops.C.dag() @ ops.A)
    )
    return h0, _interaction(p, spec)


def build_generator(
    p: SystemParams,
    Omega: float,
    spec: SpaceSpec = DEFAULT_SPACE,
    *,
    etas: Optional[Sequence[float]] = None,
) -> Operator:
    """Anti-Hermitian S = (eta1 a σ+ + eta2 a A† + eta3 a C†) - h.c."""
    eta1, eta2, eta3 = etas if etas is not None else frohlich_coefficients(p, Omega)
    ops = mode_operators(spec)
    x = eta1 * (ops.a @ ops.sm.dag()) + eta2 * (ops.a @ ops.A.dag()) + eta3 * (ops.a @ ops.C.dag())
    return x - x.dag()


def commutator_residual(H0: Operator, HI: Operator, S: Operator) -> float:
    """||HI + [H0, S]||_F / ||HI||_F on states with every boson below its top level."""
    r = (HI + commutator(H0, S)).matrix
    mask = physical_mask(H0.dims)
    num = float(np.linalg.norm(r[np.ix_(mask, mask)]))
    den = float(np.linalg.norm(HI.matrix[np.ix_(mask, mask)]))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def second_order_effective(
    p: SystemParams, Omega: float, spec: SpaceSpec = DEFAULT_SPACE
) -> Operator:
    """H0 + ½[HI, S], the transformed Hamiltonian to second order in the couplings."""
    h0, hi = build_rotating_frame(p, Omega, spec)
    s = build_generator(p, Omega, spec)
    return h0 + 0.5 * commutator(hi, s)


def _single_excitation_indices(spec: SpaceSpec) -> List[int]:
    # sigma+|0>, A†|0>, C†|0>
    return [spec.index(q=1), spec.index(n_A=1), spec.index(n_C=1)]


def mixing_rotation(eff: EffectiveParams) -> np.ndarray:
    """Columns: (e, B, D) expressed in the (e, A, C) basis."""
    a, b = eff.alpha, eff.beta
    return np.array([[1.0, 0.0, 0.0], [0.0, a, b], [0.0, b, -a]])


def frohlich_block(
    p: SystemParams,
    Omega: float,
    spec: SpaceSpec = DEFAULT_SPACE,
    *,
    eff: Optional[EffectiveParams] = None,
) -> np.ndarray:
    """Zero-photon single-excitation block of the second-order Hamiltonian.

    Returned in the {σ+|0>, B†|0>, D†|0>} basis and measured from the vacuum
    energy.
    """
    eff = eff or effective_constants(p, Omega)
    h2 = second_order_effective(p, Omega, spec)
    idx = _single_excitation_indices(spec)
    vac = spec.index()
    m = h2.block(idx) - h2.matrix[vac, vac] * np.eye(3)
    w = mixing_rotation(eff)
    return w.T @ m @ w


def effective_block(eff: EffectiveParams) -> np.ndarray:
    return np.array(
        [
            [0.0, eff.g_m, 0.0],
            [eff.g_m, eff.Delta, eff.Omega_d],
            [0.0, eff.Omega_d, 0.0],
        ],
        dtype=complex,
    )


def frohlich_consistency_error(
    p: SystemParams, Omega: float, spec: SpaceSpec = DEFAULT_SPACE
) -> float:
    """Relative distance between the second-order block (shifted by omega_D) and H_int.

    The qubit entry of H_int is zero only on resonance, so the detuning
    omega_g' - omega_D is added back before comparing.
    """
    eff = effective_constants(p, Omega)
    block = frohlich_block(p, Omega, spec, eff=eff) - eff.omega_D * np.eye(3)
    target = effective_block(eff)
    target[0, 0] = eff.detuning
    return float(np.linalg.norm(block - target) / np.linalg.norm(effective_block(eff)))


def effective_terms(spec: SpaceSpec = DEFAULT_SPACE) -> Tuple[Operator, ...]:
    """Fixed operators whose weighted sum is H_int: A†A, C†C, A†C + h.c., σ-A† + h.c., σ-C† + h.c."""
    ops = mode_operators(spec)
    hop = ops.A.dag() @ ops.C
    qa = ops.sm @ ops.A.dag()
    qc = ops.sm @ ops.C.dag()
    return (
        ops.A.dag() @ ops.A,
        ops.C.dag() @ ops.C,
        hop + hop.dag(),
        qa + qa.dag(),
        qc + qc.dag(),
    )


def effective_coefficients(eff: EffectiveParams) -> np.ndarray:
    a, b = eff.alpha, eff.beta
    d, w = eff.Delta, eff.Omega_d
    return np.array(
        [
            d * a * a + 2.0 * w * a * b,
            d * b * b - 2.0 * w * a * b,
            d * a * b + w * (b * b - a * a),
            eff.g_m * a,
            eff.g_m * b,
        ]
    )


def build_effective(
    p: SystemParams,
    Omega: float,
    spec: SpaceSpec = DEFAULT_SPACE,
    *,
    eff: Optional[EffectiveParams] = None,
) -> Operator:
    """H_int = Δ B†B + (g_m σ- B† + Omega_d B† D + h.c.); the cavity is a spectator."""
    return effective_operator(eff or effective_constants(p, Omega), spec)


def effective_operator(eff: EffectiveParams, spec: SpaceSpec = DEFAULT_SPACE) -> Operator:
    out = Operator.zeros(spec.dims)
    for c, term in zip(effective_coefficients(eff), effective_terms(spec), strict=True):
        out = out + c * term
    return out


# --- exact N-molecule model -------------------------------------------------


def _check_size(n_molecules: int) -> None:
    if not 1 <= n_molecules <= MAX_MOLECULES:
        raise SizeLimit(f"microscopic model supports 1..{MAX_MOLECULES} molecules, got {n_molecules}")


def microscopic_dims(n_molecules: int, n_cavity: int = 2) -> Tuple[int, ...]:
    _check_size(n_molecules)
    return (2, n_cavity) + (MOLECULE_LEVELS,) * n_molecules


def _transition(i: int, j: int) -> np.ndarray:
    m = np.zeros((MOLECULE_LEVELS, MOLECULE_LEVELS), dtype=complex)
    m[i, j] = 1.0
    return m


def build_microscopic(
    p: SystemParams, n_molecules: int, Omega: float = 0.0, n_cavity: int = 2
) -> Operator:
    """Rotating-frame Hamiltonian of N three-level molecules, each coupled with xi = zeta/sqrt(N)."""
    dims = microscopic_dims(n_molecules, n_cavity)
    xi = p.single_molecule_coupling(n_molecules)

    sm = embed_factor(0, SIGMA_MINUS, dims)
    a = embed_factor(1, annihilator(n_cavity), dims)
    h = (
        0.5 * p.qubit_frequency() * embed_factor(0, SIGMA_Z, dims)
        + p.omega * (a.dag() @ a)
        + p.g * (a @ sm.dag() + a.dag() @ sm)
    )
    excited = _transition(LEVEL_A, LEVEL_A) + _transition(LEVEL_C, LEVEL_C)
    for j in range(n_molecules):
        k = 2 + j
        raise_a = embed_factor(k, _transition(LEVEL_A, LEVEL_B), dims)
        drive = embed_factor(k, _transition(LEVEL_A, LEVEL_C), dims)
        h = (
            h
            + p.omega_a * embed_factor(k, excited, dims)
            + xi * (a @ raise_a + raise_a.dag() @ a.dag())
            + Omega * (drive + drive.dag())
        )
    return h


@dataclass
class CollectiveMap:
    """Isometry from collective number states into the N-molecule space."""

    n_molecules: int
    n_cavity: int
    labels: List[Tuple[int, int, int, int]]
    isometry: np.ndarray

    def sector(self, excitations: int) -> "CollectiveMap":
        keep = [i for i, lab in enumerate(self.labels) if sum(lab) == excitations]
        return CollectiveMap(
            self.n_molecules,
            self.n_cavity,
            [self.labels[i] for i in keep],
            self.isometry[:, keep],
        )

    def collective_indices(self, spec: SpaceSpec) -> List[int]:
        return [spec.index(*lab) for lab in self.labels]


def _dicke_vector(n_molecules: int, n_a: int, n_c: int) -> np.ndarray:
    vec = np.zeros(MOLECULE_LEVELS**n_molecules)
    for levels in itertools.product(range(MOLECULE_LEVELS), repeat=n_molecules):
        if levels.count(LEVEL_A) == n_a and levels.count(LEVEL_C) == n_c:
            idx = 0
            for lv in levels:
                idx = idx * MOLECULE_LEVELS + lv
            vec[idx] = 1.0
    return vec / np.linalg.norm(vec)


def collective_map(
    n_molecules: int, n_cavity: int = 2, max_excitations: int = 1
) -> CollectiveMap:
    """Map |q, n> ⊗ |n_a A-excitations, n_c C-excitations> onto symmetric (Dicke) states.

    Only molecular occupations with n_a + n_c <= min(max_excitations, N) are
    representable; others are omitted from ``labels``.
    """
    _check_size(n_molecules)
    mol_dim = MOLECULE_LEVELS**n_molecules
    labels: List[Tuple[int, int, int, int]] = []
    columns: List[np.ndarray] = []
    top = min(max_excitations, n_molecules)
    for q in range(2):
        for n in range(n_cavity):
            for n_a in range(top + 1):
                for n_c in range(top + 1 - n_a):
                    col = np.zeros(2 * n_cavity * mol_dim, dtype=complex)
                    offset = (q * n_cavity + n) * mol_dim
                    col[offset : offset + mol_dim] = _dicke_vector(n_molecules, n_a, n_c)
                    labels.append((q, n, n_a, n_c))
                    columns.append(col)
    return CollectiveMap(n_molecules, n_cavity, labels, np.stack(columns, axis=1))


def microscopic_excitations(dims: Sequence[int]) -> np.ndarray:
    occ = basis_occupations(tuple(dims))
    return occ[:, 0] + occ[:, 1] + np.count_nonzero(occ[:, 2:], axis=1)


def collective_commutator_expectation(n_molecules: int) -> float:
    """<a|[A, A†]|a> for the symmetric single A-excitation of N molecules."""
    _check_size(n_molecules)
    dims = (MOLECULE_LEVELS,) * n_molecules
    lower = sum(
        (embed_factor(j, _transition(LEVEL_B, LEVEL_A), dims) for j in range(n_molecules)),
        Operator.zeros(dims),
    ) * (1.0 / math.sqrt(n_molecules))
    comm = commutator(lower, lower.dag())
    state = _dicke_vector(n_molecules, 1, 0).astype(complex)
    return float(np.real(np.vdot(state, comm.matrix @ state)))


@dataclass
class BosonizationReport:
    n_molecules: int
    single_excitation_error: float
    spectrum_embedding_error: float
    commutator_defect: float
    double_excitation_deviation: Optional[float] = None
    notes: List[str] = field(default_factory=list)


def _sorted_eigs(m: np.ndarray) -> np.ndarray:
    return np.sort(np.linalg.eigvalsh(m))


def bosonization_report(
    p: SystemParams, n_molecules: int, *, Omega: float = 0.0, double: bool = True
) -> BosonizationReport:
    """Compare the collective (bosonic) model with the exact N-molecule model."""
    _check_size(n_molecules)
    # single-excitation sector, cavity cutoff 2
    spec1 = SpaceSpec(2, 2, 2)
    h0, hi = build_rotating_frame(p, Omega, spec1)
    h_coll = h0 + hi
    cmap1 = collective_map(n_molecules, 2, 1).sector(1)
    coll = h_coll.block(cmap1.collective_indices(spec1))
    micro = build_microscopic(p, n_molecules, Omega, 2)
    v = cmap1.isometry
    sym = v.conj().T @ micro.matrix @ v
    coll_eigs = _sorted_eigs(coll)
    single_err = float(np.max(np.abs(_sorted_eigs(sym) - coll_eigs)))

    sector = np.flatnonzero(microscopic_excitations(micro.dims) == 1)
    full_eigs = _sorted_eigs(micro.block(sector))
    embed_err = float(max(np.min(np.abs(full_eigs - e)) for e in coll_eigs))

    report = BosonizationReport(
        n_molecules=n_molecules,
        single_excitation_error=single_err,
        spectrum_embedding_error=embed_err,
        commutator_defect=1.0 - collective_commutator_expectation(n_molecules),
    )
    if double and n_molecules >= 2:
        spec2 = SpaceSpec(3, 3, 3)
        h0, hi = build_rotating_frame(p, Omega, spec2)
        cmap2 = collective_map(n_molecules, 3, 2).sector(2)
        coll2 = (h0 + hi).block(cmap2.collective_indices(spec2))
        micro2 = build_microscopic(p, n_molecules, Omega, 3)
        v2 = cmap2.isometry
        sym2 = v2.conj().T @ micro2.matrix @ v2
        report.double_excitation_deviation = float(
            np.max(np.abs(_sorted_eigs(sym2) - _sorted_eigs(coll2)))
        )
    elif double:
        report.notes.append("double-excitation sector needs at least two molecules")
    return report
