"""Truncated composite Hilbert space: qubit ⊗ cavity ⊗ A-mode ⊗ C-mode.

Basis index = ((q * n_cavity + n) * n_A + n_a) * n_C + n_c, qubit slowest.
Qubit level q = 0 is the ground state |g>, q = 1 the excited state |e>, so
sigma_minus = |g><e| is the 2-level lowering matrix and sigma_z = diag(-1, 1).
Index 0 is the composite vacuum |g, 0, 0, 0>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Iterable, Sequence, Tuple, Union

import numpy as np

MODES: Tuple[str, ...] = ("qubit", "cavity", "A", "C")
BASIS_ORDER = "qubit,cavity,A,C"


class HilbertError(Exception):
    pass


class DimensionMismatch(HilbertError):
    pass


class ZeroNorm(HilbertError):
    pass


@dataclass(frozen=True)
class SpaceSpec:
    """Fock cutoffs (number of levels) of the three bosonic modes."""

    n_cavity: int = 2
    n_A: int = 2
    n_C: int = 2

    def __post_init__(self) -> None:
        for name in ("n_cavity", "n_A", "n_C"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 2:
                raise HilbertError(f"{name} must be an integer >= 2, got {v!r}")

    @property
    def dims(self) -> Tuple[int, int, int, int]:
        return (2, self.n_cavity, self.n_A, self.n_C)

    @property
    def dim(self) -> int:
        return 2 * self.n_cavity * self.n_A * self.n_C

    @classmethod
    def from_dims(cls, dims: Sequence[int]) -> "SpaceSpec":
        if len(dims) != 4 or dims[0] != 2:
            raise DimensionMismatch(f"not a qubit/cavity/A/C space: {tuple(dims)}")
        return cls(int(dims[1]), int(dims[2]), int(dims[3]))

    def index(self, q: int = 0, n_cavity: int = 0, n_A: int = 0, n_C: int = 0) -> int:
        for v, cut, name in zip((q, n_cavity, n_A, n_C), self.dims, MODES, strict=True):
            if not 0 <= v < cut:
                raise HilbertError(f"{name} level {v} outside cutoff {cut}")
        return ((q * self.n_cavity + n_cavity) * self.n_A + n_A) * self.n_C + n_C

    def basis_state(self, q: int = 0, n_cavity: int = 0, n_A: int = 0, n_C: int = 0) -> "StateVector":
        amp = np.zeros(self.dim, dtype=complex)
        amp[self.index(q, n_cavity, n_A, n_C)] = 1.0
        return StateVector(amp, self.dims)

    def vacuum(self) -> "StateVector":
        return self.basis_state()

    def occupations(self) -> np.ndarray:
        """(dim, 4) integer array of (q, n, n_a, n_c) labels in basis order."""
        return basis_occupations(self.dims)

    def excitation_number(self) -> np.ndarray:
        return self.occupations().sum(axis=1)

    def to_dict(self) -> Dict[str, int]:
        return {"n_cavity": self.n_cavity, "n_A": self.n_A, "n_C": self.n_C}

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "SpaceSpec":
        return cls(int(d["n_cavity"]), int(d["n_A"]), int(d["n_C"]))


@lru_cache(maxsize=32)
def basis_occupations(dims: Tuple[int, ...]) -> np.ndarray:
    grids = np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")
    occ = np.stack([g.ravel() for g in grids], axis=1)
    occ.setflags(write=False)
    return occ


def physical_mask(dims: Sequence[int]) -> np.ndarray:
    """Basis states with every bosonic factor (all but the first) below its top level."""
    occ = basis_occupations(tuple(dims))
    tops = np.asarray(dims[1:]) - 1
    return np.all(occ[:, 1:] < tops, axis=1)


def _as_dims(dims: Iterable[int]) -> Tuple[int, ...]:
    return tuple(int(d) for d in dims)


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense square complex matrix tagged with its tensor-factor dimensions."""

    matrix: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        dims = _as_dims(self.dims)
        n = math.prod(dims)
        if m.shape != (n, n):
            raise DimensionMismatch(f"matrix shape {m.shape} does not match dims {dims}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def identity(cls, dims: Sequence[int]) -> "Operator":
        d = _as_dims(dims)
        return cls(np.eye(math.prod(d), dtype=complex), d)

    @classmethod
    def zeros(cls, dims: Sequence[int]) -> "Operator":
        d = _as_dims(dims)
        n = math.prod(d)
        return cls(np.zeros((n, n), dtype=complex), d)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def _check(self, other: "Operator") -> None:
        if self.dims != other.dims:
            raise DimensionMismatch(f"operator dims {self.dims} vs {other.dims}")

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix - other.matrix, self.dims)

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, self.dims)

    def __mul__(self, c: complex) -> "Operator":
        if isinstance(c, Operator):
            return NotImplemented
        return Operator(self.matrix * c, self.dims)

    __rmul__ = __mul__

    def __matmul__(self, other: Union["Operator", "StateVector"]) -> Any:
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix @ other.matrix, self.dims)
        if isinstance(other, StateVector):
            if other.dims != self.dims:
                raise DimensionMismatch(f"operator dims {self.dims} vs state dims {other.dims}")
            return StateVector(self.matrix @ other.amplitudes, self.dims)
        return NotImplemented

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.dims)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_error() <= tol

    def is_antihermitian(self, tol: float = 1e-12) -> bool:
        return float(np.max(np.abs(self.matrix + self.matrix.conj().T), initial=0.0)) <= tol

    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def element(self, bra: "StateVector", ket: "StateVector") -> complex:
        return complex(np.vdot(bra.amplitudes, self.matrix @ ket.amplitudes))

    def block(self, indices: Sequence[int]) -> np.ndarray:
        idx = np.asarray(indices)
        return self.matrix[np.ix_(idx, idx)]


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    dims: Tuple[int, ...]

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        dims = _as_dims(self.dims)
        if a.shape[0] != math.prod(dims):
            raise DimensionMismatch(f"state length {a.shape[0]} does not match dims {dims}")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "dims", dims)

    def _check(self, other: "StateVector") -> None:
        if self.dims != other.dims:
            raise DimensionMismatch(f"state dims {self.dims} vs {other.dims}")

    def __add__(self, other: "StateVector") -> "StateVector":
        self._check(other)
        return StateVector(self.amplitudes + other.amplitudes, self.dims)

    def __sub__(self, other: "StateVector") -> "StateVector":
        self._check(other)
        return StateVector(self.amplitudes - other.amplitudes, self.dims)

    def __mul__(self, c: complex) -> "StateVector":
        return StateVector(self.amplitudes * c, self.dims)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ZeroNorm("cannot normalize the zero vector")
        return StateVector(self.amplitudes / n, self.dims)

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        self._check(other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "space": SpaceSpec.from_dims(self.dims).to_dict(),
            "basis_order": BASIS_ORDER,
            "amplitudes": [[float(z.real), float(z.imag)] for z in self.amplitudes],
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "StateVector":
        if d.get("basis_order", BASIS_ORDER) != BASIS_ORDER:
            raise HilbertError(f"unsupported basis order {d.get('basis_order')!r}")
        spec = SpaceSpec.from_dict(d["space"])
        amps = np.array([complex(re, im) for re, im in d["amplitudes"]], dtype=complex)
        return cls(amps, spec.dims)


def annihilator(cutoff: int) -> np.ndarray:
    """Truncated lowering matrix with sqrt(n) on the first superdiagonal."""
    if cutoff < 2:
        raise HilbertError(f"cutoff must be >= 2, got {cutoff}")
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)


def number(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.T.copy()
SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)


def embed_factor(index: int, local_op: np.ndarray, dims: Sequence[int]) -> Operator:
    """Place ``local_op`` on tensor factor ``index`` of an arbitrary product space."""
    d = _as_dims(dims)
    local = np.asarray(local_op, dtype=complex)
    if local.shape != (d[index], d[index]):
        raise DimensionMismatch(
            f"local operator shape {local.shape} does not match factor {index} of dim {d[index]}"
        )
    left = math.prod(d[:index])
    right = math.prod(d[index + 1 :])
    m = np.kron(np.kron(np.eye(left), local), np.eye(right))
    return Operator(m, d)


def embed(mode: str, local_op: np.ndarray, spec: SpaceSpec) -> Operator:
    if mode not in MODES:
        raise HilbertError(f"unknown mode {mode!r}; expected one of {MODES}")
    return embed_factor(MODES.index(mode), local_op, spec.dims)


@dataclass(frozen=True, eq=False)
class ModeOperators:
    """Embedded lowering operators of one SpaceSpec."""

    spec: SpaceSpec
    sm: Operator
    a: Operator
    A: Operator
    C: Operator
    sz: Operator

    @property
    def identity(self) -> Operator:
        return Operator.identity(self.spec.dims)

    def excitation_number(self) -> Operator:
        sp = self.sm.dag()
        return (
            sp @ self.sm
            + self.a.dag() @ self.a
            + self.A.dag() @ self.A
            + self.C.dag() @ self.C
        )


@lru_cache(maxsize=16)
def mode_operators(spec: SpaceSpec) -> ModeOperators:
    return ModeOperators(
        spec=spec,
        sm=embed("qubit", SIGMA_MINUS, spec),
        a=embed("cavity", annihilator(spec.n_cavity), spec),
        A=embed("A", annihilator(spec.n_A), spec),
        C=embed("C", annihilator(spec.n_C), spec),
        sz=embed("qubit", SIGMA_Z, spec),
    )


def commutator(x: Operator, y: Operator) -> Operator:
    return x @ y - y @ x


def expectation(state: StateVector, op: Operator) -> complex:
    if state.dims != op.dims:
        raise DimensionMismatch(f"state dims {state.dims} vs operator dims {op.dims}")
    psi = state.amplitudes
    return complex(np.vdot(psi, op.matrix @ psi))


def _norms(s1: StateVector, s2: StateVector) -> float:
    n1, n2 = s1.norm(), s2.norm()
    if n1 == 0.0 or n2 == 0.0:
        raise ZeroNorm("fidelity undefined for a zero-norm state")
    return n1 * n2


def fidelity(s1: StateVector, s2: StateVector) -> float:
    """|<s1|s2>|² for normalized inputs (norms are divided out)."""
    s1._check(s2)
    n = _norms(s1, s2)
    return min(1.0, abs(s1.inner(s2)) ** 2 / (n * n))


def phase_optimized_fidelity(
    s1: StateVector, s2: StateVector, partition: Union[np.ndarray, Sequence[int]]
) -> float:
    """Fidelity maximised over one relative phase between two groups of basis states.

    ``partition`` is a boolean mask (or index list) of the first group; the
    complement is the second group. The optimum of |a + e^{iφ} b|² is
    (|a| + |b|)².
    """
    s1._check(s2)
    n = _norms(s1, s2)
    mask = np.zeros(s1.amplitudes.shape[0], dtype=bool)
    part = np.asarray(partition)
    if part.dtype == bool:
        if part.shape != mask.shape:
            raise DimensionMismatch(f"partition mask length {part.shape} vs {mask.shape}")
        mask = part
    else:
        mask[part.astype(int)] = True
    prod = s1.amplitudes.conj() * s2.amplitudes
    a = abs(prod[mask].sum())
    b = abs(prod[~mask].sum())
    return min(1.0, (a + b) ** 2 / (n * n))


def vacuum_partition(spec: SpaceSpec) -> np.ndarray:
    """Mask of the zero-excitation sector (the gamma branch of a qubit superposition)."""
    return spec.excitation_number() == 0
