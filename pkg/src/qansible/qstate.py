"""Pure states, density matrices, gates and projective spin measurement.

Qubits are indexed from 0, with qubit 0 the most significant factor. Bit 0
is the spin-up state |+z> = (1, 0), bit 1 is |-z> = (0, 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import qlin
from .qlin import ALGEBRA_TOL, HERMITIAN_TOL

SQRT1_2 = 1.0 / math.sqrt(2.0)
SPIN_UP = 0.5
SPIN_DOWN = -0.5

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

CNOT_MATRIX = np.array(
    [[1, 0, 0, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1],
     [0, 0, 1, 0]],
    dtype=np.complex128,
)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def _qubit_count(dim: int) -> int:
    n = dim.bit_length() - 1
    if n < 1 or 1 << n != dim:
        raise qlin.ShapeError(f"dimension {dim} is not 2**n for n >= 1")
    return n


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector over ``n_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = qlin.as_cmatrix(self.amplitudes)
        if amps.ndim != 1:
            raise qlin.ShapeError(f"amplitudes must be a vector, got shape {amps.shape}")
        _qubit_count(amps.size)
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"state is not normalized: norm = {norm!r}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        amps = qlin.as_cmatrix(amplitudes)
        return cls(amps / np.linalg.norm(amps))

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def inner(self, other: "PureState") -> complex:
        """<self|other>."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "PureState") -> float:
        return abs(self.inner(other)) ** 2

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(qlin.kron(self.amplitudes, other.amplitudes))

    def __neg__(self) -> "PureState":
        return PureState(-self.amplitudes)

    def __repr__(self):
        return f"PureState(n_qubits={self.n_qubits}, amplitudes={self.amplitudes!r})"


def states_equal(a: PureState, b: PureState, tol: float = ALGEBRA_TOL) -> bool:
    """Exact comparison, global phase included."""
    return a.dim == b.dim and qlin.max_abs_diff(a.amplitudes, b.amplitudes) <= tol


def states_equivalent(a: PureState, b: PureState, tol: float = ALGEBRA_TOL) -> bool:
    """Comparison up to a global phase: |<a|b>| = 1."""
    return a.dim == b.dim and abs(abs(a.inner(b)) - 1.0) <= tol


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator.

    Pass ``check=False`` to skip the eigenvalue-based positivity test when the
    matrix is positive by construction (outer products, partial traces).
    """

    matrix: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        m = qlin.as_cmatrix(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise qlin.ShapeError(f"density matrix must be square, got {m.shape}")
        _qubit_count(m.shape[0])
        asym = qlin.max_asymmetry(m)
        if asym > HERMITIAN_TOL:
            raise ValueError(f"density matrix is not Hermitian: max asymmetry {asym:.3e}")
        tr = qlin.trace(m)
        if abs(tr - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"density matrix trace is {tr}, expected 1")
        if self.check:
            low = qlin.hermitian_eigenvalues(m)[-1]
            if low < -1e-9:
                raise ValueError(f"density matrix has negative eigenvalue {low:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def n_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.real(np.vdot(self.matrix.conj().T, self.matrix)))

    @classmethod
    def maximally_mixed(cls, n_qubits: int = 1) -> "DensityMatrix":
        d = 2 ** n_qubits
        return cls(qlin.identity(d) / d, check=False)


@dataclass(frozen=True, eq=False)
class Gate:
    """Unitary acting on ``arity`` qubits."""

    matrix: np.ndarray
    name: str = ""

    def __post_init__(self):
        m = qlin.as_cmatrix(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise qlin.ShapeError(f"gate matrix must be square, got {m.shape}")
        _qubit_count(m.shape[0])
        dev = qlin.max_abs_diff(m.conj().T @ m, qlin.identity(m.shape[0]))
        if dev > ALGEBRA_TOL:
            raise ValueError(f"gate {self.name!r} is not unitary: |U^dagger U - I| = {dev:.3e}")
        object.__setattr__(self, "matrix", _frozen(m))

    @property
    def arity(self) -> int:
        return self.matrix.shape[0].bit_length() - 1


@dataclass(frozen=True)
class MeasurementAxis:
    """Unit direction in space along which a spin projection is measured."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2)
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"axis must be a unit vector, norm is {norm!r}")

    @classmethod
    def X(cls) -> "MeasurementAxis":
        return cls(1.0, 0.0, 0.0)

    @classmethod
    def Y(cls) -> "MeasurementAxis":
        return cls(0.0, 1.0, 0.0)

    @classmethod
    def Z(cls) -> "MeasurementAxis":
        return cls(0.0, 0.0, 1.0)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> "MeasurementAxis":
        return cls(math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))

    @classmethod
    def normalized(cls, v: Sequence[float]) -> "MeasurementAxis":
        v = np.asarray(v, dtype=float)
        v = v / np.linalg.norm(v)
        return cls(*(float(c) for c in v))

    def pauli(self) -> np.ndarray:
        return self.x * PAULI_X + self.y * PAULI_Y + self.z * PAULI_Z

    def eigenvectors(self) -> tuple[np.ndarray, np.ndarray]:
        """(|+n>, |-n>) for this axis.

        |+n> = (cos t/2, e^{ip} sin t/2) and |-n> = (-e^{-ip} sin t/2, cos t/2),
        which reduce to (1, 1)/sqrt2 and (-1, 1)/sqrt2 on the x axis.
        """
        theta = math.acos(max(-1.0, min(1.0, self.z)))
        phi = math.atan2(self.y, self.x)
        c, s = math.cos(theta / 2), math.sin(theta / 2)
        phase = complex(math.cos(phi), math.sin(phi))
        up = np.array([c, phase * s], dtype=np.complex128)
        down = np.array([-phase.conjugate() * s, c], dtype=np.complex128)
        return up, down


@dataclass(frozen=True, eq=False)
class SpinObservable:
    """Spin projection S_n = (n . sigma) / 2 in units of hbar."""

    axis: MeasurementAxis

    @property
    def matrix(self) -> np.ndarray:
        return 0.5 * self.axis.pauli()


@dataclass(frozen=True, eq=False)
class MeasurementBranch:
    """One outcome of a projective spin measurement.

    ``post_state`` is ``None`` when the branch has probability zero.
    """

    outcome: float
    probability: float
    post_state: Optional[PureState]


class BellKind(Enum):
    PSI_MINUS = "psi-"
    PSI_PLUS = "psi+"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"


def basis_state(bits: Sequence[int]) -> PureState:
    bits = list(bits)
    if not bits:
        raise ValueError("bit list must be nonempty")
    if any(b not in (0, 1) for b in bits):
        raise ValueError(f"bits must be 0 or 1, got {bits}")
    index = int("".join(str(b) for b in bits), 2)
    amps = np.zeros(2 ** len(bits), dtype=np.complex128)
    amps[index] = 1.0
    return PureState(amps)


def x_eigenstate(sign: int) -> PureState:
    """|+x> = (1, 1)/sqrt2 for sign > 0, |-x> = (-1, 1)/sqrt2 for sign < 0."""
    if sign > 0:
        return PureState(np.array([SQRT1_2, SQRT1_2], dtype=np.complex128))
    if sign < 0:
        return PureState(np.array([-SQRT1_2, SQRT1_2], dtype=np.complex128))
    raise ValueError("sign must be nonzero")


def bell_state(kind: BellKind | str) -> PureState:
    kind = BellKind(kind)
    s = SQRT1_2
    amps = {
        BellKind.PSI_MINUS: [0, s, -s, 0],
        BellKind.PSI_PLUS: [0, s, s, 0],
        BellKind.PHI_PLUS: [s, 0, 0, s],
        BellKind.PHI_MINUS: [s, 0, 0, -s],
    }[kind]
    return PureState(np.array(amps, dtype=np.complex128))


def ghz_state(n_qubits: int) -> PureState:
    """(|0...0> + |1...1>)/sqrt2."""
    if n_qubits < 1:
        raise ValueError("GHZ state needs at least one qubit")
    amps = np.zeros(2 ** n_qubits, dtype=np.complex128)
    amps[0] = amps[-1] = SQRT1_2
    return PureState(amps)


def cnot() -> Gate:
    """Controlled-NOT with the first factor as control."""
    return Gate(CNOT_MATRIX, name="cnot")


def identity_gate(arity: int = 1) -> Gate:
    return Gate(qlin.identity(2 ** arity), name="identity")


def orthogonal_complement(psi: PureState) -> PureState:
    """The single-qubit state (-b*, a*) orthogonal to psi = (a, b)."""
    if psi.n_qubits != 1:
        raise ValueError("orthogonal complement is defined here for one qubit only")
    a, b = psi.amplitudes
    return PureState(np.array([-np.conj(b), np.conj(a)], dtype=np.complex128))


def known_state_cloner(psi: PureState, blank: PureState) -> Gate:
    """Unitary that copies ``psi`` and its orthogonal complement onto ``blank``.

    With psi0 = psi, psi1 = psi-perp, b0 = blank, b1 = blank-perp, the gate
    sends psi_i (x) b_j to psi_i (x) psi_(i xor j). For psi = blank = |+z>
    this is exactly the CNOT matrix.
    """
    psi = psi if isinstance(psi, PureState) else PureState(psi)
    blank = blank if isinstance(blank, PureState) else PureState(blank)
    if psi.n_qubits != 1 or blank.n_qubits != 1:
        raise ValueError("cloner inputs must be single-qubit states")
    psis = (psi.amplitudes, orthogonal_complement(psi).amplitudes)
    blanks = (blank.amplitudes, orthogonal_complement(blank).amplitudes)
    u = np.zeros((4, 4), dtype=np.complex128)
    for i in (0, 1):
        for j in (0, 1):
            out = np.kron(psis[i], psis[i ^ j])
            inp = np.kron(psis[i], blanks[j])
            u += np.outer(out, inp.conj())
    return Gate(u, name="known_state_cloner")


def _check_targets(targets: Sequence[int], n_qubits: int, arity: Optional[int] = None) -> list[int]:
    targets = [int(t) for t in targets]
    if arity is not None and len(targets) != arity:
        raise ValueError(f"gate acts on {arity} qubits, got {len(targets)} targets")
    if len(set(targets)) != len(targets):
        raise ValueError(f"duplicate target qubits: {targets}")
    for t in targets:
        if not 0 <= t < n_qubits:
            raise IndexError(f"qubit index {t} out of range for {n_qubits} qubits")
    return targets


def apply_matrix(amps: np.ndarray, n_qubits: int, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to ``targets`` of a raw amplitude vector."""
    k = len(targets)
    psi = amps.reshape([2] * n_qubits)
    op = matrix.reshape([2] * (2 * k))
    psi = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(targets)))
    # tensordot leaves the acted-on axes in front
    psi = np.moveaxis(psi, list(range(k)), list(targets))
    return psi.reshape(-1)


def apply_gate(state: PureState, gate: Gate, targets: Sequence[int]) -> PureState:
    targets = _check_targets(targets, state.n_qubits, gate.arity)
    return PureState.normalized(apply_matrix(state.amplitudes, state.n_qubits, gate.matrix, targets))


def permute_qubits(state: PureState, order: Sequence[int]) -> PureState:
    """Reorder factors so that new qubit i is old qubit ``order[i]``."""
    order = _check_targets(order, state.n_qubits)
    if len(order) != state.n_qubits:
        raise ValueError("order must list every qubit exactly once")
    psi = state.amplitudes.reshape([2] * state.n_qubits).transpose(order)
    return PureState(psi.reshape(-1))


def to_density(state: PureState) -> DensityMatrix:
    a = state.amplitudes
    return DensityMatrix(np.outer(a, a.conj()), check=False)


def reduced_state(rho: DensityMatrix, keep) -> DensityMatrix:
    reduced = qlin.partial_trace(rho.matrix, [2] * rho.n_qubits, keep)
    return DensityMatrix(reduced, check=False)


def expectation(rho: DensityMatrix, obs: SpinObservable, qubit: int) -> float:
    _check_targets([qubit], rho.n_qubits)
    local = qlin.partial_trace(rho.matrix, [2] * rho.n_qubits, [qubit])
    return float(np.real(qlin.trace(local @ obs.matrix)))


def project_out(amps: np.ndarray, n_qubits: int, qubit: int, vec: np.ndarray) -> np.ndarray:
    """Contract qubit ``qubit`` with <vec|; returns the unnormalized remainder."""
    psi = np.moveaxis(amps.reshape([2] * n_qubits), qubit, 0).reshape(2, -1)
    return vec.conj() @ psi


def measure_branches(state: PureState, axis: MeasurementAxis, qubit: int) -> list[MeasurementBranch]:
    """Both outcomes of measuring the spin of ``qubit`` along ``axis``.

    Branches come in the order (+1/2, -1/2); a branch of probability zero is
    kept with ``post_state=None``.
    """
    n = state.n_qubits
    _check_targets([qubit], n)
    branches = []
    for outcome, vec in zip((SPIN_UP, SPIN_DOWN), axis.eigenvectors()):
        projector = np.outer(vec, vec.conj())
        projected = apply_matrix(state.amplitudes, n, projector, [qubit])
        prob = float(np.vdot(projected, projected).real)
        post = PureState(projected / math.sqrt(prob)) if prob > 1e-15 else None
        branches.append(MeasurementBranch(outcome, prob if post is not None else 0.0, post))
    return branches


def measure_sample(
    state: PureState, axis: MeasurementAxis, qubit: int, rng: np.random.Generator
) -> MeasurementBranch:
    """Draw one measurement branch with its Born probability.

    Consumes one uniform variate from ``rng`` unless the outcome is certain.
    """
    up, down = measure_branches(state, axis, qubit)
    if down.post_state is None or rng.random() < up.probability:
        return up
    return down
