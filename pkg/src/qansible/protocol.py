"""The ansible protocol: Bob's basis choice, Alice's CNOT cascade and readout.

Bob holds qubit 1 of a singlet, Alice qubit 0. Bob encodes bit 0 by measuring
along z and bit 1 by measuring along x. Alice copies whatever she received
onto fresh |+z> ancillas with CNOT, measures the first ``k_x`` qubits along x
and the remaining ``k_z`` along z, and decodes from the mean z projection.
"""
from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import qlin
from .qstate import (
    CNOT_MATRIX,
    BellKind,
    MeasurementAxis,
    MeasurementBranch,
    PureState,
    apply_matrix,
    basis_state,
    bell_state,
    cnot,
    measure_branches,
    permute_qubits,
    project_out,
    x_eigenstate,
)

DEFAULT_MAX_QUBITS = 12
ALICE, BOB = 0, 1


class QubitBudgetError(RuntimeError):
    """Raised when a register would exceed the configured qubit budget."""


class Decision(Enum):
    ZERO = 0
    ONE = 1
    INDETERMINATE = "indeterminate"


def bob_axis(bob_bit: int) -> MeasurementAxis:
    if bob_bit == 0:
        return MeasurementAxis.Z()
    if bob_bit == 1:
        return MeasurementAxis.X()
    raise ValueError(f"bob_bit must be 0 or 1, got {bob_bit!r}")


@dataclass(frozen=True)
class ProtocolConfig:
    n_total: int
    k_x: int
    k_z: int
    bob_bit: int
    seed: int = 0
    max_qubits: int = DEFAULT_MAX_QUBITS

    def __post_init__(self):
        if self.n_total < 1:
            raise ValueError("n_total must be at least 1")
        if self.k_x < 0 or self.k_z < 0:
            raise ValueError("sub-ensemble sizes must be nonnegative")
        if self.k_x + self.k_z != self.n_total:
            raise ValueError(
                f"split mismatch: k_x + k_z = {self.k_x + self.k_z}, n_total = {self.n_total}"
            )
        if self.bob_bit not in (0, 1):
            raise ValueError(f"bob_bit must be 0 or 1, got {self.bob_bit!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_total > self.max_qubits:
            raise QubitBudgetError(
                f"n_total = {self.n_total} exceeds the qubit budget of {self.max_qubits}"
            )


@dataclass(frozen=True)
class DecisionRule:
    """Alice reads 0 when |<S_z>| >= threshold and 1 below it."""

    threshold: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.threshold < 0.5:
            raise ValueError(f"threshold must lie strictly between 0 and 1/2, got {self.threshold!r}")


@dataclass(frozen=True)
class SweepResult:
    """Outcomes of Alice's two sub-ensembles, in spin units."""

    x_outcomes: tuple[Fraction, ...]
    z_outcomes: tuple[Fraction, ...]

    @property
    def mean_sx(self) -> Fraction:
        return mean_spin(self.x_outcomes)

    @property
    def mean_sz(self) -> Fraction:
        return mean_spin(self.z_outcomes)


@dataclass(frozen=True)
class RunRecord:
    bob_bit: int
    bob_axis: str
    bob_outcome: Fraction
    alice_x_outcomes: tuple[Fraction, ...]
    alice_z_outcomes: tuple[Fraction, ...]
    mean_sx: Fraction
    mean_sz: Fraction
    decoded: Decision


HALF = Fraction(1, 2)


def mean_spin(outcomes: Sequence[Fraction]) -> Fraction:
    """Exact average of +-1/2 outcomes; the empty average is 0."""
    k = len(outcomes)
    if k == 0:
        return Fraction(0)
    ups = sum(1 for o in outcomes if o > 0)
    return Fraction(2 * ups - k, 2 * k)


def _spin(outcome: float) -> Fraction:
    return HALF if outcome > 0 else -HALF


# -- Bob ----------------------------------------------------------------------


def singlet() -> PureState:
    return bell_state(BellKind.PSI_MINUS)


def alice_factor(state: PureState, bob_vec: np.ndarray) -> PureState:
    """Alice's qubit after Bob's qubit has collapsed onto ``bob_vec``."""
    rest = project_out(state.amplitudes, state.n_qubits, BOB, bob_vec)
    return PureState.normalized(rest)


def bob_encode_branches(bob_bit: int) -> list[tuple[MeasurementBranch, PureState]]:
    """Bob measures his half of the singlet; returns each branch with Alice's qubit.

    Branches are ordered (+1/2, -1/2) by Bob's outcome.
    """
    axis = bob_axis(bob_bit)
    source = singlet()
    out = []
    for branch, vec in zip(measure_branches(source, axis, BOB), axis.eigenvectors()):
        out.append((branch, alice_factor(source, vec)))
    return out


# -- Alice: amplification ------------------------------------------------------


def alice_amplify(
    initial: PureState,
    n_total: int,
    controls: Optional[Sequence[int]] = None,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> PureState:
    """Grow ``initial`` to ``n_total`` qubits by repeated CNOT onto fresh |+z>.

    Step ``i`` appends an ancilla as qubit ``i + 1`` and uses ``controls[i]``
    (default 0, the original particle) as the control.
    """
    if n_total < 1:
        raise ValueError("n_total must be at least 1")
    if n_total > max_qubits:
        raise QubitBudgetError(f"n_total = {n_total} exceeds the qubit budget of {max_qubits}")
    if initial.n_qubits != 1:
        raise ValueError("amplification starts from a single qubit")
    steps = n_total - 1
    if controls is None:
        controls = [0] * steps
    if len(controls) != steps:
        raise ValueError(f"need {steps} control indices, got {len(controls)}")

    blank = np.array([1.0, 0.0], dtype=np.complex128)
    amps = initial.amplitudes
    for step, control in enumerate(controls):
        n = step + 1
        if not 0 <= control < n:
            raise IndexError(f"control {control} is not an existing qubit (have {n})")
        amps = np.kron(amps, blank)
        amps = apply_matrix(amps, n + 1, CNOT_MATRIX, [control, n])
    return PureState(amps)


# -- Alice: readout ------------------------------------------------------------


def plan_axes(k_x: int, k_z: int) -> list[MeasurementAxis]:
    return [MeasurementAxis.X()] * k_x + [MeasurementAxis.Z()] * k_z


def _check_split(state: PureState, k_x: int, k_z: int) -> None:
    if k_x < 0 or k_z < 0 or k_x + k_z != state.n_qubits:
        raise ValueError(
            f"split mismatch: k_x + k_z = {k_x + k_z}, register has {state.n_qubits} qubits"
        )


def _leading_branches(amps: np.ndarray, eig_rows: np.ndarray):
    """Measure the leading qubit of ``amps``; returns probabilities and remainders."""
    rest = eig_rows @ amps.reshape(2, -1)
    probs = (rest.real ** 2 + rest.imag ** 2).sum(axis=1)
    return probs, rest


@lru_cache(maxsize=None)
def _eig_rows(axis: MeasurementAxis) -> np.ndarray:
    up, down = axis.eigenvectors()
    rows = np.stack([up.conj(), down.conj()])
    rows.setflags(write=False)
    return rows


_OUTCOMES = (HALF, -HALF)


def alice_measure_plan(state: PureState, k_x: int, k_z: int, rng: np.random.Generator) -> SweepResult:
    """Sample Alice's readout: qubits 0..k_x-1 along x, the rest along z.

    Measured qubits are projected out one at a time, so each draw sees the
    state collapsed by all earlier outcomes.
    """
    _check_split(state, k_x, k_z)
    amps = state.amplitudes
    outcomes = []
    for axis in plan_axes(k_x, k_z):
        probs, rest = _leading_branches(amps, _eig_rows(axis))
        pick = 0 if rng.random() * (probs[0] + probs[1]) < probs[0] else 1
        outcomes.append(_OUTCOMES[pick])
        amps = rest[pick] / math.sqrt(probs[pick])
    return SweepResult(tuple(outcomes[:k_x]), tuple(outcomes[k_x:]))


def enumerate_measure_plan(
    state: PureState,
    k_x: int,
    k_z: int,
    order: Optional[Sequence[int]] = None,
    path_tol: float = 1e-15,
) -> dict[tuple[Fraction, ...], float]:
    """Exact joint distribution of every outcome path of the readout.

    Keys are outcome tuples indexed by qubit (not by measurement order);
    ``order`` sets the sequence in which qubits are measured. Paths whose
    probability falls below ``path_tol`` are dropped.
    """
    _check_split(state, k_x, k_z)
    n = state.n_qubits
    order = list(range(n)) if order is None else [int(q) for q in order]
    if sorted(order) != list(range(n)):
        raise ValueError(f"order must be a permutation of range({n})")
    axes = plan_axes(k_x, k_z)
    rows = [_eig_rows(axes[q]) for q in order]
    amps0 = permute_qubits(state, order).amplitudes

    table: dict[tuple[Fraction, ...], float] = {}

    def walk(amps: np.ndarray, depth: int, weight: float, path: list[Fraction]):
        if depth == n:
            by_qubit = [None] * n
            for q, o in zip(order, path):
                by_qubit[q] = o
            key = tuple(by_qubit)
            table[key] = table.get(key, 0.0) + weight
            return
        probs, rest = _leading_branches(amps, rows[depth])
        for pick in (0, 1):
            p = float(probs[pick])
            if weight * p <= path_tol:
                continue
            path.append(_OUTCOMES[pick])
            walk(rest[pick] / math.sqrt(p), depth + 1, weight * p, path)
            path.pop()

    walk(amps0, 0, 1.0, [])
    return table


def sweep_statistics(
    paths: dict[tuple[Fraction, ...], float], k_x: int
) -> dict[tuple[Fraction, Fraction], float]:
    """Collapse outcome paths to the (mean_sx, mean_sz) table."""
    out: dict[tuple[Fraction, Fraction], float] = defaultdict(float)
    for path, p in paths.items():
        out[(mean_spin(path[:k_x]), mean_spin(path[k_x:]))] += p
    return dict(out)


def alice_decide(mean_sx, mean_sz, rule: DecisionRule = DecisionRule()) -> Decision:
    """|<S_z>| above the threshold reads 0, below reads 1, on it is indeterminate."""
    del mean_sx  # the rule reads the z sub-ensemble only
    m = abs(Fraction(mean_sz))
    t = Fraction(rule.threshold)
    if m > t:
        return Decision.ZERO
    if m < t:
        return Decision.ONE
    return Decision.INDETERMINATE


# -- Trials --------------------------------------------------------------------


@lru_cache(maxsize=64)
def _prepared_branches(bob_bit: int, n_total: int, max_qubits: int):
    out = []
    for branch, alice in bob_encode_branches(bob_bit):
        out.append((branch.probability, _spin(branch.outcome), alice_amplify(alice, n_total, max_qubits=max_qubits)))
    return tuple(out)


def trial_rng(seed: int, index: Optional[int] = None) -> np.random.Generator:
    """Generator for one trial; ``index`` derives an independent sub-stream."""
    if index is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def run_single_trial(
    config: ProtocolConfig,
    rule: DecisionRule = DecisionRule(),
    rng: Optional[np.random.Generator] = None,
) -> RunRecord:
    """One Bob measurement, one cascade and one readout sweep.

    Deterministic given ``config.seed`` when ``rng`` is not supplied.
    """
    if rng is None:
        rng = trial_rng(config.seed)
    branches = _prepared_branches(config.bob_bit, config.n_total, config.max_qubits)
    p_up = branches[0][0]
    _, bob_outcome, register = branches[0] if rng.random() < p_up else branches[1]
    sweep = alice_measure_plan(register, config.k_x, config.k_z, rng)
    mean_sx, mean_sz = sweep.mean_sx, sweep.mean_sz
    return RunRecord(
        bob_bit=config.bob_bit,
        bob_axis="z" if config.bob_bit == 0 else "x",
        bob_outcome=bob_outcome,
        alice_x_outcomes=sweep.x_outcomes,
        alice_z_outcomes=sweep.z_outcomes,
        mean_sx=mean_sx,
        mean_sz=mean_sz,
        decoded=alice_decide(mean_sx, mean_sz, rule),
    )


def run_trials(
    config: ProtocolConfig,
    trials: int,
    rule: DecisionRule = DecisionRule(),
    workers: int = 1,
) -> list[RunRecord]:
    """Run independent trials; trial ``i`` uses the sub-stream (seed, i).

    Results do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")

    def one(i: int) -> RunRecord:
        return run_single_trial(config, rule, trial_rng(config.seed, i))

    if workers <= 1:
        return [one(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(trials), chunksize=256))


# -- Equation audit ------------------------------------------------------------


@dataclass(frozen=True)
class AuditEntry:
    id: str
    description: str
    deviation: float

    @property
    def passed(self) -> bool:
        return self.deviation <= qlin.ALGEBRA_TOL


@dataclass(frozen=True)
class EquationAuditReport:
    entries: tuple[AuditEntry, ...]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def max_deviation(self) -> float:
        return max(e.deviation for e in self.entries)

    def __getitem__(self, key: str) -> AuditEntry:
        for e in self.entries:
            if e.id == key:
                return e
        raise KeyError(key)


AUDIT_IDS = (
    "singlet",
    "z_basis",
    "cnot_matrix",
    "clone_up_z",
    "clone_down_z",
    "plus_x_decomposition",
    "cnot_plus_x_to_phi_plus",
    "phi_plus_marginals",
    "mixed_input_cloning",
    "minus_x_decomposition",
    "cnot_minus_x_to_minus_phi_minus",
)


def audit_equations(cnot_matrix: Optional[np.ndarray] = None) -> EquationAuditReport:
    """Recompute each displayed identity of the protocol and record deviations.

    The left-hand sides are built from the library (eigenvectors of the spin
    observables, :func:`cnot`, partial traces); the right-hand sides are the
    literal vectors and matrices. ``cnot_matrix`` replaces the gate used on
    the left-hand sides, which lets tests inject a faulty CNOT.
    """
    dev = qlin.max_abs_diff
    kron = qlin.kron
    s = 1.0 / math.sqrt(2.0)
    u = cnot().matrix if cnot_matrix is None else qlin.as_cmatrix(cnot_matrix)

    up_z_lit = np.array([1, 0], dtype=complex)
    down_z_lit = np.array([0, 1], dtype=complex)
    up_z, down_z = MeasurementAxis.Z().eigenvectors()
    up_x, down_x = MeasurementAxis.X().eigenvectors()
    entries = []

    def add(i: int, text: str, value: float):
        entries.append(AuditEntry(AUDIT_IDS[i], text, float(value)))

    psi_minus = singlet().amplitudes
    from_z = (kron(up_z, down_z) - kron(down_z, up_z)) * s
    from_x = (kron(up_x, down_x) - kron(down_x, up_x)) * s
    add(0, "singlet written in the z and in the x eigenbasis",
        max(dev(psi_minus, from_z), dev(psi_minus, from_x),
            dev(psi_minus, np.array([0, s, -s, 0]))))

    add(1, "|+z>, |-z> as unit columns",
        max(dev(basis_state([0]).amplitudes, up_z_lit), dev(basis_state([1]).amplitudes, down_z_lit),
            dev(up_z, up_z_lit), dev(down_z, down_z_lit)))

    literal_cnot = np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    )
    add(2, "CNOT matrix", dev(u, literal_cnot))

    add(3, "CNOT |+z>|+z> = |+z>|+z>", dev(qlin.matmul(u, kron(up_z, up_z)), kron(up_z_lit, up_z_lit)))
    add(4, "CNOT |-z>|+z> = |-z>|-z>", dev(qlin.matmul(u, kron(down_z, up_z)), kron(down_z_lit, down_z_lit)))

    add(5, "|+x> = (1, 1)/sqrt2 = (|+z> + |-z>)/sqrt2",
        max(dev(up_x, s * np.array([1, 1])), dev(up_x, s * (up_z_lit + down_z_lit)),
            dev(x_eigenstate(+1).amplitudes, up_x)))

    phi_plus = bell_state(BellKind.PHI_PLUS).amplitudes
    lhs = qlin.matmul(u, kron(up_x, up_z))
    by_linearity = s * (qlin.matmul(u, kron(up_z, up_z)) + qlin.matmul(u, kron(down_z, up_z)))
    literal_phi_plus = s * (kron(up_z_lit, up_z_lit) + kron(down_z_lit, down_z_lit))
    add(6, "CNOT |+x>|+z> = Phi+",
        max(dev(lhs, literal_phi_plus), dev(by_linearity, literal_phi_plus), dev(phi_plus, literal_phi_plus)))

    rho = np.outer(lhs, lhs.conj())
    half_id = 0.5 * np.eye(2)
    add(7, "both marginals of Phi+ are I/2",
        max(dev(qlin.partial_trace(rho, [2, 2], [0]), half_id),
            dev(qlin.partial_trace(rho, [2, 2], [1]), half_id)))

    p_up = np.outer(up_z_lit, up_z_lit)
    p_down = np.outer(down_z_lit, down_z_lit)
    mixed_in = kron(half_id, np.outer(up_z, up_z.conj()))
    out = qlin.matmul(qlin.matmul(u, mixed_in), qlin.dagger(u))
    add(8, "CNOT (I/2 x |+z><+z|) CNOT^dagger = (P+ x P+ + P- x P-)/2",
        dev(out, 0.5 * (kron(p_up, p_up) + kron(p_down, p_down))))

    add(9, "|-x> = (-1, 1)/sqrt2 = -(|+z> - |-z>)/sqrt2",
        max(dev(down_x, s * np.array([-1, 1])), dev(down_x, -s * (up_z_lit - down_z_lit)),
            dev(x_eigenstate(-1).amplitudes, down_x)))

    phi_minus = bell_state(BellKind.PHI_MINUS).amplitudes
    lhs = qlin.matmul(u, kron(down_x, up_z))
    literal = -s * (kron(up_z_lit, up_z_lit) - kron(down_z_lit, down_z_lit))
    add(10, "CNOT |-x>|+z> = -Phi- with its sign",
        max(dev(lhs, literal), dev(-phi_minus, literal)))

    return EquationAuditReport(tuple(entries))


__all__ = [
    "AUDIT_IDS",
    "AuditEntry",
    "Decision",
    "DecisionRule",
    "EquationAuditReport",
    "ProtocolConfig",
    "QubitBudgetError",
    "RunRecord",
    "SweepResult",
    "alice_amplify",
    "alice_decide",
    "alice_measure_plan",
    "audit_equations",
    "bob_encode_branches",
    "enumerate_measure_plan",
    "run_single_trial",
    "run_trials",
    "singlet",
    "sweep_statistics",
    "trial_rng",
]
