"""Exact and sampled statistics of Alice's readout, and distinguishability measures.

Two models of Alice's register are compared:

* ``TRUE_DYNAMICS`` evolves the full state vector: Bob's collapse, the CNOT
  cascade, and sequential measurement of every qubit.
* ``PAPER_INDEPENDENT_MIXTURE`` treats each of Alice's particles as an
  independent copy of the single-particle state claimed for it: |+z> or |-z>
  when Bob measured z, the unpolarized state I/2 when Bob measured x.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Hashable, Mapping

import numpy as np
from scipy import stats

from . import qlin
from .protocol import (
    DEFAULT_MAX_QUBITS,
    Decision,
    DecisionRule,
    ProtocolConfig,
    QubitBudgetError,
    alice_amplify,
    alice_decide,
    bob_encode_branches,
    enumerate_measure_plan,
    run_trials,
    sweep_statistics,
)
from .qstate import (
    DensityMatrix,
    MeasurementAxis,
    to_density,
    x_eigenstate,
)

PROB_TOL = 1e-12


class ModelKind(Enum):
    TRUE_DYNAMICS = "true"
    PAPER_INDEPENDENT_MIXTURE = "paper"


class OutcomeDistribution:
    """Finite probability table keyed by outcome statistic.

    Keys are hashable and exact: ``(mean_sx, mean_sz)`` pairs of Fractions,
    or :class:`Decision` values.
    """

    def __init__(self, table: Mapping[Hashable, float], tol: float = PROB_TOL):
        probs = {k: float(v) for k, v in table.items()}
        if not probs:
            raise ValueError("distribution must have nonempty support")
        low = min(probs.values())
        if low < -tol:
            raise ValueError(f"negative probability {low!r}")
        total = math.fsum(probs.values())
        if abs(total - 1.0) > tol:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        self._table = {k: max(v, 0.0) for k, v in probs.items()}

    @property
    def support(self) -> list:
        return list(self._table)

    @property
    def probabilities(self) -> list[float]:
        return list(self._table.values())

    def items(self):
        return self._table.items()

    def get(self, key, default: float = 0.0) -> float:
        return self._table.get(key, default)

    def __getitem__(self, key) -> float:
        return self._table[key]

    def __len__(self):
        return len(self._table)

    def __eq__(self, other):
        if not isinstance(other, OutcomeDistribution):
            return NotImplemented
        return self._table == other._table

    def __repr__(self):
        return f"OutcomeDistribution({self._table!r})"

    def total(self) -> float:
        return math.fsum(self._table.values())

    def marginal(self, index: int) -> "OutcomeDistribution":
        """Marginal of one component of tuple-valued keys."""
        out: dict = {}
        for k, p in self._table.items():
            out[k[index]] = out.get(k[index], 0.0) + p
        return OutcomeDistribution(out)

    def sorted_items(self) -> list[tuple[Hashable, float]]:
        return sorted(self._table.items(), key=lambda kv: _sort_key(kv[0]))


def _sort_key(k):
    if isinstance(k, Decision):
        return (1, str(k.value))
    if isinstance(k, tuple):
        return (0, tuple(k))
    return (0, (k,))


# -- enumeration ---------------------------------------------------------------


def _check_budget(n_total: int, k_x: int, k_z: int, max_qubits: int) -> None:
    if n_total < 1 or k_x < 0 or k_z < 0 or k_x + k_z != n_total:
        raise ValueError(f"split mismatch: k_x + k_z = {k_x + k_z}, n_total = {n_total}")
    if n_total > max_qubits:
        raise QubitBudgetError(f"n_total = {n_total} exceeds the qubit budget of {max_qubits}")


def _binomial_means(k: int, p_up: float) -> dict[Fraction, float]:
    """Distribution of the mean of k i.i.d. +-1/2 spins with P(+1/2) = p_up."""
    if k == 0:
        return {Fraction(0): 1.0}
    out = {}
    for ups in range(k + 1):
        p = math.comb(k, ups) * p_up ** ups * (1.0 - p_up) ** (k - ups)
        if p > 0.0:
            key = Fraction(2 * ups - k, 2 * k)
            out[key] = out.get(key, 0.0) + p
    return out


def _spin_up_probability(rho: DensityMatrix, axis: MeasurementAxis) -> float:
    up, _ = axis.eigenvectors()
    return float(np.real(np.vdot(up, rho.matrix @ up)))


def paper_particle_states(bob_bit: int) -> list[tuple[float, DensityMatrix]]:
    """Per-particle states asserted for Alice's register, weighted by Bob's outcome."""
    out = []
    for branch, alice in bob_encode_branches(bob_bit):
        if bob_bit == 0:
            out.append((branch.probability, to_density(alice)))
        else:
            out.append((branch.probability, DensityMatrix.maximally_mixed(1)))
    return out


def enumerate_alice_distribution(
    bob_bit: int,
    n_total: int,
    k_x: int,
    k_z: int,
    model: ModelKind = ModelKind.TRUE_DYNAMICS,
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> OutcomeDistribution:
    """Exact distribution of (mean_sx, mean_sz) given Bob's bit.

    Bob's two outcomes are averaged with their Born weights.
    """
    _check_budget(n_total, k_x, k_z, max_qubits)
    model = ModelKind(model)
    table: dict[tuple[Fraction, Fraction], float] = {}
    if model is ModelKind.TRUE_DYNAMICS:
        for branch, alice in bob_encode_branches(bob_bit):
            if branch.probability == 0.0:
                continue
            register = alice_amplify(alice, n_total, max_qubits=max_qubits)
            paths = enumerate_measure_plan(register, k_x, k_z)
            for key, p in sweep_statistics(paths, k_x).items():
                table[key] = table.get(key, 0.0) + branch.probability * p
    else:
        for weight, rho in paper_particle_states(bob_bit):
            sx = _binomial_means(k_x, _spin_up_probability(rho, MeasurementAxis.X()))
            sz = _binomial_means(k_z, _spin_up_probability(rho, MeasurementAxis.Z()))
            for mx, px in sx.items():
                for mz, pz in sz.items():
                    table[(mx, mz)] = table.get((mx, mz), 0.0) + weight * px * pz
    return OutcomeDistribution(table)


def decision_distribution(dist: OutcomeDistribution, rule: DecisionRule = DecisionRule()) -> OutcomeDistribution:
    out: dict[Decision, float] = {}
    for (mx, mz), p in dist.items():
        d = alice_decide(mx, mz, rule)
        out[d] = out.get(d, 0.0) + p
    return OutcomeDistribution(out)


# -- distances -----------------------------------------------------------------


def total_variation(p: OutcomeDistribution, q: OutcomeDistribution) -> float:
    keys = set(p.support) | set(q.support)
    return 0.5 * math.fsum(abs(p.get(k) - q.get(k)) for k in keys)


def trace_distance(a, b) -> float:
    """(1/2) * sum |eigenvalues of (a - b)| for density matrices or arrays."""
    ma = a.matrix if isinstance(a, DensityMatrix) else qlin.as_cmatrix(a)
    mb = b.matrix if isinstance(b, DensityMatrix) else qlin.as_cmatrix(b)
    if ma.shape != mb.shape:
        raise qlin.ShapeError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    eig = qlin.hermitian_eigenvalues(ma - mb)
    return 0.5 * float(np.sum(np.abs(eig)))


def channel_mutual_information(given_0: OutcomeDistribution, given_1: OutcomeDistribution) -> float:
    """I(Bob's bit; Alice's decision) in bits, uniform prior on Bob's bit."""
    keys = set(given_0.support) | set(given_1.support)
    mi = 0.0
    for k in keys:
        p0, p1 = given_0.get(k), given_1.get(k)
        marginal = 0.5 * (p0 + p1)
        for p in (p0, p1):
            if p > 0.0:
                mi += 0.5 * p * math.log2(p / marginal)
    return max(mi, 0.0)


# -- reports -------------------------------------------------------------------


@dataclass(frozen=True)
class NoSignalingResult:
    tvd_true: float
    mi_true: float
    alice_state_distance: float


@dataclass(frozen=True)
class ChannelReport:
    tvd_true: float
    tvd_paper_gap: float
    mutual_information_true: float
    mutual_information_paper_model: float
    trace_distance_states: float

    def as_dict(self) -> dict[str, float]:
        return {
            "tvd_true": self.tvd_true,
            "tvd_paper_gap": self.tvd_paper_gap,
            "mi_true": self.mutual_information_true,
            "mi_paper_model": self.mutual_information_paper_model,
            "trace_distance_states": self.trace_distance_states,
        }


def alice_average_state(bob_bit: int) -> DensityMatrix:
    """Alice's single-qubit state averaged over Bob's outcomes."""
    m = sum(branch.probability * to_density(alice).matrix for branch, alice in bob_encode_branches(bob_bit))
    return DensityMatrix(m)


def no_signaling_check(
    n_total: int, k_x: int, k_z: int, rule: DecisionRule = DecisionRule(),
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> NoSignalingResult:
    d0 = enumerate_alice_distribution(0, n_total, k_x, k_z, max_qubits=max_qubits)
    d1 = enumerate_alice_distribution(1, n_total, k_x, k_z, max_qubits=max_qubits)
    return NoSignalingResult(
        tvd_true=total_variation(d0, d1),
        mi_true=channel_mutual_information(decision_distribution(d0, rule), decision_distribution(d1, rule)),
        alice_state_distance=trace_distance(alice_average_state(0), alice_average_state(1)),
    )


def ghz_vs_uniform_distance(n_qubits: int) -> float:
    """Trace distance between the cascaded |+x> register and I / 2^n."""
    ghz = to_density(alice_amplify(x_eigenstate(+1), n_qubits, max_qubits=max(n_qubits, DEFAULT_MAX_QUBITS)))
    return trace_distance(ghz, DensityMatrix.maximally_mixed(n_qubits))


def paper_gap_report(
    n_total: int, k_x: int, k_z: int, rule: DecisionRule = DecisionRule(),
    max_qubits: int = DEFAULT_MAX_QUBITS,
) -> ChannelReport:
    """True-versus-claimed comparison of Alice's statistics for one split."""
    true0 = enumerate_alice_distribution(0, n_total, k_x, k_z, ModelKind.TRUE_DYNAMICS, max_qubits)
    true1 = enumerate_alice_distribution(1, n_total, k_x, k_z, ModelKind.TRUE_DYNAMICS, max_qubits)
    paper0 = enumerate_alice_distribution(0, n_total, k_x, k_z, ModelKind.PAPER_INDEPENDENT_MIXTURE, max_qubits)
    paper1 = enumerate_alice_distribution(1, n_total, k_x, k_z, ModelKind.PAPER_INDEPENDENT_MIXTURE, max_qubits)
    return ChannelReport(
        tvd_true=total_variation(true0, true1),
        tvd_paper_gap=total_variation(true1, paper1),
        mutual_information_true=channel_mutual_information(
            decision_distribution(true0, rule), decision_distribution(true1, rule)),
        mutual_information_paper_model=channel_mutual_information(
            decision_distribution(paper0, rule), decision_distribution(paper1, rule)),
        trace_distance_states=ghz_vs_uniform_distance(n_total),
    )


# -- Monte Carlo ---------------------------------------------------------------


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    bins: int


@dataclass(frozen=True)
class MonteCarloResult:
    empirical: OutcomeDistribution
    counts: dict
    expected: OutcomeDistribution
    chi_square: ChiSquareResult
    trials: int


def chi_square_against(counts: Mapping[Hashable, int], expected: OutcomeDistribution, min_expected: float = 5.0) -> ChiSquareResult:
    """Pearson chi-square of observed counts against an exact distribution.

    Bins with expected count below ``min_expected`` are pooled into one bin;
    if that pool is still too small it is merged into the smallest regular
    bin. Outcomes outside the expected support land in the pool.
    """
    n = sum(counts.values())
    if n <= 0:
        raise ValueError("no observations")
    keys = sorted(set(expected.support) | set(counts), key=_sort_key)
    bins: list[tuple[float, int]] = []
    pool_e, pool_o = 0.0, 0
    for k in keys:
        e = n * expected.get(k)
        o = counts.get(k, 0)
        if e >= min_expected:
            bins.append((e, o))
        else:
            pool_e += e
            pool_o += o
    if pool_e > 0.0 or pool_o > 0:
        if pool_e >= min_expected or not bins:
            bins.append((pool_e, pool_o))
        else:
            i = min(range(len(bins)), key=lambda j: bins[j][0])
            e, o = bins[i]
            bins[i] = (e + pool_e, o + pool_o)
    if len(bins) < 2:
        return ChiSquareResult(0.0, 0, 1.0, len(bins))
    stat = 0.0
    for e, o in bins:
        if e == 0.0:
            if o > 0:
                return ChiSquareResult(math.inf, len(bins) - 1, 0.0, len(bins))
            continue
        stat += (o - e) ** 2 / e
    dof = len(bins) - 1
    return ChiSquareResult(stat, dof, float(stats.chi2.sf(stat, dof)), len(bins))


def monte_carlo_distribution(
    config: ProtocolConfig, trials: int, rule: DecisionRule = DecisionRule(), workers: int = 1
) -> MonteCarloResult:
    """Empirical (mean_sx, mean_sz) table from seeded trials, tested against enumeration."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    records = run_trials(config, trials, rule, workers=workers)
    counts = Counter((r.mean_sx, r.mean_sz) for r in records)
    empirical = OutcomeDistribution({k: c / trials for k, c in counts.items()})
    expected = enumerate_alice_distribution(
        config.bob_bit, config.n_total, config.k_x, config.k_z, max_qubits=config.max_qubits
    )
    return MonteCarloResult(empirical, dict(counts), expected, chi_square_against(counts, expected), trials)
