from fractions import Fraction

import numpy as np
import pytest

from qansible import qlin
from qansible.analysis import (
    ModelKind,
    OutcomeDistribution,
    alice_average_state,
    channel_mutual_information,
    chi_square_against,
    decision_distribution,
    enumerate_alice_distribution,
    ghz_vs_uniform_distance,
    monte_carlo_distribution,
    no_signaling_check,
    paper_gap_report,
    total_variation,
    trace_distance,
)
from qansible.protocol import Decision, ProtocolConfig, QubitBudgetError
from qansible.qstate import DensityMatrix, basis_state, ghz_state, to_density
from oracles import binary_entropy, mutual_information_from_joint

H = Fraction(1, 2)
Z0 = Fraction(0)
TRUE, PAPER = ModelKind.TRUE_DYNAMICS, ModelKind.PAPER_INDEPENDENT_MIXTURE


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol


class TestOutcomeDistribution:
    def test_rejects_bad_tables(self):
        with pytest.raises(ValueError):
            OutcomeDistribution({"a": 0.5})
        with pytest.raises(ValueError):
            OutcomeDistribution({"a": 1.5, "b": -0.5})
        with pytest.raises(ValueError):
            OutcomeDistribution({})

    def test_marginal(self):
        d = OutcomeDistribution({(Z0, H): 0.25, (H, H): 0.25, (Z0, -H): 0.5})
        m = d.marginal(1)
        assert close(m[H], 0.5) and close(m[-H], 0.5)


class TestEnumeration:
    def test_true_bit_zero_z_only(self):
        d = enumerate_alice_distribution(0, 2, 0, 2, TRUE)
        assert set(d.support) == {(Z0, H), (Z0, -H)}
        assert close(d[(Z0, H)], 0.5) and close(d[(Z0, -H)], 0.5)

    def test_true_bit_one_identical(self):
        d0 = enumerate_alice_distribution(0, 2, 0, 2, TRUE)
        d1 = enumerate_alice_distribution(1, 2, 0, 2, TRUE)
        assert set(d1.support) == set(d0.support)
        for k in d0.support:
            assert close(d0[k], d1[k])

    def test_paper_model_binomial(self):
        d = enumerate_alice_distribution(1, 3, 0, 3, PAPER)
        expected = {H: 1 / 8, -H: 1 / 8, Fraction(1, 6): 3 / 8, Fraction(-1, 6): 3 / 8}
        assert set(d.support) == {(Z0, k) for k in expected}
        for k, p in expected.items():
            assert close(d[(Z0, k)], p)

    def test_paper_model_bit_zero_matches_truth(self):
        # for a product register the independent model is exact
        for k_x in range(5):
            t = enumerate_alice_distribution(0, 4, k_x, 4 - k_x, TRUE)
            p = enumerate_alice_distribution(0, 4, k_x, 4 - k_x, PAPER)
            assert total_variation(t, p) <= 1e-12

    @pytest.mark.parametrize("n", range(1, 11))
    def test_sums_to_one(self, n):
        for model in ModelKind:
            for bit in (0, 1):
                d = enumerate_alice_distribution(bit, n, n // 2, n - n // 2, model)
                assert close(d.total(), 1.0)
                assert min(d.probabilities) >= 0

    def test_errors(self):
        with pytest.raises(ValueError):
            enumerate_alice_distribution(0, 3, 1, 1)
        with pytest.raises(QubitBudgetError):
            enumerate_alice_distribution(0, 13, 13, 0)


class TestTotalVariation:
    def test_identical(self):
        d = enumerate_alice_distribution(1, 3, 1, 2)
        assert total_variation(d, d) == 0

    def test_disjoint(self):
        assert total_variation(OutcomeDistribution({1: 1.0}), OutcomeDistribution({2: 1.0})) == 1

    def test_true_vs_paper_closed_form(self):
        t = enumerate_alice_distribution(1, 3, 0, 3, TRUE)
        p = enumerate_alice_distribution(1, 3, 0, 3, PAPER)
        # overlap only at the endpoints, 1/8 each
        by_hand = 0.5 * sum(abs(t.get(k) - p.get(k)) for k in set(t.support) | set(p.support))
        assert close(by_hand, 0.75)
        assert close(total_variation(t, p), 0.75)


class TestTraceDistance:
    def test_identical(self):
        rho = to_density(ghz_state(2))
        assert trace_distance(rho, rho) <= 1e-12

    def test_orthogonal(self):
        assert close(trace_distance(to_density(basis_state([0])), to_density(basis_state([1]))), 1.0)

    def test_ghz3_vs_uniform(self):
        assert close(trace_distance(to_density(ghz_state(3)), DensityMatrix.maximally_mixed(3)), 0.875, 1e-9)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_ghz_closed_form(self, n):
        assert close(ghz_vs_uniform_distance(n), 1 - 2.0 ** -n, 1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(qlin.ShapeError):
            trace_distance(DensityMatrix.maximally_mixed(1), DensityMatrix.maximally_mixed(2))


class TestMutualInformation:
    def test_identical_conditionals(self):
        d = OutcomeDistribution({Decision.ZERO: 0.3, Decision.ONE: 0.7})
        assert channel_mutual_information(d, d) == 0

    def test_perfect_channel(self):
        d0 = OutcomeDistribution({Decision.ZERO: 1.0})
        d1 = OutcomeDistribution({Decision.ONE: 1.0})
        assert close(channel_mutual_information(d0, d1), 1.0)

    def test_paper_model_three_clones(self):
        d0 = decision_distribution(enumerate_alice_distribution(0, 3, 0, 3, PAPER))
        d1 = decision_distribution(enumerate_alice_distribution(1, 3, 0, 3, PAPER))
        assert close(d1[Decision.ZERO], 0.25) and close(d1[Decision.ONE], 0.75)
        joint = {(0, Decision.ZERO): 0.5, (1, Decision.ZERO): 0.125, (1, Decision.ONE): 0.375}
        oracle = mutual_information_from_joint(joint)
        assert close(oracle, binary_entropy(3 / 8) - 0.5 * binary_entropy(1 / 4))
        assert close(channel_mutual_information(d0, d1), oracle)
        assert round(oracle, 4) == 0.5488

    @pytest.mark.parametrize("k_z", range(1, 8))
    def test_true_dynamics_zero(self, k_z):
        n = k_z + 1
        d0 = decision_distribution(enumerate_alice_distribution(0, n, 1, k_z))
        d1 = decision_distribution(enumerate_alice_distribution(1, n, 1, k_z))
        assert channel_mutual_information(d0, d1) <= 1e-12


class TestNoSignaling:
    def test_small(self):
        r = no_signaling_check(2, 1, 1)
        assert r.tvd_true <= 1e-12 and r.mi_true <= 1e-12

    def test_eight(self):
        r = no_signaling_check(8, 4, 4)
        assert r.tvd_true <= 1e-12 and r.mi_true <= 1e-12

    def test_alice_marginal_before_cascade(self):
        for bit in (0, 1):
            assert qlin.max_abs_diff(alice_average_state(bit).matrix, 0.5 * np.eye(2)) <= 1e-12
        assert no_signaling_check(1, 0, 1).alice_state_distance <= 1e-12

    @pytest.mark.parametrize("n", range(1, 9))
    def test_grid(self, n):
        for k_x in range(n + 1):
            r = no_signaling_check(n, k_x, n - k_x)
            assert r.tvd_true <= 1e-12 and r.mi_true <= 1e-12


class TestPaperGap:
    def test_four(self):
        r = paper_gap_report(4, 2, 2)
        assert r.tvd_true <= 1e-12
        assert close(r.tvd_paper_gap, 0.5)
        assert r.mutual_information_true <= 1e-12
        assert close(r.trace_distance_states, 1 - 2 ** -4, 1e-9)

    def test_x_only(self):
        assert paper_gap_report(2, 2, 0).tvd_true <= 1e-12

    @pytest.mark.parametrize("k_z", range(1, 11))
    def test_closed_form(self, k_z):
        for k_x in (0, 1):
            r = paper_gap_report(k_x + k_z, k_x, k_z)
            assert close(r.tvd_paper_gap, 1 - 2.0 ** (1 - k_z))
            assert r.mutual_information_true <= 1e-12
            assert 0 <= r.mutual_information_paper_model <= 1
            if r.tvd_true <= 1e-12:
                assert r.mutual_information_true <= 1e-12

    def test_paper_model_signals(self):
        # the independent-mixture model would carry information; the truth carries none
        r = paper_gap_report(4, 0, 4)
        assert r.mutual_information_paper_model > 0.5
        assert r.mutual_information_true <= 1e-12


class TestChiSquare:
    def test_perfect_fit(self):
        exp = OutcomeDistribution({1: 0.5, 2: 0.5})
        res = chi_square_against({1: 500, 2: 500}, exp)
        assert res.statistic == 0 and res.p_value == 1.0

    def test_pools_small_bins(self):
        exp = OutcomeDistribution({1: 0.499, 2: 0.499, 3: 0.001, 4: 0.001})
        res = chi_square_against({1: 500, 2: 498, 3: 1, 4: 1}, exp)
        assert res.bins == 2

    def test_impossible_outcome(self):
        exp = OutcomeDistribution({1: 0.5, 2: 0.5})
        res = chi_square_against({1: 400, 2: 400, 3: 200}, exp)
        assert res.p_value < 1e-6


class TestMonteCarlo:
    def test_single_trial(self):
        res = monte_carlo_distribution(ProtocolConfig(4, 2, 2, 1, seed=5), 1)
        assert len(res.empirical) == 1 and res.empirical.probabilities == [1.0]

    def test_reproducible(self):
        cfg = ProtocolConfig(4, 2, 2, 1, seed=8)
        assert monte_carlo_distribution(cfg, 2000).counts == monte_carlo_distribution(cfg, 2000).counts

    def test_zero_trials(self):
        with pytest.raises(ValueError):
            monte_carlo_distribution(ProtocolConfig(2, 1, 1, 0), 0)

    @pytest.mark.slow
    def test_matches_enumeration(self):
        res = monte_carlo_distribution(ProtocolConfig(4, 2, 2, 0, seed=20261019), 100_000)
        assert res.chi_square.p_value > 0.001
