"""Exit criteria for the package, one test per criterion.

Run ``pytest tests/test_acceptance.py`` to see the PASS/FAIL summary block.
"""
import json
import time

import numpy as np

from qansible.analysis import (
    enumerate_alice_distribution,
    ghz_vs_uniform_distance,
    monte_carlo_distribution,
    no_signaling_check,
    paper_gap_report,
    ModelKind,
    total_variation,
)
from qansible.protocol import AUDIT_IDS, ProtocolConfig, alice_amplify, bob_encode_branches, audit_equations
from qansible.qstate import (
    DensityMatrix,
    MeasurementAxis,
    SpinObservable,
    apply_gate,
    basis_state,
    bell_state,
    expectation,
    known_state_cloner,
    measure_branches,
    reduced_state,
    states_equal,
    to_density,
    x_eigenstate,
)

ALG_TOL = 1e-12
EIG_TOL = 1e-9


def test_ac1_equation_audit(criterion):
    start = time.perf_counter()
    report = audit_equations()
    elapsed = time.perf_counter() - start
    assert [e.id for e in report.entries] == list(AUDIT_IDS) and len(report.entries) == 11
    assert report.max_deviation <= ALG_TOL
    assert all(e.passed for e in report.entries)
    assert elapsed < 1.0
    criterion(f"11 identities, max deviation {report.max_deviation:.1e}, {elapsed * 1e3:.1f} ms")


def test_ac2_subensemble_averages(criterion):
    sx, sz = SpinObservable(MeasurementAxis.X()), SpinObservable(MeasurementAxis.Z())
    worst = 0.0
    for bits, expected_sz in (([0], 0.5), ([1], -0.5)):
        rho = to_density(basis_state(bits))
        worst = max(worst, abs(expectation(rho, sz, 0) - expected_sz), abs(expectation(rho, sx, 0)))
    mixed = DensityMatrix.maximally_mixed(1)
    worst = max(worst, abs(expectation(mixed, sx, 0)), abs(expectation(mixed, sz, 0)))
    assert worst <= ALG_TOL
    criterion(f"max deviation {worst:.1e}")


def test_ac3_singlet_anticorrelation(criterion):
    rng = np.random.default_rng(31415)
    singlet = bell_state("psi-")
    worst = 0.0
    for _ in range(100):
        axis = MeasurementAxis.normalized(rng.normal(size=3))
        for branch in measure_branches(singlet, axis, 1):
            worst = max(worst, abs(branch.probability - 0.5))
            for alice in measure_branches(branch.post_state, axis, 0):
                if alice.outcome == branch.outcome:
                    worst = max(worst, alice.probability)
                else:
                    worst = max(worst, abs(alice.probability - 1.0))
    assert worst <= ALG_TOL
    criterion(f"100 axes, max deviation {worst:.1e}")


def test_ac4_no_signaling_grid(criterion):
    start = time.perf_counter()
    worst_tvd = worst_mi = 0.0
    configs = 0
    for n in range(1, 11):
        for k_x in range(n + 1):
            r = no_signaling_check(n, k_x, n - k_x)
            worst_tvd = max(worst_tvd, r.tvd_true)
            worst_mi = max(worst_mi, r.mi_true)
            configs += 1
    elapsed = time.perf_counter() - start
    assert worst_tvd <= ALG_TOL and worst_mi <= ALG_TOL
    assert elapsed < 60.0
    criterion(f"{configs} splits, max tvd {worst_tvd:.1e}, max MI {worst_mi:.1e}, {elapsed:.1f} s")


def test_ac5_paper_gap_localization(criterion):
    worst_gap = 0.0
    for k_z in range(1, 11):
        true1 = enumerate_alice_distribution(1, k_z, 0, k_z, ModelKind.TRUE_DYNAMICS)
        paper1 = enumerate_alice_distribution(1, k_z, 0, k_z, ModelKind.PAPER_INDEPENDENT_MIXTURE)
        worst_gap = max(worst_gap, abs(total_variation(true1, paper1) - (1 - 2.0 ** (1 - k_z))))
    # the same number through the assembled report, with an x sub-ensemble present
    worst_gap = max(worst_gap, abs(paper_gap_report(6, 2, 4).tvd_paper_gap - (1 - 2.0 ** -3)))

    worst_td = 0.0
    worst_purity = 0.0
    for n in range(1, 9):
        worst_td = max(worst_td, abs(ghz_vs_uniform_distance(n) - (1 - 2.0 ** -n)))
        for _, alice in bob_encode_branches(1):
            rho = to_density(alice_amplify(alice, n))
            if n >= 2:
                for q in range(n):
                    worst_purity = max(worst_purity, abs(reduced_state(rho, [q]).purity() - 0.5))
    assert worst_gap <= ALG_TOL
    assert worst_td <= EIG_TOL
    assert worst_purity <= ALG_TOL
    criterion(f"gap dev {worst_gap:.1e}, trace-distance dev {worst_td:.1e}, purity dev {worst_purity:.1e}")


def test_ac6_no_cloning(criterion):
    up_z, plus_x = basis_state([0]), x_eigenstate(+1)
    cloner = known_state_cloner(up_z, up_z)
    out = apply_gate(plus_x.tensor(up_z), cloner, [0, 1])
    assert states_equal(out, bell_state("phi+"), ALG_TOL)
    overlap = abs(np.vdot(bell_state("phi+").amplitudes, plus_x.tensor(plus_x).amplitudes)) ** 2
    assert abs(overlap - 0.5) <= ALG_TOL
    criterion(f"|<Phi+|+x,+x>|^2 = {overlap:.15f}")


MC_CONFIGS = [
    ProtocolConfig(n_total=4, k_x=2, k_z=2, bob_bit=0, seed=101),
    ProtocolConfig(n_total=4, k_x=2, k_z=2, bob_bit=1, seed=202),
    ProtocolConfig(n_total=3, k_x=0, k_z=3, bob_bit=1, seed=303),
    ProtocolConfig(n_total=5, k_x=3, k_z=2, bob_bit=1, seed=404),
    ProtocolConfig(n_total=6, k_x=2, k_z=4, bob_bit=0, seed=505),
    ProtocolConfig(n_total=2, k_x=2, k_z=0, bob_bit=1, seed=606),
]


def _serialize(result):
    rows = sorted((float(k[0]), float(k[1]), c) for k, c in result.counts.items())
    return json.dumps({"rows": rows, "chi": [result.chi_square.statistic, result.chi_square.p_value]})


def test_ac7_monte_carlo_consistency(criterion):
    trials = 100_000
    lines = []
    for cfg in MC_CONFIGS:
        start = time.perf_counter()
        res = monte_carlo_distribution(cfg, trials)
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0, (cfg, elapsed)
        assert res.chi_square.p_value > 0.001, (cfg, res.chi_square)
        assert _serialize(monte_carlo_distribution(cfg, trials)) == _serialize(res)
        lines.append(f"n={cfg.n_total},kx={cfg.k_x},bit={cfg.bob_bit}: p={res.chi_square.p_value:.3f} {elapsed:.1f}s")
    criterion(f"{len(MC_CONFIGS)} configs x {trials} trials; " + "; ".join(lines))
