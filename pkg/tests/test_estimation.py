"""IPW estimation, the conservative variance bound, and Chebyshev intervals."""

import itertools
import math

import numpy as np
import pytest

from adaptive_design import (AssignmentRecord, OutcomeSequence, Trajectory,
                             chebyshev_ci, correlation_diagnostic, fixed_design,
                             ipw_estimate, ipw_trace, true_ate,
                             variance_bound_estimate)

from conftest import constant_sequence, enumerate_coin_patterns


def single_record_traj(p, z, y):
    return Trajectory.from_records([AssignmentRecord(1, p, z, y)])


def test_ipw_single_record_values():
    assert ipw_estimate(single_record_traj(0.5, 1, 2.0)).tau_hat == 4.0
    assert ipw_estimate(single_record_traj(0.5, 0, 2.0)).tau_hat == -4.0
    traj = Trajectory(np.array([0.3, 0.7]), np.array([1, 0]), np.zeros(2))
    assert ipw_estimate(traj).tau_hat == 0.0


def test_ipw_rejects_empty():
    with pytest.raises(ValueError):
        Trajectory(np.array([]), np.array([]), np.array([]))


def test_true_ate_values():
    assert true_ate(constant_sequence(2.0, 1.0, 7)) == 1.0
    assert true_ate(OutcomeSequence([1.0, 0.0], [0.0, 1.0])) == 0.0
    assert true_ate(OutcomeSequence([3.0, 2.0], [1.0, 2.0])) == 1.0


def test_ipw_trace_matches_prefix_estimates():
    traj = Trajectory(np.array([0.5, 0.25, 0.8]), np.array([1, 0, 1]),
                      np.array([2.0, 1.0, -1.0]))
    trace = ipw_trace(traj)
    for t in range(1, 4):
        prefix = Trajectory(traj.propensities[:t], traj.decisions[:t],
                            traj.outcomes[:t])
        assert trace[t - 1] == pytest.approx(ipw_estimate(prefix).tau_hat, rel=1e-15)


def test_variance_bound_worked_example():
    traj = Trajectory(np.array([0.5, 0.5]), np.array([1, 0]), np.array([2.0, 1.0]))
    vb = variance_bound_estimate(traj)
    assert vb.treated_moment == 4.0
    assert vb.control_moment == 1.0
    assert vb.vb_hat == 4.0
    assert not vb.degenerate


def test_variance_bound_degenerate_one_arm():
    traj = Trajectory(np.array([0.5, 0.5]), np.array([1, 1]), np.array([2.0, 1.0]))
    vb = variance_bound_estimate(traj)
    assert vb.vb_hat == 0.0
    assert vb.degenerate


def test_variance_bound_components_unbiased_by_enumeration():
    y1 = np.array([2.0, -1.0])
    y0 = np.array([1.0, 3.0])
    p = 0.35
    target1 = float(np.mean(y1 ** 2))
    target0 = float(np.mean(y0 ** 2))
    mean1 = mean0 = 0.0
    for zs in itertools.product((0, 1), repeat=2):
        prob = 1.0
        recs = []
        for t, z in enumerate(zs, start=1):
            prob *= p if z else 1.0 - p
            y = y1[t - 1] if z else y0[t - 1]
            recs.append(AssignmentRecord(t, p, z, y))
        vb = variance_bound_estimate(Trajectory.from_records(recs))
        mean1 += prob * vb.treated_moment
        mean0 += prob * vb.control_moment
    assert abs(mean1 - target1) < 1e-12
    assert abs(mean0 - target0) < 1e-12


def test_chebyshev_ci_worked_example():
    ci = chebyshev_ci(4.0, 4.0, alpha=0.25)
    assert (ci.lower, ci.upper) == (0.0, 8.0)
    assert ci.contains(4.0) and ci.contains(0.0) and not ci.contains(8.5)


def test_chebyshev_ci_alpha_one_and_degenerate():
    ci = chebyshev_ci(1.0, 9.0, alpha=1.0)
    assert ci.half_width == 3.0
    point = chebyshev_ci(1.0, 0.0, alpha=0.5)
    assert point.degenerate
    assert point.lower == point.upper == 1.0
    assert point.contains(1.0) and not point.contains(1.0 + 1e-12)


def test_chebyshev_ci_alpha_validation_and_monotonicity():
    with pytest.raises(ValueError):
        chebyshev_ci(0.0, 1.0, alpha=0.0)
    with pytest.raises(ValueError):
        chebyshev_ci(0.0, 1.0, alpha=1.5)
    wide = chebyshev_ci(0.0, 1.0, alpha=0.05)
    narrow = chebyshev_ci(0.0, 1.0, alpha=0.5)
    assert wide.half_width > narrow.half_width


def test_chebyshev_ci_accepts_estimate_objects():
    traj = Trajectory(np.array([0.5, 0.5]), np.array([1, 0]), np.array([2.0, 1.0]))
    ci = chebyshev_ci(ipw_estimate(traj), variance_bound_estimate(traj), alpha=0.25)
    assert ci.lower == ipw_estimate(traj).tau_hat - 4.0


def test_correlation_diagnostic_values():
    assert correlation_diagnostic(constant_sequence(1.0, 1.0, 4)).rho == pytest.approx(1.0)
    assert correlation_diagnostic(constant_sequence(1.0, -1.0, 4)).rho == pytest.approx(-1.0)
    diag = correlation_diagnostic(OutcomeSequence([2.0, 1.0], [1.0, 2.0]))
    assert diag.rho == pytest.approx(0.8, abs=1e-15)
    assert diag.s_treated == pytest.approx(math.sqrt(2.5), rel=1e-15)
    assert diag.s_control == pytest.approx(math.sqrt(2.5), rel=1e-15)
    assert diag.variance_bound == pytest.approx(5.0, rel=1e-15)


def test_correlation_diagnostic_degenerate_arm():
    diag = correlation_diagnostic(OutcomeSequence([1.0, 2.0], [0.0, 0.0]))
    assert diag.degenerate
    assert math.isnan(diag.rho)


def test_vb_dominates_optimal_nonadaptive_variance(rng):
    for _ in range(100):
        rounds = int(rng.integers(2, 30))
        seq = OutcomeSequence(rng.normal(1, 2, rounds), rng.normal(-1, 2, rounds))
        diag = correlation_diagnostic(seq)
        lower = (2.0 / rounds) * (1.0 + diag.rho) * diag.s_treated * diag.s_control
        assert lower <= diag.variance_bound + 1e-12


def test_ipw_unbiased_exact_enumeration_small_horizon(rng):
    y1 = rng.uniform(-2, 2, 5)
    y0 = rng.uniform(-2, 2, 5)
    seq = OutcomeSequence(y1, y0)
    mean = 0.0
    for prob, traj in enumerate_coin_patterns(lambda: fixed_design(0.3), seq):
        mean += prob * ipw_estimate(traj).tau_hat
    assert abs(mean - true_ate(seq)) < 1e-10
