"""Inverse-propensity estimation of the average treatment effect.

Everything here consumes only observed data (the trajectory), except
`true_ate` and `correlation_diagnostic`, which are evaluation-side helpers
that read counterfactuals off the outcome sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import OutcomeSequence, Trajectory


@dataclass(frozen=True)
class AteEstimate:
    tau_hat: float
    rounds: int


@dataclass(frozen=True)
class VarianceBoundEstimate:
    vb_hat: float
    treated_moment: float
    control_moment: float
    degenerate: bool


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    alpha: float
    degenerate: bool

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    @property
    def half_width(self) -> float:
        return 0.5 * (self.upper - self.lower)


@dataclass(frozen=True)
class OutcomeCorrelation:
    rho: float
    s_treated: float
    s_control: float
    variance_bound: float
    degenerate: bool


def true_ate(seq: OutcomeSequence) -> float:
    """Finite-population average treatment effect (uses counterfactuals)."""
    return float(np.mean(seq.y1 - seq.y0))


def _ipw_terms(traj: Trajectory) -> np.ndarray:
    p = traj.propensities
    z = traj.decisions
    y = traj.outcomes
    return y * np.where(z == 1, 1.0 / p, -1.0 / (1.0 - p))


def ipw_estimate(traj: Trajectory) -> AteEstimate:
    """Horvitz-Thompson estimate (1/T) sum_t Y_t (Z_t/p_t - (1-Z_t)/(1-p_t)).

    Unbiased for the finite-population effect for any sequential design whose
    propensity depends only on the past, because each round's term has
    conditional mean y_t(1) - y_t(0).
    """
    terms = _ipw_terms(traj)
    return AteEstimate(float(np.mean(terms)), len(traj))


def ipw_trace(traj: Trajectory) -> np.ndarray:
    """Running estimates after each round: cumulative mean of the IPW terms."""
    terms = _ipw_terms(traj)
    return np.cumsum(terms) / np.arange(1, len(traj) + 1, dtype=float)


def variance_bound_estimate(traj: Trajectory) -> VarianceBoundEstimate:
    """Observable upper bound on the estimator's variance.

    vb_hat = (4/T) sqrt(m1 * m0) with m1 = (1/T) sum y^2 Z/p and
    m0 = (1/T) sum y^2 (1-Z)/(1-p). Each arm moment is an unbiased estimate of
    that arm's mean squared outcome. A trajectory that never saw one of the
    arms yields a zero moment and is flagged degenerate rather than rejected.
    """
    p = traj.propensities
    z = traj.decisions
    y = traj.outcomes
    T = len(traj)
    y2 = y * y
    m1 = float(np.sum(np.where(z == 1, y2 / p, 0.0)) / T)
    m0 = float(np.sum(np.where(z == 0, y2 / (1.0 - p), 0.0)) / T)
    vb = (4.0 / T) * math.sqrt(m1 * m0)
    return VarianceBoundEstimate(vb, m1, m0, degenerate=(m1 == 0.0 or m0 == 0.0))


def chebyshev_ci(tau_hat: float | AteEstimate,
                 vb_hat: float | VarianceBoundEstimate,
                 alpha: float) -> ConfidenceInterval:
    """Conservative level-(1 - alpha) interval tau_hat +/- sqrt(vb_hat / alpha).

    Finite-sample valid under a variance bound, with no distributional
    assumptions; a zero variance bound collapses to a point interval, which is
    flagged degenerate.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    center = tau_hat.tau_hat if isinstance(tau_hat, AteEstimate) else float(tau_hat)
    vb = vb_hat.vb_hat if isinstance(vb_hat, VarianceBoundEstimate) else float(vb_hat)
    if vb < 0.0:
        raise ValueError("variance bound must be nonnegative")
    half = math.sqrt(vb / alpha)
    return ConfidenceInterval(center - half, center + half, alpha, degenerate=(vb == 0.0))


def correlation_diagnostic(seq: OutcomeSequence) -> OutcomeCorrelation:
    """Cross-arm moment correlation rho = mean(y1 y0) / (S1 S0) together with
    the population variance bound VB = (4/T) S1 S0, where S_i is the root mean
    square of arm i. The bound is loosest (factor 2 over the best nonadaptive
    design) when rho = -1 and tight when rho = 1; rho is undefined when an arm
    is identically zero, which is flagged rather than raised."""
    T = len(seq)
    s1 = float(np.sqrt(np.mean(seq.y1 * seq.y1)))
    s0 = float(np.sqrt(np.mean(seq.y0 * seq.y0)))
    vb = (4.0 / T) * s1 * s0
    if s1 == 0.0 or s0 == 0.0:
        return OutcomeCorrelation(float("nan"), s1, s0, vb, degenerate=True)
    rho = float(np.mean(seq.y1 * seq.y0) / (s1 * s0))
    return OutcomeCorrelation(rho, s1, s0, vb, degenerate=False)
