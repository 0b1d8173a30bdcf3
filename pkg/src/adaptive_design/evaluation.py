"""Evaluation-only regret accounting.

Everything in this module reads counterfactual outcomes, so nothing here may
ever feed back into a design; designs see only observed feedback. The regret
of a run is measured against the best single treatment probability in
hindsight for the variance objective

    f_t(p) = y_t(1)^2 / p + y_t(0)^2 / (1 - p),

re-optimized for every prefix. The prefix minimum has the closed form
(sqrt(A_t) + sqrt(B_t))^2 with A_t, B_t the prefix sums of squared treated and
control outcomes; when one arm is identically zero on a prefix the minimum is
an infimum approached at the boundary, and the same closed form returns it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import OutcomeSequence, Trajectory


def neyman_objective(y1, y0, p):
    """Per-round variance objective f(p) = y1^2/p + y0^2/(1-p). Accepts arrays."""
    y1 = np.asarray(y1, dtype=float)
    y0 = np.asarray(y0, dtype=float)
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("p must lie strictly inside (0, 1)")
    out = y1 * y1 / p + y0 * y0 / (1.0 - p)
    return float(out) if out.ndim == 0 else out


def optimal_propensity(y1s, y0s) -> float:
    """Minimizer of the summed objective: p* = sqrt(A) / (sqrt(A) + sqrt(B)).

    A = sum y1^2, B = sum y0^2. If exactly one arm is identically zero the
    minimizer degenerates to the boundary limit (0.0 or 1.0), which is
    returned as-is so callers can detect it; both arms zero is an error.
    """
    y1s = np.asarray(y1s, dtype=float)
    y0s = np.asarray(y0s, dtype=float)
    a = float(np.sum(y1s * y1s))
    b = float(np.sum(y0s * y0s))
    if a == 0.0 and b == 0.0:
        raise ValueError("all outcomes are zero; the objective is identically zero")
    return float(np.sqrt(a) / (np.sqrt(a) + np.sqrt(b)))


def optimal_propensity_from_moments(m1: float, m0: float) -> float:
    """Same minimizer from mean squared outcomes per arm (population form)."""
    if m1 < 0 or m0 < 0 or (m1 == 0.0 and m0 == 0.0):
        raise ValueError("arm moments must be nonnegative and not both zero")
    return float(np.sqrt(m1) / (np.sqrt(m1) + np.sqrt(m0)))


def optimal_propensity_grid(y1s, y0s, resolution: float = 1e-4) -> float:
    """Brute-force minimizer over the grid {res, 2 res, ..., 1 - res}.

    Independent oracle for the closed form; O(1/resolution) evaluations using
    the prefix sums A and B only.
    """
    if not 0.0 < resolution < 0.5:
        raise ValueError("resolution must lie in (0, 0.5)")
    y1s = np.asarray(y1s, dtype=float)
    y0s = np.asarray(y0s, dtype=float)
    a = float(np.sum(y1s * y1s))
    b = float(np.sum(y0s * y0s))
    n = int(round(1.0 / resolution))
    grid = np.arange(1, n) * resolution
    values = a / grid + b / (1.0 - grid)
    return float(grid[int(np.argmin(values))])


def comparator_loss(y1s, y0s) -> float:
    """Infimum of the summed objective over p in (0, 1): (sqrt(A) + sqrt(B))^2."""
    y1s = np.asarray(y1s, dtype=float)
    y0s = np.asarray(y0s, dtype=float)
    a = float(np.sum(y1s * y1s))
    b = float(np.sum(y0s * y0s))
    return float((np.sqrt(a) + np.sqrt(b)) ** 2)


@dataclass(frozen=True)
class RegretCurve:
    """Running regret after each round, against the per-prefix best constant."""

    values: np.ndarray
    degenerate: bool

    @property
    def final(self) -> float:
        return float(self.values[-1])


def _running_regret(f_vals: np.ndarray, y1sq: np.ndarray, y0sq: np.ndarray) -> np.ndarray:
    cum_f = np.cumsum(f_vals)
    a = np.cumsum(y1sq)
    b = np.cumsum(y0sq)
    return cum_f - (np.sqrt(a) + np.sqrt(b)) ** 2


def neyman_regret(traj: Trajectory, seq: OutcomeSequence) -> RegretCurve:
    """Running regret of emitted propensities.

    Nonnegative whenever the emissions are constant (the comparator minimizes
    over constants); an outcome-aware varying sequence can drive it negative.
    """
    if len(traj) != len(seq):
        raise ValueError("trajectory and outcomes must have equal length")
    y1sq = seq.y1 * seq.y1
    y0sq = seq.y0 * seq.y0
    f_vals = y1sq / traj.propensities + y0sq / (1.0 - traj.propensities)
    values = _running_regret(f_vals, y1sq, y0sq)
    degenerate = bool(np.sum(y1sq) == 0.0 or np.sum(y0sq) == 0.0)
    return RegretCurve(values, degenerate)


@dataclass(frozen=True)
class GroupRegretResult:
    """Per-group running regret over each group's own subsequence.

    `curves[name][t-1]` is group `name`'s regret over its member rounds up to
    t; `counts[name][t-1]` is how many member rounds that is. The multigroup
    figure of merit is the maximum final per-group regret.
    """

    curves: dict[str, np.ndarray]
    counts: dict[str, np.ndarray]
    degenerate: dict[str, bool]

    @property
    def multigroup_final(self) -> float:
        return max(float(curve[-1]) for curve in self.curves.values())


def group_regret(traj: Trajectory, seq: OutcomeSequence, membership,
                 names: list[str] | None = None) -> GroupRegretResult:
    """Running regret restricted to each group's member rounds.

    `membership` is a (T, d) boolean matrix. An empty group contributes a zero
    curve. A group whose members have an identically zero arm gets the infimum
    comparator and is flagged degenerate.
    """
    membership = np.asarray(membership, dtype=bool)
    if membership.ndim != 2 or membership.shape[0] != len(seq):
        raise ValueError("membership must be a (rounds, groups) matrix")
    if len(traj) != len(seq):
        raise ValueError("trajectory and outcomes must have equal length")
    d = membership.shape[1]
    if names is None:
        names = [f"g{i}" for i in range(d)]
    if len(names) != d:
        raise ValueError("one name per group required")
    y1sq = seq.y1 * seq.y1
    y0sq = seq.y0 * seq.y0
    f_vals = y1sq / traj.propensities + y0sq / (1.0 - traj.propensities)
    curves: dict[str, np.ndarray] = {}
    counts: dict[str, np.ndarray] = {}
    degenerate: dict[str, bool] = {}
    for j, name in enumerate(names):
        m = membership[:, j].astype(float)
        curves[name] = _running_regret(m * f_vals, m * y1sq, m * y0sq)
        counts[name] = np.cumsum(m)
        total = float(np.sum(m))
        degenerate[name] = bool(
            total > 0 and (np.sum(m * y1sq) == 0.0 or np.sum(m * y0sq) == 0.0))
    return GroupRegretResult(curves, counts, degenerate)
