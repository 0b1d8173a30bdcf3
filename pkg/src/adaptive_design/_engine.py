"""Vectorized replication engine.

Runs a block of replications in lockstep: state becomes a vector over
replications and each round applies the same arithmetic the scalar designs
apply, in the same operation order. Every replication draws its coins from
its own pre-generated uniform stream, so replication r's trajectory is
bit-identical to a scalar `run_design` call seeded with replication r's seed,
independent of how many replications run or how they are blocked. The test
suite enforces that equality exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .designs import ClippingFunction, Schedule


@dataclass
class BlockRun:
    propensities: np.ndarray          # (B, T) emitted propensities
    decisions: np.ndarray             # (B, T) booleans
    outcomes: np.ndarray              # (B, T) observed outcomes
    final_group_propensities: np.ndarray | None = None  # (B, d) for multigroup runs


def uniform_streams(seeds: list[int], horizon: int) -> np.ndarray:
    """One independent uniform stream per replication, stacked (B, T)."""
    return np.stack([np.random.default_rng(s).random(horizon) for s in seeds])


def _pick(arr: np.ndarray, t: int) -> np.ndarray | float:
    # outcomes may be shared across the block (T,) or per replication (B, T)
    return arr[:, t] if arr.ndim == 2 else arr[t]


def run_fixed_block(p: float, y1: np.ndarray, y0: np.ndarray,
                    uniforms: np.ndarray) -> BlockRun:
    b, horizon = uniforms.shape
    decisions = uniforms < p
    y1b = np.broadcast_to(y1, (b, horizon))
    y0b = np.broadcast_to(y0, (b, horizon))
    outcomes = np.where(decisions, y1b, y0b)
    return BlockRun(np.full((b, horizon), p), decisions, outcomes)


def run_clip_ogd_block(schedule: Schedule, y1: np.ndarray, y0: np.ndarray,
                       uniforms: np.ndarray) -> BlockRun:
    b, horizon = uniforms.shape
    p = np.full(b, 0.5)
    props = np.empty((b, horizon))
    decisions = np.empty((b, horizon), dtype=bool)
    outcomes = np.empty((b, horizon))
    for t in range(1, horizon + 1):
        d = schedule.validated_delta(t)
        e = schedule.validated_eta(t)
        p_emit = np.minimum(np.maximum(p, d), 1.0 - d)
        z = uniforms[:, t - 1] < p_emit
        y = np.where(z, _pick(y1, t - 1), _pick(y0, t - 1))
        y2 = y * y
        q = 1.0 - p_emit
        w = np.where(z, -1.0 / (p_emit * p_emit * p_emit), 1.0 / (q * q * q))
        g = y2 * w
        p = np.minimum(np.maximum(p_emit - e * g, d), 1.0 - d)
        props[:, t - 1] = p_emit
        decisions[:, t - 1] = z
        outcomes[:, t - 1] = y
    return BlockRun(props, decisions, outcomes)


def run_mgate_block(c: float, h: ClippingFunction, fallback: float,
                    membership: np.ndarray, y1: np.ndarray, y0: np.ndarray,
                    uniforms: np.ndarray) -> BlockRun:
    """Lockstep multigroup runs. `membership` is (T, d) shared or (B, T, d)."""
    b, horizon = uniforms.shape
    d = membership.shape[-1]
    # Activation counts stay small integers; cache h on 1..T once.
    h_table = np.array([h(k) for k in range(1, horizon + 1)])

    n = np.zeros((b, d), dtype=np.int64)
    p = np.full((b, d), 0.5)
    wprime = np.ones((b, d))
    big_l = np.zeros((b, d))
    q = np.zeros(b)

    props = np.empty((b, horizon))
    decisions = np.empty((b, horizon), dtype=bool)
    outcomes = np.empty((b, horizon))
    for t in range(horizon):
        if membership.ndim == 3:
            a = membership[:, t, :].astype(float)
        else:
            a = np.broadcast_to(membership[t].astype(float), (b, d))
        n_active = a.sum(axis=1)
        row_on = n_active > 0.0

        n = n + a.astype(np.int64)
        masses = a * wprime
        total = masses.sum(axis=1)
        safe_total = np.where(total > 0.0, total, 1.0)
        safe_count = np.where(row_on, n_active, 1.0)
        w_eff = np.where((total > 0.0)[:, None], masses / safe_total[:, None],
                         a / safe_count[:, None])
        p_eff = np.sum(w_eff * p, axis=1)
        p_emit = np.where(row_on, p_eff, fallback)

        z = uniforms[:, t] < p_emit
        y = np.where(z, _pick(y1, t), _pick(y0, t))
        y2 = y * y

        qe = 1.0 - p_emit
        f1 = np.where(z, 1.0 / p_emit, 1.0 / qe)
        qg = 1.0 - p
        gf = np.where(z[:, None], -1.0 / (p * p), 1.0 / (qg * qg))
        lf = np.where(z[:, None], 1.0 / p, 1.0 / qg)
        base = y2 * f1
        grad = base[:, None] * gf
        ell = a * (base[:, None] * lf)

        update_mask = (a > 0.0) & row_on[:, None]
        n_safe = np.maximum(n, 1)
        eta = 1.0 / (2.0 * c * c * n_safe)
        delta = 1.0 / h_table[n_safe - 1]
        stepped = np.minimum(np.maximum(p - eta * grad, delta), 1.0 - delta)
        p = np.where(update_mask, stepped, p)

        mix = np.sum(ell * w_eff, axis=1)
        surrogate = a * (ell - mix[:, None])
        big_l = big_l + surrogate
        q = q + np.sum(surrogate * surrogate, axis=1)
        sq = np.sqrt(np.where(q > 0.0, q, 1.0))
        new_w = np.where((q > 0.0)[:, None],
                         np.maximum(0.0, -big_l / sq[:, None]), 0.0)
        wprime = np.where(row_on[:, None], new_w, wprime)

        props[:, t] = p_emit
        decisions[:, t] = z
        outcomes[:, t] = y
    return BlockRun(props, decisions, outcomes, final_group_propensities=p)


def ipw_terms_block(run: BlockRun) -> np.ndarray:
    p = run.propensities
    z = run.decisions
    return run.outcomes * np.where(z, 1.0 / p, -1.0 / (1.0 - p))


def variance_bound_block(run: BlockRun) -> np.ndarray:
    """Per-replication observable variance bound, matching the scalar estimator."""
    horizon = run.propensities.shape[1]
    y2 = run.outcomes * run.outcomes
    m1 = np.sum(np.where(run.decisions, y2 / run.propensities, 0.0), axis=1) / horizon
    m0 = np.sum(np.where(~run.decisions, y2 / (1.0 - run.propensities), 0.0),
                axis=1) / horizon
    return (4.0 / horizon) * np.sqrt(m1 * m0)


def running_regret_block(run: BlockRun, y1: np.ndarray, y0: np.ndarray,
                         mask: np.ndarray | None = None) -> np.ndarray:
    """(B, T) running regret curves; `mask` restricts to a group's rounds.

    Shapes broadcast: outcomes (T,) or (B, T); mask (T,) or (B, T).
    """
    y1sq = np.atleast_2d(y1 * y1)
    y0sq = np.atleast_2d(y0 * y0)
    f_vals = y1sq / run.propensities + y0sq / (1.0 - run.propensities)
    if mask is not None:
        m = np.atleast_2d(np.asarray(mask, dtype=float))
        f_vals = m * f_vals
        y1sq = m * y1sq
        y0sq = m * y0sq
    else:
        y1sq = np.broadcast_to(y1sq, f_vals.shape)
        y0sq = np.broadcast_to(y0sq, f_vals.shape)
    cum_f = np.cumsum(f_vals, axis=1)
    a = np.cumsum(y1sq, axis=1)
    b = np.cumsum(y0sq, axis=1)
    return cum_f - (np.sqrt(a) + np.sqrt(b)) ** 2


class RunningMoments:
    """Streaming per-time mean and scatter across replications.

    Blocks are folded in a fixed order with the standard parallel merge, so
    results are deterministic for a given block partition; a two-pass
    recomputation agrees to near machine precision.
    """

    def __init__(self):
        self.n = 0
        self.mean: np.ndarray | None = None
        self.m2: np.ndarray | None = None

    def add_block(self, rows: np.ndarray) -> None:
        rows = np.atleast_2d(rows)
        nb = rows.shape[0]
        mean_b = rows.mean(axis=0)
        m2_b = np.sum((rows - mean_b) ** 2, axis=0)
        if self.n == 0:
            self.n, self.mean, self.m2 = nb, mean_b, m2_b
            return
        na = self.n
        delta = mean_b - self.mean
        total = na + nb
        self.mean = self.mean + delta * (nb / total)
        self.m2 = self.m2 + m2_b + delta * delta * (na * nb / total)
        self.n = total

    def standard_error(self) -> np.ndarray:
        if self.n < 2:
            return np.full_like(self.mean, np.nan)
        return np.sqrt(self.m2 / (self.n - 1) / self.n)
