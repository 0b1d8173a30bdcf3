"""Online linear optimization primitives.

Two pieces: a scale-free FTRL learner restricted to the nonnegative orthant
(weights w_t = max(0, -L / sqrt(q)) where L is the running loss sum and q the
running sum of squared loss norms), and the sleeping-experts reduction that
turns those orthant weights into a probability distribution over the experts
active in a round, feeding back a surrogate loss so that asleep experts are
charged nothing.

The learner is parameter free: rescaling all losses by a common positive
factor rescales L by the factor and sqrt(q) by the same factor, leaving the
weights unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class SoloState:
    """Running sums of the scale-free orthant learner: loss vector L, squared norm q."""

    L: np.ndarray
    q: float

    def __post_init__(self):
        object.__setattr__(self, "L", np.asarray(self.L, dtype=float))
        if self.L.ndim != 1 or self.L.size == 0:
            raise ValueError("L must be a nonempty vector")
        if not (self.q >= 0.0 and np.isfinite(self.q)):
            raise ValueError("q must be finite and nonnegative")

    @classmethod
    def zeros(cls, d: int) -> "SoloState":
        if d < 1:
            raise ValueError("dimension must be at least 1")
        return cls(np.zeros(d), 0.0)

    @property
    def d(self) -> int:
        return self.L.size


def solo_weights(state: SoloState) -> np.ndarray:
    """Current orthant weights max(0, -L / sqrt(q)), with 0/0 treated as 0.

    In sequential use q == 0 only before any nonzero loss arrived, in which
    case L == 0 as well and the weights are the zero vector.
    """
    if state.q == 0.0:
        return np.zeros(state.d)
    return np.maximum(0.0, -state.L / np.sqrt(state.q))


def solo_ingest(state: SoloState, loss: np.ndarray) -> SoloState:
    """Fold one loss vector into the running sums."""
    loss = np.asarray(loss, dtype=float)
    if loss.shape != state.L.shape:
        raise ValueError("loss dimension mismatch")
    if not np.all(np.isfinite(loss)):
        raise ValueError("loss must be finite")
    return SoloState(state.L + loss, state.q + float(np.sum(loss * loss)))


def se_normalize(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Distribution over active experts proportional to a * w.

    When every active weight is zero (including the all-zero initial weights)
    the mass falls back to uniform over the active set. A round with no active
    expert is an error; the caller must not ask for a distribution then.
    """
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    if a.shape != w.shape:
        raise ValueError("activity and weights must have equal dimension")
    if not np.all((a == 0.0) | (a == 1.0)):
        raise ValueError("activity must be a 0/1 vector")
    n_active = float(np.sum(a))
    if n_active == 0.0:
        raise ValueError("no active expert")
    masses = a * w
    total = float(np.sum(masses))
    if total > 0.0:
        return masses / total
    return a / n_active


def se_surrogate_loss(a: np.ndarray, loss: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Centered surrogate a * (loss - <loss, v>) fed to the orthant learner.

    Asleep coordinates are zeroed, and the active ones are centered at the
    realized mixture loss, so |surrogate| <= 2 max |loss| coordinate-wise.
    """
    a = np.asarray(a, dtype=float)
    loss = np.asarray(loss, dtype=float)
    v = np.asarray(v, dtype=float)
    mix = float(np.sum(loss * v))
    return a * (loss - mix)


def sleeping_experts_round(
    solo: SoloState,
    a: np.ndarray,
    loss_fn: Callable[[np.ndarray], np.ndarray],
) -> tuple[np.ndarray, SoloState]:
    """One full sleeping-experts round.

    Computes the orthant weights, normalizes them over the active set into a
    distribution v, obtains the round's loss vector from `loss_fn(v)`, and
    ingests the centered surrogate. Returns (v, updated learner state).
    """
    v = se_normalize(a, solo_weights(solo))
    loss = np.asarray(loss_fn(v), dtype=float)
    surrogate = se_surrogate_loss(a, loss, v)
    return v, solo_ingest(solo, surrogate)


class SleepingExperts:
    """Stateful two-phase wrapper: ask for the distribution, then report losses."""

    def __init__(self, d: int):
        self.solo = SoloState.zeros(d)
        self._pending: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def d(self) -> int:
        return self.solo.d

    def distribution(self, a: np.ndarray) -> np.ndarray:
        if self._pending is not None:
            raise RuntimeError("distribution requested twice without losses")
        v = se_normalize(a, solo_weights(self.solo))
        self._pending = (np.asarray(a, dtype=float), v)
        return v

    def observe(self, loss: np.ndarray) -> None:
        if self._pending is None:
            raise RuntimeError("losses reported before a distribution was requested")
        a, v = self._pending
        surrogate = se_surrogate_loss(a, loss, v)
        self.solo = solo_ingest(self.solo, surrogate)
        self._pending = None


def sleeping_regret(activity: np.ndarray, losses: np.ndarray,
                    distributions: np.ndarray) -> float:
    """Realized sleeping regret max_i sum_t a_ti (<loss_t, v_t> - loss_ti).

    Evaluation helper: each expert is compared only on the rounds it was
    awake, against the mixture loss actually incurred.
    """
    activity = np.asarray(activity, dtype=float)
    losses = np.asarray(losses, dtype=float)
    distributions = np.asarray(distributions, dtype=float)
    mix = np.sum(losses * distributions, axis=1)
    per_expert = np.sum(activity * (mix[:, None] - losses), axis=0)
    return float(np.max(per_expert))
