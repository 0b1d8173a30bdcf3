"""Core types for sequential treatment assignment over a fixed outcome sequence.

The experiment protocol is deliberately minimal: at each round a design emits a
treatment probability, a coin is flipped, and the design observes only the
realized outcome of the chosen arm. Counterfactuals stay inside the
OutcomeSequence and are available to evaluation code only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Protocol, Sequence, runtime_checkable

import numpy as np

Covariate = dict[str, object]


class ConfigurationError(ValueError):
    """Raised when a design, data source, or experiment setup is inconsistent."""


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


@dataclass(frozen=True)
class PotentialOutcomePair:
    """Both potential outcomes (treated, control) of one experimental unit."""

    y1: float
    y0: float

    def __post_init__(self):
        if not (math.isfinite(self.y1) and math.isfinite(self.y0)):
            raise ValueError("potential outcomes must be finite")


class OutcomeSequence:
    """An ordered, finite population of potential outcome pairs.

    Optionally carries one covariate record per unit. Internally array backed
    so estimators and evaluators can work with vectors directly.
    """

    def __init__(self, y1, y0, covariates: Sequence[Covariate] | None = None):
        self.y1 = _as_float_array(y1, "y1")
        self.y0 = _as_float_array(y0, "y0")
        if self.y1.shape != self.y0.shape:
            raise ValueError("y1 and y0 must have equal length")
        if covariates is not None and len(covariates) != len(self.y1):
            raise ValueError("covariates must align with outcomes")
        self.covariates = list(covariates) if covariates is not None else None

    @classmethod
    def from_pairs(cls, pairs: Iterable[PotentialOutcomePair],
                   covariates: Sequence[Covariate] | None = None) -> "OutcomeSequence":
        pairs = list(pairs)
        return cls([p.y1 for p in pairs], [p.y0 for p in pairs], covariates)

    def __len__(self) -> int:
        return len(self.y1)

    def __getitem__(self, t: int) -> PotentialOutcomePair:
        return PotentialOutcomePair(float(self.y1[t]), float(self.y0[t]))

    def pairs(self) -> Iterator[PotentialOutcomePair]:
        for a, b in zip(self.y1, self.y0):
            yield PotentialOutcomePair(float(a), float(b))

    def covariate(self, t: int) -> Covariate | None:
        return None if self.covariates is None else self.covariates[t]


@dataclass(frozen=True)
class AssignmentRecord:
    """One experiment round: propensity emitted, arm drawn, outcome observed."""

    t: int
    propensity: float
    decision: int
    y_obs: float

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("round index starts at 1")
        if not 0.0 < self.propensity < 1.0:
            raise ValueError("propensity must lie strictly inside (0, 1)")
        if self.decision not in (0, 1):
            raise ValueError("decision must be 0 or 1")
        if not math.isfinite(self.y_obs):
            raise ValueError("observed outcome must be finite")


class Trajectory:
    """The full record of a run: per-round propensities, decisions, outcomes."""

    def __init__(self, propensities, decisions, outcomes):
        self.propensities = _as_float_array(propensities, "propensities")
        self.decisions = np.asarray(decisions, dtype=int)
        self.outcomes = _as_float_array(outcomes, "outcomes")
        if not (len(self.propensities) == len(self.decisions) == len(self.outcomes)):
            raise ValueError("trajectory components must have equal length")
        if np.any((self.propensities <= 0.0) | (self.propensities >= 1.0)):
            raise ValueError("propensities must lie strictly inside (0, 1)")
        if not np.all(np.isin(self.decisions, (0, 1))):
            raise ValueError("decisions must be 0 or 1")

    @classmethod
    def from_records(cls, records: Iterable[AssignmentRecord]) -> "Trajectory":
        records = list(records)
        for i, r in enumerate(records, start=1):
            if r.t != i:
                raise ValueError("round indices must be consecutive starting at 1")
        return cls([r.propensity for r in records],
                   [r.decision for r in records],
                   [r.y_obs for r in records])

    def __len__(self) -> int:
        return len(self.propensities)

    @property
    def records(self) -> list[AssignmentRecord]:
        return [AssignmentRecord(t + 1, float(p), int(z), float(y))
                for t, (p, z, y) in enumerate(
                    zip(self.propensities, self.decisions, self.outcomes))]


@dataclass(frozen=True)
class BoundednessConstants:
    """Lower and upper moment bounds (c, C) assumed of an outcome sequence."""

    lower: float
    upper: float

    def __post_init__(self):
        if not (0.0 < self.lower <= self.upper):
            raise ValueError("bounds must satisfy 0 < lower <= upper")


@dataclass(frozen=True)
class BoundsReport:
    ok: bool
    reason: str | None = None
    round_index: int | None = None


def verify_bounds(seq: OutcomeSequence, bounds: BoundednessConstants) -> BoundsReport:
    """Check the moment assumptions a sequence must satisfy for the designs.

    Three clauses, each checked round by round so the diagnostic can name the
    first failure: (1) every outcome magnitude is at most `upper`; (2) every
    unit's outcome norm sqrt(y1^2 + y0^2) is at least `lower`; (3) for each arm
    and every prefix, the root mean square of that arm's outcomes is at least
    `lower`.
    """
    c, big_c = bounds.lower, bounds.upper
    y1, y0 = seq.y1, seq.y0
    cum1 = np.cumsum(y1 * y1)
    cum0 = np.cumsum(y0 * y0)
    denom = np.arange(1, len(seq) + 1, dtype=float)
    rms1 = np.sqrt(cum1 / denom)
    rms0 = np.sqrt(cum0 / denom)
    unit_norm = np.sqrt(y1 * y1 + y0 * y0)
    for t in range(len(seq)):
        if max(abs(y1[t]), abs(y0[t])) > big_c:
            return BoundsReport(False, "outcome above C", t + 1)
        if unit_norm[t] < c:
            return BoundsReport(False, "per-unit norm below c", t + 1)
        if min(rms1[t], rms0[t]) < c:
            return BoundsReport(False, "prefix arm moment below c", t + 1)
    return BoundsReport(True)


@runtime_checkable
class Design(Protocol):
    """Two-phase sequential design: emit a propensity, then take feedback.

    `propose` must be called exactly once per round before `observe`. The
    design never sees the counterfactual outcome.
    """

    requires_covariates: bool

    def propose(self, x: Covariate | None = None) -> float: ...

    def observe(self, y_obs: float, z: int) -> None: ...


def run_design(design: Design, seq: OutcomeSequence,
               rng: np.random.Generator | int | None = None,
               coins: Sequence[int] | None = None) -> Trajectory:
    """Run a design over an outcome sequence and record the trajectory.

    Treatment is drawn as `u < p` with `u` from `rng`, unless `coins` supplies
    a forced 0/1 decision per round (used for exact, scripted tests).
    """
    if getattr(design, "requires_covariates", False) and seq.covariates is None:
        raise ConfigurationError(
            "design requires covariates but the outcome sequence has none")
    if coins is not None:
        coins = list(coins)
        if len(coins) != len(seq):
            raise ValueError("coins must supply one decision per round")
        if any(z not in (0, 1) for z in coins):
            raise ValueError("coins must be 0/1 decisions")
    elif not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)

    T = len(seq)
    propensities = np.empty(T)
    decisions = np.empty(T, dtype=int)
    outcomes = np.empty(T)
    for t in range(T):
        p = float(design.propose(seq.covariate(t)))
        if not 0.0 < p < 1.0:
            raise ValueError(f"design emitted propensity {p!r} outside (0, 1)")
        if coins is not None:
            z = coins[t]
        else:
            z = 1 if rng.random() < p else 0
        y = float(seq.y1[t]) if z == 1 else float(seq.y0[t])
        design.observe(y, z)
        propensities[t] = p
        decisions[t] = z
        outcomes[t] = y
    return Trajectory(propensities, decisions, outcomes)
