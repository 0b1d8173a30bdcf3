"""Data sources: synthetic Gaussian populations, CSV ingestion, score groups.

CSV ingestion is deliberately strict: unknown tokens fail with the offending
file row rather than silently coercing. All randomized preprocessing
(imputation noise, shuffling) is a pure function of the file bytes, the spec,
and the seeds handed in.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import ConfigurationError, Covariate, OutcomeSequence
from .multigroup import GroupFamily

MISSING_TOKENS = ("", "NA")


@dataclass(frozen=True)
class GaussianSpec:
    """Independent Gaussian outcomes: y1 ~ N(mu1, sigma^2), y0 ~ N(mu0, sigma^2)."""

    mu1: float = 2.0
    mu0: float = 1.0
    sigma: float = 1.0
    horizon: int = 20_000
    seed: int | None = None

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ConfigurationError("sigma must be positive")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be at least 1")


def gen_gaussian(spec: GaussianSpec,
                 rng: np.random.Generator | int | None = None) -> OutcomeSequence:
    """Draw a population from the spec; `rng` overrides the spec seed.

    Draw order is fixed (all treated outcomes, then all control outcomes) so a
    seed pins the population exactly.
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    elif not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    y1 = rng.normal(spec.mu1, spec.sigma, spec.horizon)
    y0 = rng.normal(spec.mu0, spec.sigma, spec.horizon)
    return OutcomeSequence(y1, y0)


@dataclass(frozen=True)
class DatasetSpec:
    """A CSV of per-unit potential outcomes, with optional 0/1 group columns.

    Missing outcome cells ("" or "NA") are filled with Gaussian noise centered
    at the column mean of the present values; the noise scale defaults to the
    column's sample standard deviation. Each unit is then replicated
    `resample` times, and the final order is shuffled when `shuffle_seed` is
    set.
    """

    path: str | Path
    y1_col: str = "y1"
    y0_col: str = "y0"
    group_cols: tuple[str, ...] = ()
    impute_scale: float | None = None
    resample: int = 1
    shuffle_seed: int | None = None

    def __post_init__(self):
        if self.resample < 1:
            raise ConfigurationError("resample must be at least 1")
        if self.impute_scale is not None and self.impute_scale < 0:
            raise ConfigurationError("imputation scale must be nonnegative")


@dataclass(frozen=True)
class IngestedData:
    seq: OutcomeSequence
    membership: np.ndarray | None
    group_names: list[str]


def _parse_cell(raw: str, column: str, file_row: int) -> float:
    token = raw.strip()
    if token in MISSING_TOKENS:
        return math.nan
    try:
        return float(token)
    except ValueError:
        raise ValueError(
            f"row {file_row}: cannot parse {raw!r} in column {column!r}") from None


def _impute(values: np.ndarray, scale: float | None, column: str,
            rng: np.random.Generator) -> np.ndarray:
    missing = np.isnan(values)
    if not missing.any():
        return values
    present = values[~missing]
    if present.size == 0:
        raise ValueError(f"column {column!r} has no observed values to impute from")
    mean = float(np.mean(present))
    if scale is None:
        scale = float(np.std(present, ddof=1)) if present.size >= 2 else 0.0
    out = values.copy()
    out[missing] = rng.normal(mean, scale, int(missing.sum()))
    return out


def ingest_csv(spec: DatasetSpec,
               rng: np.random.Generator | int | None = None) -> IngestedData:
    """Load, impute, replicate, and shuffle a CSV population.

    `rng` drives the imputation noise and is only needed when outcome cells
    are missing; the shuffle uses its own generator seeded by
    `spec.shuffle_seed`. Non-outcome columns travel along as covariates;
    group columns must be strictly 0/1 and are also returned as a boolean
    membership matrix.
    """
    path = Path(spec.path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = [row for row in reader if any(cell.strip() for cell in row)]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    for needed in (spec.y1_col, spec.y0_col, *spec.group_cols):
        if needed not in header:
            raise ValueError(f"{path}: missing required column {needed!r}")
    col_index = {name: header.index(name) for name in header}

    def column(name: str) -> np.ndarray:
        idx = col_index[name]
        vals = []
        for i, row in enumerate(rows):
            if len(row) != len(header):
                raise ValueError(f"row {i + 2}: expected {len(header)} cells, got {len(row)}")
            vals.append(_parse_cell(row[idx], name, i + 2))
        return np.array(vals)

    if rng is not None and not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    y1 = column(spec.y1_col)
    y0 = column(spec.y0_col)
    if np.isnan(y1).any() or np.isnan(y0).any():
        if rng is None:
            raise ValueError("missing outcome cells present; an rng is required for imputation")
        y1 = _impute(y1, spec.impute_scale, spec.y1_col, rng)
        y0 = _impute(y0, spec.impute_scale, spec.y0_col, rng)

    membership_cols = []
    for name in spec.group_cols:
        vals = column(name)
        if np.isnan(vals).any() or not np.all(np.isin(vals, (0.0, 1.0))):
            raise ValueError(f"group column {name!r} must contain only 0 or 1")
        membership_cols.append(vals.astype(bool))

    covariate_names = [h for h in header if h not in (spec.y1_col, spec.y0_col)]
    covariates: list[Covariate] = []
    for i, row in enumerate(rows):
        record: Covariate = {}
        for name in covariate_names:
            record[name] = _parse_cell(row[col_index[name]], name, i + 2) \
                if _is_numeric(row[col_index[name]]) else row[col_index[name]].strip()
        covariates.append(record)

    idx = np.repeat(np.arange(len(rows)), spec.resample)
    if spec.shuffle_seed is not None:
        idx = idx[np.random.default_rng(spec.shuffle_seed).permutation(len(idx))]
    seq = OutcomeSequence(y1[idx], y0[idx], [covariates[i] for i in idx])
    membership = (np.column_stack(membership_cols)[idx]
                  if membership_cols else None)
    return IngestedData(seq, membership, list(spec.group_cols))


def _is_numeric(raw: str) -> bool:
    token = raw.strip()
    if token in MISSING_TOKENS:
        return True
    try:
        float(token)
        return True
    except ValueError:
        return False


@dataclass(frozen=True)
class ScoreGroupSpec:
    """Rank-interval groups built from a counterfactual balance score.

    Each unit gets the score s = 1 / (1 + y0^2 / (y1^2 + epsilon)), which is
    near 1 when the treated outcome dominates and near 0 when the control
    outcome does. Units are ranked by the midpoint empirical CDF of the
    scores (average ranks for ties), and each (lo, hi) threshold pair defines
    a group of units with lo <= rank <= hi. The defaults give two overlapping
    groups (bottom and top two-thirds) plus the everyone group.
    """

    epsilon: float = 1e-9
    thresholds: tuple[tuple[float, float], ...] = ((0.0, 2.0 / 3.0), (1.0 / 3.0, 1.0))
    include_all_group: bool = True
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigurationError("epsilon must be nonnegative")
        for lo, hi in self.thresholds:
            if not (0.0 <= lo <= hi <= 1.0):
                raise ConfigurationError("thresholds must satisfy 0 <= lo <= hi <= 1")
        if self.names is not None:
            expected = len(self.thresholds) + (1 if self.include_all_group else 0)
            if len(self.names) != expected:
                raise ConfigurationError("one name per group required")


@dataclass(frozen=True)
class ScoreGroups:
    family: GroupFamily
    membership: np.ndarray
    names: list[str]
    scores: np.ndarray
    ranks: np.ndarray


def balance_scores(seq: OutcomeSequence, epsilon: float) -> np.ndarray:
    y1sq = seq.y1 * seq.y1
    y0sq = seq.y0 * seq.y0
    return 1.0 / (1.0 + y0sq / (y1sq + epsilon))


def midpoint_ranks(values: np.ndarray) -> np.ndarray:
    """Midpoint empirical-CDF ranks (k - 0.5)/T with average ranks for ties.

    Identical values share the mean of the positions they occupy, so an
    all-ties vector ranks every unit exactly 0.5.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    _, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    starts = np.concatenate(([0.0], np.cumsum(counts)[:-1]))
    average_rank = starts + (counts + 1.0) / 2.0
    return (average_rank[inverse] - 0.5) / n


def score_quantile_groups(seq: OutcomeSequence,
                          spec: ScoreGroupSpec | None = None) -> ScoreGroups:
    """Build the rank-interval group family for one population.

    Uses counterfactuals, so these groups are a simulation instrument for
    stress-testing multigroup designs, not something observable in the field.
    """
    if spec is None:
        spec = ScoreGroupSpec()
    scores = balance_scores(seq, spec.epsilon)
    ranks = midpoint_ranks(scores)
    columns = []
    names: list[str] = []
    if spec.include_all_group:
        columns.append(np.ones(len(seq), dtype=bool))
        names.append("all")
    for k, (lo, hi) in enumerate(spec.thresholds, start=1):
        columns.append((ranks >= lo) & (ranks <= hi))
        names.append(f"g{k}")
    if spec.names is not None:
        names = list(spec.names)
    membership = np.column_stack(columns)
    family = GroupFamily.from_matrix(names, membership)
    return ScoreGroups(family, membership, names, scores, ranks)
