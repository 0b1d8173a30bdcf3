"""Seeded Monte Carlo experiment harness.

Replication r draws its coin stream (and, in redraw mode, its population)
from seeds derived by hashing (master seed, purpose, r) with SHA-256, so each
replication's results are a pure function of the configuration and invariant
to the total replication count, execution order, and internal blocking. The
runner executes replications in lockstep blocks through the vectorized
engine; the engine is held to exact agreement with the scalar designs by the
test suite.

Reports land in an output directory as `curves.csv` (per-round aggregates at
logging checkpoints: every round up to 1000, then geometrically spaced) and
`summary.json` (final aggregates plus the config echo). Figures are rendered
from those files by the report path, next to the CSV.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import subprocess
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _engine
from .core import ConfigurationError, OutcomeSequence
from .data import (DatasetSpec, GaussianSpec, ScoreGroupSpec, gen_gaussian,
                   ingest_csv, score_quantile_groups)
from .designs import (ClippingFunction, log_power_clipping, polynomial_clipping,
                      schedule_sc, schedule_zero)
from .estimation import true_ate
from .evaluation import optimal_propensity, optimal_propensity_from_moments

DESIGN_KINDS = ("fixed", "clip-ogd-0", "clip-ogd-sc", "mgate")


def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit seed from the master seed and a purpose path.

    sha256("master:part:...") truncated to 8 bytes; documented so other
    implementations can reproduce the exact streams.
    """
    material = ":".join(str(p) for p in (master, *parts))
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") >> 1


def checkpoints(horizon: int, dense_until: int = 1000, ratio: float = 1.1) -> np.ndarray:
    """Logging grid: every round up to `dense_until`, then geometric spacing."""
    ts = list(range(1, min(horizon, dense_until) + 1))
    t = ts[-1]
    while t < horizon:
        t = min(horizon, max(t + 1, math.ceil(t * ratio)))
        ts.append(t)
    return np.array(ts, dtype=int)


def _clipping_from_dict(spec: dict | None) -> ClippingFunction:
    if spec is None:
        return log_power_clipping()
    kind = spec.get("name", "log-power")
    if kind == "log-power":
        return log_power_clipping(power=spec.get("power", 0.25),
                                  offset=spec.get("offset", 2.0))
    if kind == "polynomial":
        return polynomial_clipping(exponent=spec.get("exponent", 0.1),
                                   scale=spec.get("scale", 2.5))
    raise ConfigurationError(f"unknown clipping function {kind!r}")


@dataclass(frozen=True)
class DesignConfig:
    """Which assignment design to run and its knobs.

    `c` is the assumed lower moment bound feeding the strongly convex step
    sizes eta_t = 1/(2 c^2 t); the default c = 1 gives eta_t = 1/(2t), and
    c = 0.5 gives the commonly used eta_t = 2/t.
    """

    kind: str = "clip-ogd-sc"
    p: float = 0.5
    c: float = 1.0
    clipping: dict | None = None
    fallback_p: float = 0.5

    def __post_init__(self):
        if self.kind not in DESIGN_KINDS:
            raise ConfigurationError(
                f"unknown design {self.kind!r}; expected one of {DESIGN_KINDS}")
        if self.kind == "fixed" and not 0.0 < self.p < 1.0:
            raise ConfigurationError("fixed design needs p strictly inside (0, 1)")
        if self.c <= 0:
            raise ConfigurationError("c must be positive")

    def clipping_function(self) -> ClippingFunction:
        return _clipping_from_dict(self.clipping)


@dataclass(frozen=True)
class GroupsConfig:
    """Group definitions: either counterfactual score quantiles, or named
    predicates over covariate fields / 0-1 membership columns.

    Exactly one of `score` and `named` is set. Named entries are dicts:
      {"name": ..., "kind": "all"}
      {"name": ..., "kind": "interval", "field": ..., "lo": ..., "hi": ...}
      {"name": ..., "kind": "column", "column": ...}
    with `lo`/`hi` optional (one-sided thresholds allowed, bounds inclusive).
    """

    score: ScoreGroupSpec | None = None
    named: tuple[dict, ...] | None = None

    def __post_init__(self):
        if (self.score is None) == (self.named is None):
            raise ConfigurationError("provide exactly one of score or named groups")
        if self.named is not None:
            seen = set()
            for entry in self.named:
                name = entry.get("name")
                if not name or name in seen:
                    raise ConfigurationError("named groups need unique nonempty names")
                seen.add(name)
                kind = entry.get("kind")
                if kind not in ("all", "interval", "column"):
                    raise ConfigurationError(f"unknown group kind {kind!r}")
                if kind == "interval" and "field" not in entry:
                    raise ConfigurationError("interval group needs a field")
                if kind == "column" and "column" not in entry:
                    raise ConfigurationError("column group needs a column")

    def build(self, seq: OutcomeSequence) -> tuple[list[str], np.ndarray]:
        """Names and (T, d) membership for one population."""
        if self.score is not None:
            groups = score_quantile_groups(seq, self.score)
            return groups.names, groups.membership
        columns = []
        names = []
        for entry in self.named:
            names.append(entry["name"])
            kind = entry["kind"]
            if kind == "all":
                columns.append(np.ones(len(seq), dtype=bool))
                continue
            if seq.covariates is None:
                raise ConfigurationError(
                    f"group {entry['name']!r} needs covariates the data source lacks")
            if kind == "interval":
                lo = float(entry.get("lo", -math.inf))
                hi = float(entry.get("hi", math.inf))
                vals = _numeric_field(seq, entry["field"])
                columns.append((vals >= lo) & (vals <= hi))
            else:
                vals = _numeric_field(seq, entry["column"])
                bad = ~np.isin(vals[~np.isnan(vals)], (0.0, 1.0))
                if np.isnan(vals).any() or bad.any():
                    raise ConfigurationError(
                        f"membership column {entry['column']!r} must be 0/1")
                columns.append(vals == 1.0)
        return names, np.column_stack(columns)


def _numeric_field(seq: OutcomeSequence, name: str) -> np.ndarray:
    out = np.empty(len(seq))
    for i, cov in enumerate(seq.covariates):
        if name not in cov:
            raise ConfigurationError(f"covariate field {name!r} missing at unit {i + 1}")
        val = cov[name]
        if isinstance(val, str):
            raise ConfigurationError(f"covariate field {name!r} is not numeric")
        out[i] = float(val)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; serializable to/from JSON."""

    data: GaussianSpec | DatasetSpec
    design: DesignConfig = DesignConfig()
    groups: GroupsConfig | None = None
    replications: int = 500
    seed: int = 0
    alpha: float = 0.05
    fixed_population: bool | None = None
    evaluate_regret: bool = True
    per_group_regret: bool | None = None
    out: str | None = None

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigurationError("need at least one replication")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie strictly inside (0, 1)")
        if self.design.kind == "mgate" and self.groups is None and not (
                isinstance(self.data, DatasetSpec) and self.data.group_cols):
            raise ConfigurationError(
                "the multigroup design needs groups: a groups config or CSV group columns")

    def resolved_fixed_population(self) -> bool:
        # CSV populations freeze by default; synthetic ones redraw per replication.
        if self.fixed_population is not None:
            return self.fixed_population
        return isinstance(self.data, DatasetSpec)

    def resolved_per_group(self) -> bool:
        if self.per_group_regret is not None:
            return self.per_group_regret
        return self.groups is not None or (
            isinstance(self.data, DatasetSpec) and bool(self.data.group_cols))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    if isinstance(cfg.data, GaussianSpec):
        data = {"kind": "gaussian", **dataclasses.asdict(cfg.data)}
    else:
        data = {"kind": "csv", **dataclasses.asdict(cfg.data)}
        data["path"] = str(data["path"])
        data["group_cols"] = list(data["group_cols"])
    groups = None
    if cfg.groups is not None:
        if cfg.groups.score is not None:
            score = dataclasses.asdict(cfg.groups.score)
            score["thresholds"] = [list(pair) for pair in score["thresholds"]]
            if score["names"] is not None:
                score["names"] = list(score["names"])
            groups = {"score_quantiles": score}
        else:
            groups = {"groups": [dict(e) for e in cfg.groups.named]}
    return {
        "data": data,
        "design": dataclasses.asdict(cfg.design),
        "groups": groups,
        "replications": cfg.replications,
        "seed": cfg.seed,
        "alpha": cfg.alpha,
        "fixed_population": cfg.fixed_population,
        "evaluate_regret": cfg.evaluate_regret,
        "per_group_regret": cfg.per_group_regret,
        "out": cfg.out,
    }


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    data_raw = dict(raw.pop("data"))
    kind = data_raw.pop("kind", "gaussian")
    if kind == "gaussian":
        data = GaussianSpec(**data_raw)
    elif kind == "csv":
        if "group_cols" in data_raw:
            data_raw["group_cols"] = tuple(data_raw["group_cols"])
        data = DatasetSpec(**data_raw)
    else:
        raise ConfigurationError(f"unknown data kind {kind!r}")
    design = DesignConfig(**raw.pop("design", {}))
    groups = groups_config_from_dict(raw.pop("groups", None))
    return ExperimentConfig(data=data, design=design, groups=groups, **raw)


def groups_config_from_dict(raw: dict | None) -> GroupsConfig | None:
    """Parse the group spec document (also the --groups file format)."""
    if raw is None:
        return None
    if "score_quantiles" in raw:
        score_raw = dict(raw["score_quantiles"])
        if "thresholds" in score_raw:
            score_raw["thresholds"] = tuple(tuple(pair) for pair in score_raw["thresholds"])
        if score_raw.get("names") is not None:
            score_raw["names"] = tuple(score_raw["names"])
        return GroupsConfig(score=ScoreGroupSpec(**score_raw))
    if "groups" in raw:
        return GroupsConfig(named=tuple(raw["groups"]))
    raise ConfigurationError(
        "groups document must contain 'score_quantiles' or 'groups'")


def load_config(path: str | Path) -> ExperimentConfig:
    with Path(path).open() as fh:
        return config_from_dict(json.load(fh))


@dataclass
class Population:
    seq: OutcomeSequence
    membership: np.ndarray | None
    group_names: list[str]


def _build_population(cfg: ExperimentConfig, data_seed: int,
                      shuffle_seed: int | None = None) -> Population:
    if isinstance(cfg.data, GaussianSpec):
        seq = gen_gaussian(cfg.data, rng=data_seed)
        membership, names = None, []
    else:
        spec = cfg.data
        if shuffle_seed is not None and spec.shuffle_seed is not None:
            spec = replace(spec, shuffle_seed=shuffle_seed)
        ingested = ingest_csv(spec, rng=data_seed)
        seq, membership, names = ingested.seq, ingested.membership, ingested.group_names
    if cfg.groups is not None:
        names, membership = cfg.groups.build(seq)
    return Population(seq, membership, list(names))


def _population_seed(cfg: ExperimentConfig) -> int:
    if isinstance(cfg.data, GaussianSpec) and cfg.data.seed is not None:
        return cfg.data.seed
    return derive_seed(cfg.seed, "population")


@dataclass
class GroupAggregate:
    name: str
    mean_regret: np.ndarray
    se_regret: np.ndarray
    mean_count: np.ndarray
    final_regret_mean: float
    final_regret_se: float
    mean_final_propensity: float | None
    p_star: float | None


@dataclass
class AggregateReport:
    """Aggregates over replications; per-time arrays span the full horizon."""

    config: dict
    horizon: int
    replications: int
    checkpoint_ts: np.ndarray
    mean_propensity: np.ndarray
    mean_tau_trace: np.ndarray
    mean_regret: np.ndarray | None
    se_regret: np.ndarray | None
    tau_hats: np.ndarray
    vb_hats: np.ndarray
    final_propensities: np.ndarray
    tau_hat_mean: float
    tau_hat_sd: float
    vb_hat_mean: float
    true_ate: float
    ci_coverage: float
    final_regret_mean: float | None
    final_regret_se: float | None
    per_group: dict[str, GroupAggregate]
    final_group_propensities: np.ndarray | None
    p_star: float | None
    regret_checkpoint_samples: np.ndarray | None
    runtime_seconds: float
    version: str


def _block_sizes(replications: int, horizon: int, width: int) -> list[int]:
    # Fixed blocking rule (a pure function of R, T, d) keeps merge order,
    # and therefore output bytes, reproducible.
    per_block = max(1, min(replications, 4_000_000 // max(1, horizon * max(1, width))))
    sizes = []
    left = replications
    while left > 0:
        take = min(per_block, left)
        sizes.append(take)
        left -= take
    return sizes


def _global_p_star(cfg: ExperimentConfig, fixed: bool,
                   pop: Population | None) -> float | None:
    if fixed and pop is not None:
        y1sq = float(np.sum(pop.seq.y1 ** 2))
        y0sq = float(np.sum(pop.seq.y0 ** 2))
        if y1sq == 0.0 and y0sq == 0.0:
            return None
        return optimal_propensity(pop.seq.y1, pop.seq.y0)
    if isinstance(cfg.data, GaussianSpec):
        g = cfg.data
        return optimal_propensity_from_moments(g.mu1 ** 2 + g.sigma ** 2,
                                               g.mu0 ** 2 + g.sigma ** 2)
    return None


def _group_p_star(pop: Population, j: int) -> float | None:
    m = pop.membership[:, j]
    if not m.any():
        return None
    y1 = pop.seq.y1[m]
    y0 = pop.seq.y0[m]
    if float(np.sum(y1 * y1)) == 0.0 and float(np.sum(y0 * y0)) == 0.0:
        return None
    return optimal_propensity(y1, y0)


def run_experiment(cfg: ExperimentConfig,
                   keep_regret_samples: bool = False) -> AggregateReport:
    """Run all replications and aggregate. Deterministic given the config."""
    t_start = time.perf_counter()
    fixed = cfg.resolved_fixed_population()
    want_groups = cfg.resolved_per_group() or cfg.design.kind == "mgate"

    fixed_pop: Population | None = None
    if fixed:
        fixed_pop = _build_population(cfg, _population_seed(cfg))
        horizon = len(fixed_pop.seq)
        group_names = fixed_pop.group_names
    else:
        probe = _build_population(cfg, _population_seed(cfg))
        horizon = len(probe.seq)
        group_names = probe.group_names
    if cfg.design.kind == "mgate":
        need = fixed_pop.membership if fixed else probe.membership
        if need is None:
            raise ConfigurationError("the multigroup design needs a group membership source")
    if cfg.design.kind == "clip-ogd-0" and horizon < 2:
        raise ConfigurationError("the horizon-tuned design needs at least 2 rounds")

    want_groups = want_groups and bool(group_names)
    ckpt = checkpoints(horizon)
    width = max(1, len(group_names)) if want_groups else 1
    rounds_axis = np.arange(1, horizon + 1, dtype=float)

    prop_stats = _engine.RunningMoments()
    trace_stats = _engine.RunningMoments()
    regret_stats = _engine.RunningMoments() if cfg.evaluate_regret else None
    group_regret_stats = {name: _engine.RunningMoments() for name in group_names} \
        if (cfg.evaluate_regret and want_groups) else {}
    group_count_stats = {name: _engine.RunningMoments() for name in group_names} \
        if (cfg.evaluate_regret and want_groups) else {}
    tau_finals, vb_finals, cover_flags, truths = [], [], [], []
    prop_finals, regret_finals = [], []
    group_prop_finals, group_final_regrets = [], []
    regret_samples = [] if (keep_regret_samples and cfg.evaluate_regret) else None

    next_rep = 1
    for block in _block_sizes(cfg.replications, horizon, width):
        reps = list(range(next_rep, next_rep + block))
        next_rep += block
        uniforms = _engine.uniform_streams(
            [derive_seed(cfg.seed, "assign", r) for r in reps], horizon)

        if fixed:
            y1, y0 = fixed_pop.seq.y1, fixed_pop.seq.y0
            membership = fixed_pop.membership
            block_truth = np.full(block, true_ate(fixed_pop.seq))
        else:
            pops = [
                _build_population(cfg, derive_seed(cfg.seed, "data", r),
                                  shuffle_seed=derive_seed(cfg.seed, "shuffle", r))
                for r in reps
            ]
            y1 = np.stack([p.seq.y1 for p in pops])
            y0 = np.stack([p.seq.y0 for p in pops])
            membership = (np.stack([p.membership for p in pops])
                          if pops[0].membership is not None else None)
            block_truth = np.array([true_ate(p.seq) for p in pops])

        kind = cfg.design.kind
        if kind == "fixed":
            run = _engine.run_fixed_block(cfg.design.p, y1, y0, uniforms)
        elif kind == "clip-ogd-0":
            run = _engine.run_clip_ogd_block(schedule_zero(horizon), y1, y0, uniforms)
        elif kind == "clip-ogd-sc":
            run = _engine.run_clip_ogd_block(
                schedule_sc(cfg.design.c, cfg.design.clipping_function()),
                y1, y0, uniforms)
        else:
            run = _engine.run_mgate_block(
                cfg.design.c, cfg.design.clipping_function(), cfg.design.fallback_p,
                membership, y1, y0, uniforms)

        terms = _engine.ipw_terms_block(run)
        trace = np.cumsum(terms, axis=1) / rounds_axis
        vb = _engine.variance_bound_block(run)
        tau = trace[:, -1]
        half = np.sqrt(vb / cfg.alpha)
        cover = np.abs(tau - block_truth) <= half

        prop_stats.add_block(run.propensities)
        trace_stats.add_block(trace)
        tau_finals.append(tau)
        vb_finals.append(vb)
        cover_flags.append(cover)
        truths.append(block_truth)
        prop_finals.append(run.propensities[:, -1])
        if run.final_group_propensities is not None:
            group_prop_finals.append(run.final_group_propensities)

        if cfg.evaluate_regret:
            regret = _engine.running_regret_block(run, y1, y0)
            regret_stats.add_block(regret)
            regret_finals.append(regret[:, -1])
            if regret_samples is not None:
                regret_samples.append(regret[:, ckpt - 1])
            if want_groups and membership is not None:
                finals = np.empty((block, len(group_names)))
                for j, name in enumerate(group_names):
                    mask = membership[..., j]
                    gcurve = _engine.running_regret_block(run, y1, y0, mask=mask)
                    group_regret_stats[name].add_block(gcurve)
                    counts = np.cumsum(np.atleast_2d(mask).astype(float), axis=-1)
                    if counts.shape[0] == 1:
                        counts = np.broadcast_to(counts, (block, horizon))
                    group_count_stats[name].add_block(counts)
                    finals[:, j] = gcurve[:, -1]
                group_final_regrets.append(finals)

    tau_hats = np.concatenate(tau_finals)
    vb_hats = np.concatenate(vb_finals)
    coverage = float(np.mean(np.concatenate(cover_flags)))
    truth_mean = float(np.mean(np.concatenate(truths)))
    p_star = _global_p_star(cfg, fixed, fixed_pop)

    per_group: dict[str, GroupAggregate] = {}
    group_props = np.concatenate(group_prop_finals) if group_prop_finals else None
    if cfg.evaluate_regret and want_groups and group_final_regrets:
        all_group_finals = np.concatenate(group_final_regrets)
        for j, name in enumerate(group_names):
            stats = group_regret_stats[name]
            finals_j = all_group_finals[:, j]
            per_group[name] = GroupAggregate(
                name=name,
                mean_regret=stats.mean,
                se_regret=stats.standard_error(),
                mean_count=group_count_stats[name].mean,
                final_regret_mean=float(np.mean(finals_j)),
                final_regret_se=float(np.std(finals_j, ddof=1) / np.sqrt(len(finals_j)))
                if len(finals_j) > 1 else float("nan"),
                mean_final_propensity=float(np.mean(group_props[:, j]))
                if group_props is not None else None,
                p_star=_group_p_star(fixed_pop, j) if fixed else None,
            )

    regret_final_arr = np.concatenate(regret_finals) if regret_finals else None
    report = AggregateReport(
        config=config_to_dict(cfg),
        horizon=horizon,
        replications=cfg.replications,
        checkpoint_ts=ckpt,
        mean_propensity=prop_stats.mean,
        mean_tau_trace=trace_stats.mean,
        mean_regret=regret_stats.mean if regret_stats is not None else None,
        se_regret=regret_stats.standard_error() if regret_stats is not None else None,
        tau_hats=tau_hats,
        vb_hats=vb_hats,
        final_propensities=np.concatenate(prop_finals),
        tau_hat_mean=float(np.mean(tau_hats)),
        tau_hat_sd=float(np.std(tau_hats, ddof=1)) if len(tau_hats) > 1 else 0.0,
        vb_hat_mean=float(np.mean(vb_hats)),
        true_ate=truth_mean,
        ci_coverage=coverage,
        final_regret_mean=float(np.mean(regret_final_arr))
        if regret_final_arr is not None else None,
        final_regret_se=float(np.std(regret_final_arr, ddof=1) / np.sqrt(len(regret_final_arr)))
        if regret_final_arr is not None and len(regret_final_arr) > 1 else None,
        per_group=per_group,
        final_group_propensities=group_props,
        p_star=p_star,
        regret_checkpoint_samples=np.concatenate(regret_samples)
        if regret_samples else None,
        runtime_seconds=time.perf_counter() - t_start,
        version=package_version(),
    )
    return report


@dataclass(frozen=True)
class CoverageResult:
    coverage: float
    nominal: float
    replications: int


def coverage_study(cfg: ExperimentConfig) -> CoverageResult:
    """Fraction of replications whose conservative interval covers the truth.

    Degenerate point intervals count as covering only on exact equality.
    """
    report = run_experiment(cfg)
    return CoverageResult(report.ci_coverage, 1.0 - cfg.alpha, cfg.replications)


def package_version() -> str:
    from . import __version__
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent, capture_output=True, text=True,
            timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def write_report(report: AggregateReport, out_dir: str | Path) -> dict[str, Path]:
    """Write curves.csv and summary.json; returns the paths written.

    Curve floats are emitted with repr so parsing them back reproduces the
    aggregate arrays exactly. Wall-clock time appears only in the summary.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curves_path = out / "curves.csv"
    summary_path = out / "summary.json"

    header = ["t", "mean_propensity"]
    has_regret = report.mean_regret is not None
    if has_regret:
        header += ["mean_regret", "se_regret"]
        for name in report.per_group:
            header += [f"mean_regret_{name}", f"se_regret_{name}"]
    idx = report.checkpoint_ts - 1
    lines = [",".join(header)]
    for k, t in enumerate(report.checkpoint_ts):
        row = [str(int(t)), repr(float(report.mean_propensity[idx[k]]))]
        if has_regret:
            row += [repr(float(report.mean_regret[idx[k]])),
                    repr(float(report.se_regret[idx[k]]))]
            for name in report.per_group:
                agg = report.per_group[name]
                row += [repr(float(agg.mean_regret[idx[k]])),
                        repr(float(agg.se_regret[idx[k]]))]
        lines.append(",".join(row))
    curves_path.write_text("\n".join(lines) + "\n")

    summary = {
        "config": report.config,
        "tau_hat_mean": report.tau_hat_mean,
        "tau_hat_sd": report.tau_hat_sd,
        "true_ate": report.true_ate,
        "vb_hat_mean": report.vb_hat_mean,
        "ci_coverage": report.ci_coverage,
        "final_regret_mean": report.final_regret_mean,
        "per_group": {
            name: {
                "final_regret_mean": agg.final_regret_mean,
                "final_regret_se": _none_if_nan(agg.final_regret_se),
                "mean_final_propensity": agg.mean_final_propensity,
                "p_star": agg.p_star,
            }
            for name, agg in report.per_group.items()
        },
        "p_star": report.p_star,
        "propensity_final_mean": float(np.mean(report.final_propensities)),
        "horizon": report.horizon,
        "replications": report.replications,
        "runtime_seconds": report.runtime_seconds,
        "version": report.version,
    }
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return {"curves": curves_path, "summary": summary_path}


def _none_if_nan(x: float | None) -> float | None:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return None
    return x


def read_curves(path: str | Path) -> dict[str, np.ndarray]:
    """Parse curves.csv back into arrays keyed by column name."""
    text = Path(path).read_text().strip().splitlines()
    header = text[0].split(",")
    cols = {name: [] for name in header}
    for line in text[1:]:
        for name, cell in zip(header, line.split(",")):
            cols[name].append(float(cell))
    return {name: np.array(vals) for name, vals in cols.items()}
