"""Seed derivation, configuration plumbing, the vectorized engine, and the
replication harness's aggregation and output contracts."""

import json
from pathlib import Path

import numpy as np
import pytest

from adaptive_design import (ConfigurationError, DatasetSpec, DesignConfig,
                             ExperimentConfig, GaussianSpec, GroupFamily,
                             GroupsConfig, OutcomeSequence, ScoreGroupSpec,
                             checkpoints, clip_ogd_sc, clip_ogd_zero,
                             config_from_dict, config_to_dict, coverage_study,
                             derive_seed, fixed_design, gen_gaussian,
                             ipw_estimate, load_config, mgate, neyman_regret,
                             read_curves, run_design, run_experiment,
                             schedule_sc, schedule_zero, write_report)
from adaptive_design import _engine
from adaptive_design.cli import main
from adaptive_design.harness import _block_sizes

from conftest import constant_sequence

FIXTURE = Path(__file__).resolve().parents[1] / "fixtures" / "demo_outcomes.csv"


def small_gaussian_config(**overrides):
    base = dict(
        data=GaussianSpec(horizon=40),
        design=DesignConfig(kind="clip-ogd-sc", c=0.7),
        replications=6,
        seed=123,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_derive_seed_frozen_value_and_range():
    assert derive_seed(0, "assign", 1) == 630028261820391846
    seen = {derive_seed(0, "assign", r) for r in range(1, 200)}
    seen |= {derive_seed(0, "data", r) for r in range(1, 200)}
    assert len(seen) == 398
    assert all(0 <= s < 2 ** 63 for s in seen)
    assert derive_seed(1, "assign", 1) != derive_seed(0, "assign", 1)


def test_checkpoints_dense_then_geometric():
    short = checkpoints(37)
    np.testing.assert_array_equal(short, np.arange(1, 38))
    long = checkpoints(5000)
    np.testing.assert_array_equal(long[:1000], np.arange(1, 1001))
    assert long[-1] == 5000
    assert np.all(np.diff(long) >= 1)
    tail = long[long >= 1000]
    assert np.all(tail[1:] <= np.ceil(tail[:-1] * 1.1) + 1)
    assert len(long) < 1100


def test_config_roundtrip_gaussian_with_score_groups():
    cfg = ExperimentConfig(
        data=GaussianSpec(mu1=1.5, sigma=0.5, horizon=100, seed=9),
        design=DesignConfig(kind="mgate", c=0.5, clipping={"name": "polynomial"}),
        groups=GroupsConfig(score=ScoreGroupSpec()),
        replications=10,
        alpha=0.1,
    )
    back = config_from_dict(json.loads(json.dumps(config_to_dict(cfg))))
    assert back == cfg


def test_config_roundtrip_csv_named_groups(tmp_path):
    cfg = ExperimentConfig(
        data=DatasetSpec(str(tmp_path / "x.csv"), group_cols=("a", "b"), resample=2),
        design=DesignConfig(kind="fixed", p=0.3),
        groups=GroupsConfig(named=(
            {"name": "everyone", "kind": "all"},
            {"name": "low", "kind": "interval", "field": "x", "hi": 0.5},
        )),
        fixed_population=False,
    )
    back = config_from_dict(json.loads(json.dumps(config_to_dict(cfg))))
    assert back == cfg


def test_load_config_reads_json_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(
        {"data": {"kind": "gaussian", "horizon": 25}, "replications": 3}))
    cfg = load_config(path)
    assert cfg.data.horizon == 25
    assert cfg.replications == 3
    assert cfg.design.kind == "clip-ogd-sc"


def test_config_validation():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(data=GaussianSpec(), replications=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(data=GaussianSpec(), alpha=0.0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(data=GaussianSpec(), design=DesignConfig(kind="mgate"))
    with pytest.raises(ConfigurationError):
        DesignConfig(kind="unknown-design")
    with pytest.raises(ConfigurationError):
        DesignConfig(kind="fixed", p=1.0)


def test_groups_config_requires_exactly_one_source():
    with pytest.raises(ConfigurationError):
        GroupsConfig()
    with pytest.raises(ConfigurationError):
        GroupsConfig(score=ScoreGroupSpec(), named=({"name": "a", "kind": "all"},))
    with pytest.raises(ConfigurationError):
        GroupsConfig(named=({"name": "a", "kind": "interval"},))
    with pytest.raises(ConfigurationError):
        GroupsConfig(named=({"name": "a", "kind": "all"}, {"name": "a", "kind": "all"}))


def test_groups_config_builds_named_memberships():
    covs = [{"x": 0.1, "flag": 1.0}, {"x": 0.6, "flag": 0.0}, {"x": 0.9, "flag": 1.0}]
    seq = OutcomeSequence([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], covs)
    cfg = GroupsConfig(named=(
        {"name": "everyone", "kind": "all"},
        {"name": "low", "kind": "interval", "field": "x", "hi": 0.5},
        {"name": "flagged", "kind": "column", "column": "flag"},
    ))
    names, matrix = cfg.build(seq)
    assert names == ["everyone", "low", "flagged"]
    np.testing.assert_array_equal(
        matrix, [[True, True, True], [True, False, False], [True, False, True]])


def test_groups_config_build_errors():
    bare = constant_sequence(1.0, 1.0, 3)
    cfg = GroupsConfig(named=({"name": "low", "kind": "interval", "field": "x", "hi": 0.5},))
    with pytest.raises(ConfigurationError, match="covariates"):
        cfg.build(bare)
    seq = OutcomeSequence([1.0], [1.0], [{"flag": 2.0}])
    bad = GroupsConfig(named=({"name": "f", "kind": "column", "column": "flag"},))
    with pytest.raises(ConfigurationError, match="0/1"):
        bad.build(seq)


def test_score_groups_config_builds_from_outcomes(rng):
    seq = OutcomeSequence(rng.normal(2, 1, 30), rng.normal(1, 1, 30))
    names, matrix = GroupsConfig(score=ScoreGroupSpec()).build(seq)
    assert names == ["all", "g1", "g2"]
    assert matrix.shape == (30, 3)
    assert matrix[:, 0].all()


def test_uniform_streams_match_sequential_scalar_draws():
    streams = _engine.uniform_streams([5, 6], 16)
    for row, seed in zip(streams, (5, 6)):
        gen = np.random.default_rng(seed)
        np.testing.assert_array_equal(row, [gen.random() for _ in range(16)])


def test_block_sizes_partition_and_cap():
    assert _block_sizes(10, 5, 1) == [10]
    sizes = _block_sizes(1000, 40_000, 1)
    assert sum(sizes) == 1000
    assert max(sizes) == 100
    assert _block_sizes(7, 4_000_000, 1) == [1] * 7


def engine_vs_scalar(kind, horizon=23, block=4, master=99):
    seq = gen_gaussian(GaussianSpec(horizon=horizon, seed=3))
    seeds = [derive_seed(master, "assign", r) for r in range(1, block + 1)]
    uniforms = _engine.uniform_streams(seeds, horizon)
    if kind == "fixed":
        run = _engine.run_fixed_block(0.37, seq.y1, seq.y0, uniforms)
        factory = lambda: fixed_design(0.37)
    elif kind == "clip-ogd-0":
        run = _engine.run_clip_ogd_block(schedule_zero(horizon), seq.y1, seq.y0, uniforms)
        factory = lambda: clip_ogd_zero(horizon)
    else:
        run = _engine.run_clip_ogd_block(schedule_sc(0.6), seq.y1, seq.y0, uniforms)
        factory = lambda: clip_ogd_sc(0.6)
    for i, seed in enumerate(seeds):
        traj = run_design(factory(), seq, rng=np.random.default_rng(seed))
        np.testing.assert_array_equal(run.propensities[i], traj.propensities)
        np.testing.assert_array_equal(run.decisions[i].astype(int), traj.decisions)
        np.testing.assert_array_equal(run.outcomes[i], traj.outcomes)


def test_engine_matches_scalar_fixed():
    engine_vs_scalar("fixed")


def test_engine_matches_scalar_horizon_tuned():
    engine_vs_scalar("clip-ogd-0")


def test_engine_matches_scalar_anytime():
    engine_vs_scalar("clip-ogd-sc")


def test_engine_matches_scalar_multigroup():
    horizon, block = 31, 3
    seq = gen_gaussian(GaussianSpec(horizon=horizon, seed=13))
    membership = np.column_stack([
        np.arange(horizon) % 2 == 0,
        np.arange(horizon) % 3 == 0,
    ])
    membership[5] = False  # one fallback round with no active group
    family = GroupFamily.from_matrix(["even", "third"], membership)
    seeds = [derive_seed(7, "assign", r) for r in range(1, block + 1)]
    uniforms = _engine.uniform_streams(seeds, horizon)
    from adaptive_design.designs import log_power_clipping
    run = _engine.run_mgate_block(0.8, log_power_clipping(), 0.5, membership,
                                  seq.y1, seq.y0, uniforms)
    for i, seed in enumerate(seeds):
        design = mgate(family, c=0.8)
        traj = run_design(design, seq, rng=np.random.default_rng(seed))
        np.testing.assert_array_equal(run.propensities[i], traj.propensities)
        np.testing.assert_array_equal(run.decisions[i].astype(int), traj.decisions)
        np.testing.assert_array_equal(run.final_group_propensities[i], design.p)


def test_engine_regret_matches_evaluator(rng):
    horizon = 18
    seq = OutcomeSequence(rng.uniform(0.5, 2, horizon), rng.uniform(0.5, 2, horizon))
    uniforms = _engine.uniform_streams([41, 42], horizon)
    run = _engine.run_clip_ogd_block(schedule_sc(1.0), seq.y1, seq.y0, uniforms)
    from adaptive_design import Trajectory
    for i in range(2):
        traj = Trajectory(run.propensities[i], run.decisions[i].astype(int),
                          run.outcomes[i])
        np.testing.assert_array_equal(
            _engine.running_regret_block(run, seq.y1, seq.y0)[i],
            neyman_regret(traj, seq).values)


def test_running_moments_match_two_pass(rng):
    rows = rng.normal(3, 2, (57, 11))
    stats = _engine.RunningMoments()
    for chunk in np.array_split(rows, 5):
        stats.add_block(chunk)
    direct_mean = rows.mean(axis=0)
    direct_se = rows.std(axis=0, ddof=1) / np.sqrt(rows.shape[0])
    np.testing.assert_allclose(stats.mean, direct_mean, rtol=1e-12)
    np.testing.assert_allclose(stats.standard_error(), direct_se, rtol=1e-9)


def test_run_experiment_scalar_twin_end_to_end():
    """Every harness replication replays a one-off scalar run exactly.

    Trajectories match bit for bit. The point estimate is compared at one-ulp
    tolerance only because the engine accumulates the IPW mean sequentially
    (cumulative trace) while the scalar estimator uses numpy's pairwise sum.
    """
    cfg = small_gaussian_config(fixed_population=True, replications=3)
    report = run_experiment(cfg)
    pop = gen_gaussian(cfg.data, rng=derive_seed(cfg.seed, "population"))
    for r in range(1, 4):
        traj = run_design(clip_ogd_sc(0.7), pop,
                          rng=np.random.default_rng(derive_seed(cfg.seed, "assign", r)))
        assert report.final_propensities[r - 1] == traj.propensities[-1]
        assert report.tau_hats[r - 1] == pytest.approx(ipw_estimate(traj).tau_hat,
                                                       rel=1e-14)


def test_replication_count_does_not_change_early_replications():
    big = run_experiment(small_gaussian_config(replications=6))
    small = run_experiment(small_gaussian_config(replications=2))
    np.testing.assert_array_equal(big.tau_hats[:2], small.tau_hats)
    np.testing.assert_array_equal(big.vb_hats[:2], small.vb_hats)


def test_run_experiment_deterministic_repeat():
    a = run_experiment(small_gaussian_config())
    b = run_experiment(small_gaussian_config())
    np.testing.assert_array_equal(a.tau_hats, b.tau_hats)
    np.testing.assert_array_equal(a.mean_regret, b.mean_regret)
    np.testing.assert_array_equal(a.mean_propensity, b.mean_propensity)


def test_redrawn_populations_differ_per_replication():
    cfg = small_gaussian_config(replications=2, fixed_population=False)
    report = run_experiment(cfg)
    assert report.tau_hats[0] != report.tau_hats[1]
    assert not report.config["fixed_population"]


def test_fixed_population_resolution_defaults():
    gaussian = small_gaussian_config()
    assert not gaussian.resolved_fixed_population()
    csv_cfg = ExperimentConfig(data=DatasetSpec(FIXTURE), replications=2)
    assert csv_cfg.resolved_fixed_population()
    assert not ExperimentConfig(data=DatasetSpec(FIXTURE),
                                fixed_population=False).resolved_fixed_population()


def test_write_and_read_curves_roundtrip_exactly(tmp_path):
    cfg = small_gaussian_config(replications=4)
    report = run_experiment(cfg)
    paths = write_report(report, tmp_path / "out")
    curves = read_curves(paths["curves"])
    assert list(curves) == ["t", "mean_propensity", "mean_regret", "se_regret"]
    idx = report.checkpoint_ts - 1
    np.testing.assert_array_equal(curves["t"], report.checkpoint_ts)
    np.testing.assert_array_equal(curves["mean_propensity"], report.mean_propensity[idx])
    np.testing.assert_array_equal(curves["mean_regret"], report.mean_regret[idx])
    np.testing.assert_array_equal(curves["se_regret"], report.se_regret[idx])


def test_group_columns_and_summary_schema(tmp_path):
    cfg = ExperimentConfig(
        data=DatasetSpec(FIXTURE, group_cols=("g_high", "g_low")),
        design=DesignConfig(kind="mgate", c=0.7),
        replications=3,
        seed=5,
    )
    report = run_experiment(cfg)
    paths = write_report(report, tmp_path / "out")
    curves = read_curves(paths["curves"])
    assert list(curves) == ["t", "mean_propensity", "mean_regret", "se_regret",
                            "mean_regret_g_high", "se_regret_g_high",
                            "mean_regret_g_low", "se_regret_g_low"]
    summary = json.loads(paths["summary"].read_text())
    for key in ("config", "tau_hat_mean", "tau_hat_sd", "true_ate", "vb_hat_mean",
                "ci_coverage", "final_regret_mean", "per_group", "p_star",
                "propensity_final_mean", "horizon", "replications",
                "runtime_seconds", "version"):
        assert key in summary
    assert set(summary["per_group"]) == {"g_high", "g_low"}
    assert summary["per_group"]["g_high"]["p_star"] is not None
    assert summary["horizon"] == 30
    assert report.final_group_propensities.shape == (3, 2)


def test_skip_regret_omits_regret_columns(tmp_path):
    cfg = small_gaussian_config(evaluate_regret=False)
    report = run_experiment(cfg)
    assert report.mean_regret is None
    paths = write_report(report, tmp_path / "out")
    assert list(read_curves(paths["curves"])) == ["t", "mean_propensity"]


def test_coverage_study_reports_nominal_and_rate():
    cfg = small_gaussian_config(replications=8, alpha=0.1)
    result = coverage_study(cfg)
    assert result.nominal == pytest.approx(0.9)
    assert result.replications == 8
    assert 0.0 <= result.coverage <= 1.0


def test_keep_regret_samples_matches_checkpoint_grid():
    cfg = small_gaussian_config(replications=3)
    report = run_experiment(cfg, keep_regret_samples=True)
    samples = report.regret_checkpoint_samples
    assert samples.shape == (3, len(report.checkpoint_ts))
    assert float(np.mean(samples[:, -1])) == pytest.approx(report.final_regret_mean,
                                                           rel=1e-12)
    np.testing.assert_allclose(samples.mean(axis=0),
                               report.mean_regret[report.checkpoint_ts - 1],
                               rtol=1e-12)


def test_cli_explicit_flags_override_config_file(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "data": {"kind": "gaussian", "horizon": 30},
        "replications": 9,
        "seed": 4,
    }))
    out = tmp_path / "run"
    code = main(["simulate", "--config", str(cfg_path), "--reps", "2",
                 "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["replications"] == 2
    assert summary["config"]["seed"] == 4
    assert "tau_hat mean=" in capsys.readouterr().out


def test_cli_rejects_horizon_for_csv(tmp_path, capsys):
    code = main(["run-dataset", "--csv", str(FIXTURE), "--horizon", "10",
                 "--reps", "1"])
    assert code == 2
    assert "--horizon" in capsys.readouterr().err


def test_cli_run_dataset_group_columns(tmp_path):
    out = tmp_path / "run"
    code = main(["run-dataset", "--csv", str(FIXTURE),
                 "--group-cols", "g_high,g_low", "--design", "mgate",
                 "--reps", "2", "--seed", "11", "--out", str(out)])
    assert code == 0
    header = (out / "curves.csv").read_text().splitlines()[0]
    assert "mean_regret_g_high" in header and "se_regret_g_low" in header


def test_cli_coverage_exit_code_tracks_nominal(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "data": {"kind": "gaussian", "horizon": 50},
        "replications": 12,
        "alpha": 0.1,
        "evaluate_regret": False,
    }))
    assert main(["coverage", "--config", str(cfg_path)]) == 0


def test_cli_coverage_fails_on_degenerate_point_intervals(tmp_path):
    csv = tmp_path / "one-arm.csv"
    csv.write_text("y1,y0\n" + "1.0,0.0\n" * 5)
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({
        "data": {"kind": "csv", "path": str(csv)},
        "design": {"kind": "fixed", "p": 0.5},
        "replications": 20,
        "evaluate_regret": False,
    }))
    assert main(["coverage", "--config", str(cfg_path)]) == 1


def test_cli_error_paths(tmp_path, capsys):
    assert main(["run-dataset", "--reps", "1"]) == 2
    assert "needs --csv" in capsys.readouterr().err
    assert main(["simulate", "--config", str(tmp_path / "missing.json")]) == 2


def test_cli_report_renders_figures(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--horizon", "40", "--reps", "3", "--seed", "2",
                 "--out", str(out)]) == 0
    assert main(["report", str(out)]) == 0
    assert (out / "propensity.png").exists()
    assert (out / "regret.png").exists()


def test_mgate_config_requires_membership_source():
    with pytest.raises(ConfigurationError):
        ExperimentConfig(data=GaussianSpec(horizon=10),
                         design=DesignConfig(kind="mgate"), replications=1)
    cfg = ExperimentConfig(data=GaussianSpec(horizon=10),
                           design=DesignConfig(kind="mgate"),
                           groups=GroupsConfig(score=ScoreGroupSpec()),
                           replications=1)
    report = run_experiment(cfg)
    assert set(report.per_group) == {"all", "g1", "g2"}
