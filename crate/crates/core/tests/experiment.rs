use std::fs;

use arl_core::agents::{RuleBased, Scripted, ScriptedKind};
use arl_core::experiment::{
    adapter_from_checkpoint, play, resolve_map, run_eval, run_sweep, run_train, AgentSpec,
    ExperimentConfig, SUMMARY_FILE, SUMMARY_HEADER, SWEEP_FILE, SWEEP_HEADER, SWEEP_MEAN_FILE,
    SWEEP_MEAN_HEADER,
};
use arl_core::ppo::{FINAL_CHECKPOINT, METRICS_FILE, METRICS_HEADER};

fn quick() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(
        "experiment.map = basesWorkers8x8A\n\
         experiment.seeds = 4, 5\n\
         net.hidden = 16\n\
         ppo.iterations = 2\n\
         ppo.samples = 64\n\
         ppo.minibatch = 32\n\
         ppo.num_envs = 2\n\
         eval.games = 4\n",
    )
    .unwrap();
    cfg.ppo.checkpoint_every = 1;
    cfg
}

#[test]
fn train_writes_per_seed_artifacts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let runs = run_train(&quick(), dir.path()).unwrap();
    assert_eq!(runs.len(), 2);
    for (run, seed) in runs.iter().zip([4, 5]) {
        assert_eq!(run.seed, seed);
        let seed_dir = dir.path().join(format!("seed{seed}"));
        let csv = fs::read_to_string(seed_dir.join(METRICS_FILE)).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(METRICS_HEADER));
        assert_eq!(lines.count(), 2);
        assert!(seed_dir.join(FINAL_CHECKPOINT).exists());
        assert!(seed_dir.join("iter_0002.ckpt").exists());
    }
    let summary = fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], SUMMARY_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,64,"));
}

#[test]
fn trained_adapter_loads_and_plays() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick();
    let runs = run_train(&cfg, dir.path()).unwrap();
    let map = resolve_map(&cfg.map).unwrap();
    let adapter =
        adapter_from_checkpoint(&cfg, &map, &runs[0].final_checkpoint, 0.1, false).unwrap();
    let report = run_eval(&adapter, &RuleBased, &map, 4, 0).unwrap();
    assert_eq!(report.wins + report.draws + report.losses, 4);

    let other = resolve_map("basesWorkers12x12").unwrap();
    assert!(adapter_from_checkpoint(&cfg, &other, &runs[0].final_checkpoint, 0.1, false).is_err());
}

#[test]
fn sweep_writes_one_row_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick();
    cfg.seeds = vec![1];
    cfg.ppo.iterations = 1;
    let taus = [0.01, 1.0];
    let rows = run_sweep(&cfg, &taus, dir.path()).unwrap();
    assert_eq!(rows.len(), 2);
    let csv = fs::read_to_string(dir.path().join(SWEEP_FILE)).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("basesWorkers8x8A,0.01,1,"));
    let means = fs::read_to_string(dir.path().join(SWEEP_MEAN_FILE)).unwrap();
    assert_eq!(means.lines().next(), Some(SWEEP_MEAN_HEADER));
    assert_eq!(means.lines().count(), 3);
    assert!(dir
        .path()
        .join("basesWorkers8x8A/tau_1/seed1/metrics.csv")
        .exists());
    assert!(run_sweep(&cfg, &[], dir.path()).is_err());
}

#[test]
fn self_evaluation_is_exactly_even() {
    for name in ["basesWorkers8x8A", "TwoBasesBarracks", "basesWorkers12x12"] {
        let map = resolve_map(name).unwrap();
        let r = run_eval(&RuleBased, &RuleBased, &map, 10, 3).unwrap();
        assert_eq!(r.winrate(), 0.5, "{name}");
        let random = Scripted(ScriptedKind::Random);
        let r = run_eval(&random, &random, &map, 10, 3).unwrap();
        assert_eq!(r.wins, r.losses, "{name}");
    }
}

#[test]
fn passive_agent_loses_to_rule_based() {
    let map = resolve_map("basesWorkers8x8A").unwrap();
    let r = run_eval(&Scripted(ScriptedKind::Passive), &RuleBased, &map, 20, 0).unwrap();
    assert!(r.winrate() <= 0.05, "{r:?}");
}

#[test]
fn play_renders_frames_and_result() {
    let map = resolve_map("noresources").unwrap();
    let mut out = Vec::new();
    play(
        &map,
        &RuleBased,
        &Scripted(ScriptedKind::Passive),
        0,
        &mut out,
    )
    .unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("rule_based vs passive on noresources"));
    assert!(text
        .trim_end()
        .lines()
        .last()
        .unwrap()
        .starts_with("result: winner P0"));
}

#[test]
fn config_files_round_trip() {
    let mut cfg = quick();
    cfg.base = AgentSpec::UniformLogits;
    cfg.sweep_taus = vec![0.5, 2.0];
    let back = ExperimentConfig::parse(&cfg.to_text()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn missing_references_fail_validation() {
    let mut cfg = quick();
    cfg.seeds.clear();
    assert!(cfg.validate().is_err());
    let mut cfg = quick();
    cfg.map = "no/such/file.map".into();
    assert!(cfg.validate().is_err());
    let mut cfg = quick();
    cfg.base = AgentSpec::Checkpoint("no/such.ckpt".into());
    assert!(cfg.validate().is_err());
}
