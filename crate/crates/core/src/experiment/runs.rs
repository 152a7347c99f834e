use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{Agent, BaseAgent};
use crate::env::{
    observation_len, play_game, render_ascii, MapSpec, Player, Terminal, ACTION_COUNT,
};
use crate::mixer::MixerConfig;
use crate::net::{load_checkpoint, NetConfig};
use crate::ppo::{derive_seed, train, AdaptedPolicy, IterationMetrics, TrainSpec};

use super::config::ExperimentConfig;
use super::maps::resolve_map;
use super::ExperimentError;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "iteration,steps,winrate_mean,winrate_min,winrate_max";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_HEADER: &str = "map,tau,seed,winrate";
pub const SWEEP_MEAN_FILE: &str = "sweep_mean.csv";
pub const SWEEP_MEAN_HEADER: &str = "map,tau,mean_winrate";

pub fn net_config(cfg: &ExperimentConfig, map: &MapSpec) -> NetConfig {
    NetConfig {
        input_dim: observation_len(map.width, map.height),
        hidden_sizes: cfg.hidden_sizes.clone(),
        activation: cfg.activation,
        action_count: ACTION_COUNT,
        shared_trunk: cfg.shared_trunk,
    }
}

/// Training spec for one (map, τ, seed) run.
pub fn train_spec(
    cfg: &ExperimentConfig,
    map: Arc<MapSpec>,
    temperature: f64,
    seed: u64,
) -> Result<TrainSpec, ExperimentError> {
    Ok(TrainSpec {
        base: cfg.base.build_base(&map)?,
        opponent: cfg.opponent.build(&map)?,
        net: net_config(cfg, &map),
        mixer: MixerConfig::new(temperature, ACTION_COUNT)?,
        ppo: cfg.ppo.clone(),
        seed,
        record_wall_clock: cfg.wall_clock,
        map,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub dir: PathBuf,
    pub metrics: Vec<IterationMetrics>,
    pub final_checkpoint: PathBuf,
}

/// One training run per seed into `out_dir/seed<N>`, plus `summary.csv`.
pub fn run_train(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Vec<SeedRun>, ExperimentError> {
    run_train_at(cfg, cfg.temperature, out_dir, &resolve_map(&cfg.map)?)
}

fn run_train_at(
    cfg: &ExperimentConfig,
    temperature: f64,
    out_dir: &Path,
    map: &Arc<MapSpec>,
) -> Result<Vec<SeedRun>, ExperimentError> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    let mut runs = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let spec = train_spec(cfg, Arc::clone(map), temperature, seed)?;
        let dir = out_dir.join(format!("seed{seed}"));
        let outcome = train(&spec, &dir)?;
        runs.push(SeedRun {
            seed,
            dir,
            metrics: outcome.metrics,
            final_checkpoint: outcome.final_checkpoint,
        });
    }
    fs::write(out_dir.join(SUMMARY_FILE), summary_csv(&runs))?;
    Ok(runs)
}

/// Per-iteration winrate mean/min/max across seeds.
pub fn summary_csv(runs: &[SeedRun]) -> String {
    let mut s = format!("{SUMMARY_HEADER}\n");
    let len = runs.iter().map(|r| r.metrics.len()).min().unwrap_or(0);
    for i in 0..len {
        let w: Vec<f64> = runs.iter().map(|r| r.metrics[i].winrate).collect();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        let max = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let m = &runs[0].metrics[i];
        let _ = writeln!(s, "{},{},{mean},{min},{max}", m.iteration, m.steps);
    }
    s
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub games: usize,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
}

impl EvalReport {
    /// `(wins + draws/2) / games`.
    pub fn winrate(&self) -> f64 {
        if self.games == 0 {
            return 0.0;
        }
        (self.wins as f64 + 0.5 * self.draws as f64) / self.games as f64
    }
}

/// Plays `games` games of `agent` against `opponent`. The agent takes P0 in
/// even-numbered games and P1 in odd ones; games `2k` and `2k+1` share a
/// seed and the per-seat generators, so an agent playing itself gets exactly
/// mirrored outcomes.
pub fn run_eval(
    agent: &dyn Agent,
    opponent: &dyn Agent,
    map: &Arc<MapSpec>,
    games: usize,
    seed: u64,
) -> Result<EvalReport, ExperimentError> {
    if games == 0 {
        return Err(ExperimentError::Usage("need at least one game".into()));
    }
    let mut report = EvalReport {
        games,
        ..EvalReport::default()
    };
    for g in 0..games {
        let pair_seed = derive_seed(seed, (g / 2) as u64);
        let agent_side = if g % 2 == 0 { Player::P0 } else { Player::P1 };
        let agents: [&dyn Agent; 2] = match agent_side {
            Player::P0 => [agent, opponent],
            Player::P1 => [opponent, agent],
        };
        let mut r0 = ChaCha8Rng::seed_from_u64(derive_seed(pair_seed, 0));
        let mut r1 = ChaCha8Rng::seed_from_u64(derive_seed(pair_seed, 1));
        let end = play_game(
            Arc::clone(map),
            pair_seed,
            agents,
            [&mut r0, &mut r1],
            |_| {},
        )?;
        match end.terminal() {
            Terminal::Winner(p) if p == agent_side => report.wins += 1,
            Terminal::Winner(_) => report.losses += 1,
            _ => report.draws += 1,
        }
    }
    Ok(report)
}

/// The trained adapter in `checkpoint` over the config's base agent.
pub fn adapter_from_checkpoint(
    cfg: &ExperimentConfig,
    map: &MapSpec,
    checkpoint: &Path,
    temperature: f64,
    greedy: bool,
) -> Result<AdaptedPolicy, ExperimentError> {
    let ckpt = load_checkpoint(checkpoint)?;
    let expected = observation_len(map.width, map.height);
    if ckpt.params.config().input_dim != expected {
        return Err(ExperimentError::Usage(format!(
            "checkpoint {} expects {} inputs but map {} gives {expected}",
            checkpoint.display(),
            ckpt.params.config().input_dim,
            map.name
        )));
    }
    let base: BaseAgent = cfg.base.build_base(map)?;
    Ok(AdaptedPolicy {
        base,
        params: Arc::new(ckpt.params),
        mixer: MixerConfig::new(temperature, ACTION_COUNT)?,
        greedy,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub map: String,
    pub tau: f64,
    pub seed: u64,
    pub winrate: f64,
}

/// Trains and evaluates every (map, τ, seed) combination. Writes
/// `sweep.csv` and the per-(map, τ) means in `sweep_mean.csv`.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    taus: &[f64],
    out_dir: &Path,
) -> Result<Vec<SweepRow>, ExperimentError> {
    cfg.validate()?;
    if taus.is_empty() || taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(ExperimentError::Usage(
            "temperature list must be non-empty and positive".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut means = format!("{SWEEP_MEAN_HEADER}\n");
    for map_name in cfg.sweep_map_names() {
        let map = resolve_map(&map_name)?;
        let opponent = cfg.opponent.build(&map)?;
        for &tau in taus {
            let dir = out_dir.join(&map.name).join(format!("tau_{tau}"));
            let runs = run_train_at(cfg, tau, &dir, &map)?;
            let mut sum = 0.0;
            for run in &runs {
                let adapter = adapter_from_checkpoint(
                    cfg,
                    &map,
                    &run.final_checkpoint,
                    tau,
                    cfg.eval_greedy,
                )?;
                let report = run_eval(
                    &adapter,
                    opponent.as_ref(),
                    &map,
                    cfg.eval_games,
                    derive_seed(run.seed, 0xE7A1),
                )?;
                sum += report.winrate();
                rows.push(SweepRow {
                    map: map.name.clone(),
                    tau,
                    seed: run.seed,
                    winrate: report.winrate(),
                });
            }
            let _ = writeln!(means, "{},{tau},{}", map.name, sum / runs.len() as f64);
        }
    }
    let mut csv = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        let _ = writeln!(csv, "{},{},{},{}", r.map, r.tau, r.seed, r.winrate);
    }
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(SWEEP_FILE), csv)?;
    fs::write(out_dir.join(SWEEP_MEAN_FILE), means)?;
    Ok(rows)
}

/// Renders every tick of one seeded game between `p0` and `p1` to `out`.
pub fn play(
    map: &Arc<MapSpec>,
    p0: &dyn Agent,
    p1: &dyn Agent,
    seed: u64,
    out: &mut dyn Write,
) -> Result<Terminal, ExperimentError> {
    writeln!(
        out,
        "{} vs {} on {} (seed {seed})",
        p0.name(),
        p1.name(),
        map.name
    )?;
    let mut r0 = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0));
    let mut r1 = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut io_error = None;
    let end = play_game(Arc::clone(map), seed, [p0, p1], [&mut r0, &mut r1], |s| {
        if io_error.is_none() {
            if let Err(e) = writeln!(out, "{}", render_ascii(s)) {
                io_error = Some(e);
            }
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    let result = match end.terminal() {
        Terminal::Winner(p) => format!("winner {p}"),
        Terminal::Draw => "draw".to_owned(),
        Terminal::Ongoing => "unfinished".to_owned(),
    };
    writeln!(out, "result: {result} after {} ticks", end.tick())?;
    Ok(end.terminal())
}
