//! The outer training loop: rollout, K epochs of minibatch updates, logging.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{Agent, BaseAgent};
use crate::env::MapSpec;
use crate::mixer::MixerConfig;
use crate::net::{
    adam_step, save_checkpoint, AdamConfig, CheckpointMeta, NetConfig, PolicyParameters,
};

use super::loss::{normalize_advantages, ppo_loss_and_gradients, LossStats};
use super::rollout::{collect_rollout, RolloutBatch, RolloutEnvs};
use super::{derive_seed, PpoConfig, PpoError};

pub const METRICS_HEADER: &str =
    "iteration,steps,winrate,mean_reward,policy_loss,value_loss,entropy,clip_frac,mean_ratio,seconds";
pub const METRICS_FILE: &str = "metrics.csv";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";

/// Minibatch statistics averaged over one call to [`train_iteration`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    /// Largest `|ρ - 1|` in the very first minibatch, where θ = θ_old.
    pub first_ratio_deviation: f64,
    pub minibatches: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    /// Cumulative environment steps after this iteration.
    pub steps: usize,
    pub winrate: f64,
    pub mean_reward: f64,
    pub episodes: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_frac: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
    pub seconds: f64,
}

impl IterationMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.steps,
            self.winrate,
            self.mean_reward,
            self.policy_loss,
            self.value_loss,
            self.entropy,
            self.clip_frac,
            self.mean_ratio,
            self.seconds
        )
    }
}

/// K epochs of shuffled minibatch Adam updates on one batch.
///
/// The batch is treated as read-only; advantage normalization (if enabled)
/// happens on a copy.
pub fn train_iteration(
    params: &mut PolicyParameters,
    batch: &RolloutBatch,
    cfg: &PpoConfig,
    rng: &mut dyn RngCore,
) -> Result<UpdateStats, PpoError> {
    let n = batch.len();
    if n == 0 || batch.advantages.len() != n || batch.returns.len() != n {
        return Err(PpoError::LengthMismatch(format!(
            "batch has {n} actions, {} advantages, {} returns",
            batch.advantages.len(),
            batch.returns.len()
        )));
    }
    if batch.advantages.iter().any(|a| !a.is_finite()) {
        return Err(PpoError::NonFiniteLoss("advantages are not finite".into()));
    }
    let mut advantages = batch.advantages.clone();
    if cfg.normalize_advantages {
        normalize_advantages(&mut advantages);
    }
    let adam = AdamConfig {
        lr: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let coef = cfg.loss_coefficients();
    let mb = cfg.minibatch_size.min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut ws = params.new_workspace();
    let mut out = UpdateStats::default();
    let mut sum = LossStats::default();
    for _ in 0..cfg.epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(mb) {
            let (stats, grads) =
                ppo_loss_and_gradients(params, batch, &advantages, chunk, coef, &mut ws)?;
            if out.minibatches == 0 {
                out.first_ratio_deviation = (stats.max_ratio - 1.0)
                    .abs()
                    .max((stats.min_ratio - 1.0).abs());
            }
            adam_step(params, &grads, adam)?;
            params.check_finite()?;
            out.minibatches += 1;
            sum.policy += stats.policy;
            sum.value += stats.value;
            sum.entropy += stats.entropy;
            sum.clip_frac += stats.clip_frac;
            sum.mean_ratio += stats.mean_ratio;
            out.max_ratio = out.max_ratio.max(stats.max_ratio);
        }
    }
    let k = out.minibatches as f64;
    out.policy_loss = sum.policy / k;
    out.value_loss = sum.value / k;
    out.entropy = sum.entropy / k;
    out.clip_frac = sum.clip_frac / k;
    out.mean_ratio = sum.mean_ratio / k;
    Ok(out)
}

/// Everything one training run needs.
#[derive(Clone)]
pub struct TrainSpec {
    pub map: Arc<MapSpec>,
    pub base: BaseAgent,
    pub opponent: Arc<dyn Agent>,
    pub net: NetConfig,
    pub mixer: MixerConfig,
    pub ppo: PpoConfig,
    pub seed: u64,
    /// Write real elapsed time into the `seconds` column. Off by default so
    /// that metrics files are reproducible byte for byte.
    pub record_wall_clock: bool,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: PolicyParameters,
    pub metrics: Vec<IterationMetrics>,
    pub final_checkpoint: PathBuf,
}

fn checkpoint_meta(spec: &TrainSpec, iteration: usize) -> CheckpointMeta {
    let mut meta = CheckpointMeta {
        iteration: iteration as u64,
        seed: spec.seed,
        map: spec.map.name.clone(),
        ..CheckpointMeta::default()
    };
    meta.extra.insert("base".into(), spec.base.name());
    meta.extra
        .insert("temperature".into(), spec.mixer.temperature.to_string());
    meta
}

/// Runs `spec.ppo.iterations` iterations, writing `metrics.csv`, periodic
/// checkpoints `iter_NNNN.ckpt` and `final.ckpt` into `out_dir`.
pub fn train(spec: &TrainSpec, out_dir: &Path) -> Result<TrainOutcome, PpoError> {
    spec.ppo.validate()?;
    spec.net.validate()?;
    fs::create_dir_all(out_dir)?;
    let cfg = &spec.ppo;
    let mut params = PolicyParameters::init(spec.net.clone(), derive_seed(spec.seed, 1))?;
    let mut envs = RolloutEnvs::new(
        Arc::clone(&spec.map),
        Arc::clone(&spec.opponent),
        cfg.num_envs,
        derive_seed(spec.seed, 2),
        cfg.shaping,
        cfg.alternate_sides,
    )?;
    let mut rollout_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 3));
    let mut update_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 4));

    let mut csv = BufWriter::new(File::create(out_dir.join(METRICS_FILE))?);
    writeln!(csv, "{METRICS_HEADER}")?;
    let start = Instant::now();
    let mut metrics = Vec::with_capacity(cfg.iterations);
    let mut winrate = 0.0;
    let mut mean_reward = 0.0;
    for it in 1..=cfg.iterations {
        let (batch, episodes) = collect_rollout(
            &mut envs,
            &spec.base,
            &params,
            spec.mixer,
            cfg.samples_per_iteration,
            cfg.gamma,
            cfg.lambda,
            &mut rollout_rng,
        )?;
        if let Some(w) = episodes.winrate() {
            winrate = w;
        }
        if let Some(r) = episodes.mean_return() {
            mean_reward = r;
        }
        let update =
            train_iteration(&mut params, &batch, cfg, &mut update_rng).map_err(|e| match e {
                PpoError::NonFiniteLoss(m) => {
                    PpoError::NonFiniteLoss(format!("iteration {it}: {m}"))
                }
                other => other,
            })?;
        let row = IterationMetrics {
            iteration: it,
            steps: it * cfg.samples_per_iteration,
            winrate,
            mean_reward,
            episodes: episodes.episodes(),
            policy_loss: update.policy_loss,
            value_loss: update.value_loss,
            entropy: update.entropy,
            clip_frac: update.clip_frac,
            mean_ratio: update.mean_ratio,
            max_ratio: update.max_ratio,
            seconds: if spec.record_wall_clock {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        writeln!(csv, "{}", row.csv_row())?;
        csv.flush()?;
        metrics.push(row);
        if it % cfg.checkpoint_every == 0 {
            let path = out_dir.join(format!("iter_{it:04}.ckpt"));
            save_checkpoint(&params, &checkpoint_meta(spec, it), &path)?;
        }
    }
    let final_checkpoint = out_dir.join(FINAL_CHECKPOINT);
    save_checkpoint(
        &params,
        &checkpoint_meta(spec, cfg.iterations),
        &final_checkpoint,
    )?;
    Ok(TrainOutcome {
        params,
        metrics,
        final_checkpoint,
    })
}
