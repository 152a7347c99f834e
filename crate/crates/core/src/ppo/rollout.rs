//! Rollout collection through the mixed policy.

use std::sync::Arc;

use rand::RngCore;

use crate::agents::{Agent, BaseAgent};
use crate::env::{observation_len, Action, ActionMask, Env, MapSpec, Player, Terminal};
use crate::mixer::{
    combine_to_probabilities, onehot_temperature_logits, sample_categorical, MixerConfig,
};
use crate::net::PolicyParameters;

use super::gae::compute_gae;
use super::{derive_seed, PpoError};

/// `T` transitions gathered under one parameter snapshot.
///
/// Laid out env-major: each parallel environment contributes one contiguous
/// segment of `T / num_envs` steps.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBatch {
    pub obs_dim: usize,
    pub temperature: f64,
    pub observations: Vec<f64>,
    pub actions: Vec<usize>,
    /// Base proposal per step; `None` for a flat-logit base.
    pub base_actions: Vec<Option<usize>>,
    pub masks: Vec<ActionMask>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn observation(&self, t: usize) -> &[f64] {
        &self.observations[t * self.obs_dim..(t + 1) * self.obs_dim]
    }
}

/// Results of episodes that finished during a collection.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EpisodeStats {
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub returns: Vec<f64>,
}

impl EpisodeStats {
    pub fn episodes(&self) -> usize {
        self.wins + self.draws + self.losses
    }

    /// `(wins + draws/2) / episodes`, `None` when nothing finished.
    pub fn winrate(&self) -> Option<f64> {
        let n = self.episodes();
        (n > 0).then(|| (self.wins as f64 + 0.5 * self.draws as f64) / n as f64)
    }

    pub fn mean_return(&self) -> Option<f64> {
        (!self.returns.is_empty())
            .then(|| self.returns.iter().sum::<f64>() / self.returns.len() as f64)
    }
}

/// Parallel environments that persist across iterations and auto-reset.
pub struct RolloutEnvs {
    envs: Vec<Env>,
    episode_index: Vec<u64>,
    episode_return: Vec<f64>,
    seed: u64,
    alternate_sides: bool,
}

impl RolloutEnvs {
    pub fn new(
        map: Arc<MapSpec>,
        opponent: Arc<dyn Agent>,
        count: usize,
        seed: u64,
        shaping: bool,
        alternate_sides: bool,
    ) -> Result<Self, PpoError> {
        if count == 0 {
            return Err(PpoError::Config("need at least one environment".into()));
        }
        let mut envs = Vec::with_capacity(count);
        for e in 0..count {
            let side = Self::side(alternate_sides, e, 0);
            let env = Env::reset(
                Arc::clone(&map),
                Self::episode_seed(seed, e, 0),
                Arc::clone(&opponent),
                side,
            )?
            .with_shaping(shaping);
            envs.push(env);
        }
        Ok(RolloutEnvs {
            envs,
            episode_index: vec![0; count],
            episode_return: vec![0.0; count],
            seed,
            alternate_sides,
        })
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn envs(&self) -> &[Env] {
        &self.envs
    }

    fn side(alternate: bool, env: usize, episode: u64) -> Player {
        if alternate && (env as u64 + episode) % 2 == 1 {
            Player::P1
        } else {
            Player::P0
        }
    }

    fn episode_seed(seed: u64, env: usize, episode: u64) -> u64 {
        derive_seed(derive_seed(seed, env as u64), episode)
    }

    fn finish_episode(&mut self, e: usize) -> Result<(), PpoError> {
        self.episode_index[e] += 1;
        self.episode_return[e] = 0.0;
        let k = self.episode_index[e];
        let side = Self::side(self.alternate_sides, e, k);
        self.envs[e].restart(Self::episode_seed(self.seed, e, k), side)?;
        Ok(())
    }
}

/// Collects exactly `steps` transitions, split evenly over the environments,
/// acting with the mixture of `base` and `params` at `mixer.temperature`.
/// Advantages and returns are filled in with GAE.
#[allow(clippy::too_many_arguments)]
pub fn collect_rollout(
    envs: &mut RolloutEnvs,
    base: &BaseAgent,
    params: &PolicyParameters,
    mixer: MixerConfig,
    steps: usize,
    gamma: f64,
    lambda: f64,
    rng: &mut dyn RngCore,
) -> Result<(RolloutBatch, EpisodeStats), PpoError> {
    let n_envs = envs.len();
    if steps == 0 || !steps.is_multiple_of(n_envs) {
        return Err(PpoError::Config(format!(
            "{steps} steps cannot be split evenly over {n_envs} environments"
        )));
    }
    let per_env = steps / n_envs;
    let map = envs.envs[0].state().map();
    let obs_dim = observation_len(map.width, map.height);
    if params.config().input_dim != obs_dim {
        return Err(PpoError::Config(format!(
            "network expects {} inputs, observation has {obs_dim}",
            params.config().input_dim
        )));
    }
    let n_actions = mixer.action_count;
    let mut batch = RolloutBatch {
        obs_dim,
        temperature: mixer.temperature,
        observations: Vec::with_capacity(steps * obs_dim),
        ..RolloutBatch::default()
    };
    let mut stats = EpisodeStats::default();
    let mut ws = params.new_workspace();
    let mut obs = Vec::with_capacity(obs_dim);
    let zeros = vec![0.0; n_actions];

    for e in 0..n_envs {
        let start = batch.len();
        for _ in 0..per_env {
            let env = &envs.envs[e];
            env.observation(&mut obs);
            let unit = env
                .active_unit()
                .cloned()
                .ok_or_else(|| PpoError::Config("environment has no active unit".into()))?;
            let mask = env.legal_actions()?;
            let proposal = base.propose(env.state(), &unit, rng);
            params.forward_ws(&obs, &mut ws)?;
            let dist = match proposal {
                Some(a) => {
                    let b = onehot_temperature_logits(a, n_actions, mixer.temperature)?;
                    combine_to_probabilities(&b, ws.logits(params), Some(mask))?
                }
                None => combine_to_probabilities(&zeros, ws.logits(params), Some(mask))?,
            };
            let (action, logp) = sample_categorical(&dist, rng);
            let value = ws.value(params);

            let result = envs.envs[e].step(Action::from_index(action)?)?;
            batch.observations.extend_from_slice(&obs);
            batch.actions.push(action);
            batch.base_actions.push(proposal);
            batch.masks.push(mask);
            batch.rewards.push(result.reward);
            batch.dones.push(result.done);
            batch.log_probs.push(logp);
            batch.values.push(value);
            envs.episode_return[e] += result.reward;

            if result.done {
                let learner = envs.envs[e].learner();
                match result.terminal {
                    Terminal::Winner(p) if p == learner => stats.wins += 1,
                    Terminal::Winner(_) => stats.losses += 1,
                    _ => stats.draws += 1,
                }
                stats.returns.push(envs.episode_return[e]);
                envs.finish_episode(e)?;
            }
        }
        // Bootstrap from the state the segment stopped in unless it just ended.
        let end = batch.len();
        let bootstrap = if batch.dones[end - 1] {
            0.0
        } else {
            envs.envs[e].observation(&mut obs);
            params.forward_ws(&obs, &mut ws)?;
            ws.value(params)
        };
        let (adv, ret) = compute_gae(
            &batch.rewards[start..end],
            &batch.values[start..end],
            &batch.dones[start..end],
            bootstrap,
            gamma,
            lambda,
        )?;
        batch.advantages.extend(adv);
        batch.returns.extend(ret);
    }
    Ok((batch, stats))
}
