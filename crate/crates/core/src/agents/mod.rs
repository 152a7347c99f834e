//! Frozen base agents behind one interface.

mod pathfind;
mod rule_based;

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::env::{encode_observation, Action, ActionMask, GameState, Unit, ACTION_COUNT};
use crate::net::{NetError, PolicyParameters, Workspace};

pub use pathfind::{bfs_first_step, PathfindResult};
pub use rule_based::{rule_based_act, WORKER_CAP};

/// Maps `(state, unit)` to a legal action for that unit.
///
/// Implementations must be pure functions of their inputs and the supplied
/// generator; deterministic agents ignore `rng`.
pub trait Agent: Send + Sync {
    fn name(&self) -> String;
    fn act(&self, state: &GameState, unit: &Unit, rng: &mut dyn RngCore) -> Action;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RuleBased;

impl Agent for RuleBased {
    fn name(&self) -> String {
        "rule_based".into()
    }

    fn act(&self, state: &GameState, unit: &Unit, _rng: &mut dyn RngCore) -> Action {
        rule_based_act(state, unit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScriptedKind {
    Random,
    Passive,
    /// Distribution-level agent with all-zero logits; only meaningful
    /// through the mixer, so `act` degrades to noop.
    UniformLogits,
}

pub fn scripted_act(
    kind: ScriptedKind,
    state: &GameState,
    unit: &Unit,
    rng: &mut dyn RngCore,
) -> Action {
    match kind {
        ScriptedKind::Passive | ScriptedKind::UniformLogits => Action::Noop,
        ScriptedKind::Random => {
            let mask = state.mask_for(unit);
            let legal: Vec<usize> = mask.legal_indices().collect();
            let pick = legal[rng.random_range(0..legal.len())];
            Action::from_index(pick).expect("mask index in range")
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Scripted(pub ScriptedKind);

impl Agent for Scripted {
    fn name(&self) -> String {
        match self.0 {
            ScriptedKind::Random => "random",
            ScriptedKind::Passive => "passive",
            ScriptedKind::UniformLogits => "uniform_logits",
        }
        .into()
    }

    fn act(&self, state: &GameState, unit: &Unit, rng: &mut dyn RngCore) -> Action {
        scripted_act(self.0, state, unit, rng)
    }
}

/// Neural base agent: greedy over the masked policy-head logits of a trained
/// adapter network, lowest index on ties.
#[derive(Clone, Debug)]
pub struct CheckpointAgent {
    params: Arc<PolicyParameters>,
}

impl CheckpointAgent {
    pub fn new(params: Arc<PolicyParameters>, obs_len: usize) -> Result<Self, NetError> {
        let cfg = params.config();
        if cfg.input_dim != obs_len {
            return Err(NetError::InputDim {
                expected: obs_len,
                got: cfg.input_dim,
            });
        }
        if cfg.action_count != ACTION_COUNT {
            return Err(NetError::Shape(format!(
                "policy head has {} outputs, environment has {ACTION_COUNT} actions",
                cfg.action_count
            )));
        }
        Ok(CheckpointAgent { params })
    }

    pub fn params(&self) -> &PolicyParameters {
        &self.params
    }
}

pub fn checkpoint_agent_act(params: &PolicyParameters, state: &GameState, unit: &Unit) -> Action {
    let mut obs = Vec::new();
    encode_observation(state, unit.player, Some(unit.id), &mut obs);
    let mut ws = Workspace::default();
    let mask = state.mask_for(unit);
    if params.forward_ws(&obs, &mut ws).is_err() {
        return Action::Noop;
    }
    let idx = masked_argmax(ws.logits(params), mask);
    Action::from_index(idx).expect("mask index in range")
}

/// Highest-scoring legal index; lowest index wins ties.
pub fn masked_argmax(scores: &[f64], mask: ActionMask) -> usize {
    let mut best = None::<(usize, f64)>;
    for i in mask.legal_indices() {
        match best {
            Some((_, s)) if scores[i] <= s => {}
            _ => best = Some((i, scores[i])),
        }
    }
    best.map_or(0, |(i, _)| i)
}

impl Agent for CheckpointAgent {
    fn name(&self) -> String {
        "checkpoint".into()
    }

    fn act(&self, state: &GameState, unit: &Unit, _rng: &mut dyn RngCore) -> Action {
        checkpoint_agent_act(&self.params, state, unit)
    }
}

/// What the mixer sees of a base agent: either a deterministic action to be
/// one-hot encoded, or flat zero logits.
#[derive(Clone)]
pub enum BaseAgent {
    Deterministic(Arc<dyn Agent>),
    UniformLogits,
}

impl BaseAgent {
    pub fn name(&self) -> String {
        match self {
            BaseAgent::Deterministic(a) => a.name(),
            BaseAgent::UniformLogits => "uniform_logits".into(),
        }
    }

    /// The base agent's proposed action index, if it proposes one.
    pub fn propose(&self, state: &GameState, unit: &Unit, rng: &mut dyn RngCore) -> Option<usize> {
        match self {
            BaseAgent::Deterministic(a) => Some(a.act(state, unit, rng).index()),
            BaseAgent::UniformLogits => None,
        }
    }
}

#[cfg(test)]
mod tests;
