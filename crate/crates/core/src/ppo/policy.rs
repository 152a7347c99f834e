use std::sync::Arc;

use rand::RngCore;

use crate::agents::{Agent, BaseAgent};
use crate::env::{encode_observation, Action, GameState, Unit};
use crate::mixer::{
    combine_to_probabilities, onehot_temperature_logits, sample_categorical, MixedDistribution,
    MixerConfig, MixerError,
};
use crate::net::PolicyParameters;

/// A frozen base agent plus a trained adapter, usable as an [`Agent`] for
/// evaluation from either side of the board.
#[derive(Clone)]
pub struct AdaptedPolicy {
    pub base: BaseAgent,
    pub params: Arc<PolicyParameters>,
    pub mixer: MixerConfig,
    /// Take the most probable action instead of sampling.
    pub greedy: bool,
}

impl AdaptedPolicy {
    /// Mixed distribution for `unit`'s decision in `state`.
    pub fn distribution(
        &self,
        state: &GameState,
        unit: &Unit,
        rng: &mut dyn RngCore,
    ) -> Result<MixedDistribution, MixerError> {
        let mut obs = Vec::new();
        encode_observation(state, unit.player, Some(unit.id), &mut obs);
        let n = self.mixer.action_count;
        let (adj, _) = self
            .params
            .forward(&obs)
            .expect("adapter input width checked at construction");
        let base = match self.base.propose(state, unit, rng) {
            Some(a) => onehot_temperature_logits(a, n, self.mixer.temperature)?,
            None => vec![0.0; n],
        };
        combine_to_probabilities(&base, &adj, Some(state.mask_for(unit)))
    }
}

impl Agent for AdaptedPolicy {
    fn name(&self) -> String {
        format!(
            "adapter({}, tau={})",
            self.base.name(),
            self.mixer.temperature
        )
    }

    fn act(&self, state: &GameState, unit: &Unit, rng: &mut dyn RngCore) -> Action {
        let Ok(dist) = self.distribution(state, unit, rng) else {
            return Action::Noop;
        };
        let idx = if self.greedy {
            dist.argmax()
        } else {
            sample_categorical(&dist, rng).0
        };
        Action::from_index(idx).unwrap_or(Action::Noop)
    }
}
