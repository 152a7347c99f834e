use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use crate::agents::{Agent, BaseAgent, CheckpointAgent, RuleBased, Scripted, ScriptedKind};
use crate::env::{observation_len, MapSpec};
use crate::net::load_checkpoint;

use super::ExperimentError;

/// Agent names accepted in configs and on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentSpec {
    RuleBased,
    Passive,
    Random,
    UniformLogits,
    /// Greedy policy head of a saved adapter network.
    Checkpoint(PathBuf),
}

impl AgentSpec {
    pub fn parse(s: &str) -> Result<AgentSpec, ExperimentError> {
        let s = s.trim();
        Ok(match s {
            "rule_based" => AgentSpec::RuleBased,
            "passive" => AgentSpec::Passive,
            "random" => AgentSpec::Random,
            "uniform_logits" => AgentSpec::UniformLogits,
            _ => match s.strip_prefix("checkpoint:") {
                Some(path) if !path.is_empty() => AgentSpec::Checkpoint(PathBuf::from(path)),
                _ => return Err(ExperimentError::Usage(format!("unknown agent `{s}`"))),
            },
        })
    }

    /// Builds the agent for acting in `map`.
    pub fn build(&self, map: &MapSpec) -> Result<Arc<dyn Agent>, ExperimentError> {
        Ok(match self {
            AgentSpec::RuleBased => Arc::new(RuleBased),
            AgentSpec::Passive => Arc::new(Scripted(ScriptedKind::Passive)),
            AgentSpec::Random => Arc::new(Scripted(ScriptedKind::Random)),
            AgentSpec::UniformLogits => Arc::new(Scripted(ScriptedKind::UniformLogits)),
            AgentSpec::Checkpoint(path) => {
                let ckpt = load_checkpoint(path)?;
                Arc::new(CheckpointAgent::new(
                    Arc::new(ckpt.params),
                    observation_len(map.width, map.height),
                )?)
            }
        })
    }

    /// The base-agent view used by the mixer.
    pub fn build_base(&self, map: &MapSpec) -> Result<BaseAgent, ExperimentError> {
        match self {
            AgentSpec::UniformLogits => Ok(BaseAgent::UniformLogits),
            other => Ok(BaseAgent::Deterministic(other.build(map)?)),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentSpec::RuleBased => f.write_str("rule_based"),
            AgentSpec::Passive => f.write_str("passive"),
            AgentSpec::Random => f.write_str("random"),
            AgentSpec::UniformLogits => f.write_str("uniform_logits"),
            AgentSpec::Checkpoint(p) => write!(f, "checkpoint:{}", p.display()),
        }
    }
}
