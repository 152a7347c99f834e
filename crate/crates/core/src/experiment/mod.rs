//! Experiment harness behind the `arl` command: config files, agent specs,
//! builtin maps, and the train / eval / sweep / play drivers.

mod agent_spec;
mod config;
mod maps;
mod runs;

use thiserror::Error;

pub use agent_spec::AgentSpec;
pub use config::ExperimentConfig;
pub use maps::{builtin_map, resolve_map, BUILTIN_MAPS};
pub use runs::{
    adapter_from_checkpoint, net_config, play, run_eval, run_sweep, run_train, summary_csv,
    train_spec, EvalReport, SeedRun, SweepRow, SUMMARY_FILE, SUMMARY_HEADER, SWEEP_FILE,
    SWEEP_HEADER, SWEEP_MEAN_FILE, SWEEP_MEAN_HEADER,
};

use crate::env::{EnvError, MapError};
use crate::mixer::MixerError;
use crate::net::NetError;
use crate::ppo::PpoError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Mixer(#[from] MixerError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}
