//! Adapter policies over frozen base agents in a small deterministic RTS.

pub mod agents;
pub mod env;
pub mod experiment;
pub mod mixer;
pub mod net;
pub mod ppo;
