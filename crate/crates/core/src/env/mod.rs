//! Deterministic mini-RTS environment.
//!
//! The learner controls one side and is asked for one decision per live unit
//! per tick, in unit-id order. The other side is played by an embedded
//! [`Agent`]. P0 always acts first within a tick; when the learner plays P1
//! the opponent's P0 phase runs before the learner's decisions are requested.

mod action;
mod map;
mod observation;
mod render;
mod state;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use action::{Action, ActionKind, ActionMask, Direction, ACTION_COUNT};
pub use map::{Cell, InitialUnit, MapSpec, Player, Pos, UnitKind, MAX_DIMENSION};
pub use observation::{encode_observation, observation_len, PLANES};
pub use render::render_ascii;
pub use state::{ActionEvent, GameState, Terminal, Unit, UnitId};

use crate::agents::Agent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("map parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid map: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("action index {0} out of range")]
    ActionOutOfRange(usize),
    #[error("illegal action {action} for unit {unit}")]
    IllegalAction { unit: UnitId, action: Action },
    #[error("opponent proposed illegal action {action} for unit {unit}")]
    IllegalOpponentAction { unit: UnitId, action: Action },
    #[error("unit {0} is not alive")]
    DeadUnit(UnitId),
    #[error("unit {unit} is not owned by {player}")]
    ForeignUnit { unit: UnitId, player: Player },
    #[error("step called on a finished game")]
    GameOver,
    #[error("contract violation: {0}")]
    Contract(String),
}

/// Dense shaping rewards; off unless enabled.
pub const SHAPING_HARVEST: f64 = 0.02;
pub const SHAPING_PRODUCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    /// Reward from the learner's perspective.
    pub reward: f64,
    pub done: bool,
    pub terminal: Terminal,
}

impl StepResult {
    /// Whether the learner won, when the episode has ended.
    pub fn learner_won(&self, learner: Player) -> bool {
        self.terminal == Terminal::Winner(learner)
    }
}

#[derive(Clone)]
pub struct Env {
    state: GameState,
    opponent: Arc<dyn Agent>,
    rng: ChaCha8Rng,
    shaping: bool,
}

impl Env {
    /// Starts an episode on `map` with `learner` as the externally driven side.
    pub fn reset(
        map: Arc<MapSpec>,
        seed: u64,
        opponent: Arc<dyn Agent>,
        learner: Player,
    ) -> Result<Env, EnvError> {
        let state = GameState::new(map, seed, learner)?;
        let mut env = Env {
            state,
            opponent,
            rng: ChaCha8Rng::seed_from_u64(seed),
            shaping: false,
        };
        env.begin_tick()?;
        Ok(env)
    }

    pub fn with_shaping(mut self, shaping: bool) -> Self {
        self.shaping = shaping;
        self
    }

    /// Restarts on the same map and opponent.
    pub fn restart(&mut self, seed: u64, learner: Player) -> Result<(), EnvError> {
        self.state = GameState::new(Arc::clone(self.state.map_arc()), seed, learner)?;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.begin_tick()
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn learner(&self) -> Player {
        self.state.learner()
    }

    pub fn active_unit(&self) -> Option<&Unit> {
        self.state.active_unit()
    }

    /// Mask for the active learner unit.
    pub fn legal_actions(&self) -> Result<ActionMask, EnvError> {
        let unit = self.active_unit().ok_or(EnvError::GameOver)?;
        self.state.legal_actions(self.learner(), unit.id)
    }

    pub fn observation(&self, out: &mut Vec<f64>) {
        let active = self.active_unit().map(|u| u.id);
        encode_observation(&self.state, self.learner(), active, out);
    }

    /// Applies `action` for the active unit and advances until the learner
    /// owes another decision or the episode ends.
    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if !self.state.is_ongoing() {
            return Err(EnvError::GameOver);
        }
        let id = self
            .active_unit()
            .map(|u| u.id)
            .ok_or_else(|| EnvError::Contract("no active unit".into()))?;
        let event = self.state.apply(id, action)?;
        let mut reward = 0.0;
        if self.shaping {
            if event.harvested || event.returned {
                reward += SHAPING_HARVEST;
            }
            if event.produced {
                reward += SHAPING_PRODUCE;
            }
        }
        self.state.active_cursor += 1;
        if self.state.active_cursor >= self.state.queue.len() {
            if self.learner() == Player::P0 {
                self.opponent_phase()?;
            }
            self.state.resolve_tick();
            if self.state.is_ongoing() {
                self.begin_tick()?;
            }
        }
        let terminal = self.state.terminal();
        reward += match terminal {
            Terminal::Winner(p) if p == self.learner() => 1.0,
            Terminal::Winner(_) => -1.0,
            _ => 0.0,
        };
        Ok(StepResult {
            reward,
            done: terminal.is_over(),
            terminal,
        })
    }

    fn begin_tick(&mut self) -> Result<(), EnvError> {
        if self.learner() == Player::P1 {
            self.opponent_phase()?;
        }
        let learner = self.learner();
        self.state.queue = self.state.unit_ids(learner);
        self.state.active_cursor = 0;
        Ok(())
    }

    fn opponent_phase(&mut self) -> Result<(), EnvError> {
        let side = self.learner().opponent();
        for id in self.state.unit_ids(side) {
            let unit = match self.state.unit(id) {
                Some(u) => u.clone(),
                None => continue,
            };
            let action = self.opponent.act(&self.state, &unit, &mut self.rng);
            self.state.apply(id, action).map_err(|e| match e {
                EnvError::IllegalAction { unit, action } => {
                    EnvError::IllegalOpponentAction { unit, action }
                }
                other => other,
            })?;
        }
        Ok(())
    }
}

/// Plays one game between two agents with no external learner.
/// `agents[0]` controls P0. Returns the final state.
pub fn play_game(
    map: Arc<MapSpec>,
    seed: u64,
    agents: [&dyn Agent; 2],
    rngs: [&mut dyn rand::RngCore; 2],
    mut on_tick: impl FnMut(&GameState),
) -> Result<GameState, EnvError> {
    let mut state = GameState::new(map, seed, Player::P0)?;
    on_tick(&state);
    while state.is_ongoing() {
        for side in [Player::P0, Player::P1] {
            for id in state.unit_ids(side) {
                let Some(unit) = state.unit(id).cloned() else {
                    continue;
                };
                let action = agents[side.index()].act(&state, &unit, &mut *rngs[side.index()]);
                state.apply(id, action)?;
            }
        }
        state.resolve_tick();
        on_tick(&state);
    }
    Ok(state)
}
