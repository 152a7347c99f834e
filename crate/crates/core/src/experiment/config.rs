//! `section.key = value` experiment files.

use std::collections::BTreeSet;
use std::fmt::Write;
use std::str::FromStr;

use crate::net::Activation;
use crate::ppo::PpoConfig;

use super::agent_spec::AgentSpec;
use super::ExperimentError;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Builtin map name or path to a map file.
    pub map: String,
    pub base: AgentSpec,
    pub opponent: AgentSpec,
    pub seeds: Vec<u64>,
    pub temperature: f64,
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub shared_trunk: bool,
    pub ppo: PpoConfig,
    pub eval_games: usize,
    pub eval_greedy: bool,
    pub sweep_taus: Vec<f64>,
    /// Maps for `sweep`; empty means just `map`.
    pub sweep_maps: Vec<String>,
    /// Fill the `seconds` metrics column with elapsed time. Makes metrics
    /// files differ between otherwise identical runs.
    pub wall_clock: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            map: "basesWorkers8x8A".into(),
            base: AgentSpec::RuleBased,
            opponent: AgentSpec::RuleBased,
            seeds: vec![0, 1, 2],
            temperature: 0.1,
            hidden_sizes: vec![64, 64],
            activation: Activation::Tanh,
            shared_trunk: false,
            ppo: PpoConfig::default(),
            eval_games: 100,
            eval_greedy: false,
            sweep_taus: vec![0.001, 0.01, 0.1, 1.0, 10.0],
            sweep_maps: Vec::new(),
            wall_clock: false,
        }
    }
}

fn list<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| format!("bad list item `{}`", s.trim()))
        })
        .collect()
}

fn parse_one<T: FromStr>(value: &str) -> Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("cannot parse `{value}`"))
}

impl ExperimentConfig {
    /// Parses a config file. Keys not present keep their defaults; unknown or
    /// repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self, ExperimentError> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| ExperimentError::Config {
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `section.key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            if !key.contains('.') {
                return Err(err(format!("key `{key}` has no section")));
            }
            if !seen.insert(key.to_owned()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let p = &mut self.ppo;
        match key {
            "experiment.map" => self.map = v.to_owned(),
            "experiment.base" => self.base = AgentSpec::parse(v).map_err(|e| e.to_string())?,
            "experiment.opponent" => {
                self.opponent = AgentSpec::parse(v).map_err(|e| e.to_string())?
            }
            "experiment.seeds" => self.seeds = parse_list(v)?,
            "experiment.wall_clock" => self.wall_clock = parse_one(v)?,
            "mixer.temperature" => self.temperature = parse_one(v)?,
            "net.hidden" => self.hidden_sizes = parse_list(v)?,
            "net.activation" => {
                self.activation =
                    Activation::parse(v).ok_or_else(|| format!("unknown activation `{v}`"))?
            }
            "net.shared_trunk" => self.shared_trunk = parse_one(v)?,
            "ppo.gamma" => p.gamma = parse_one(v)?,
            "ppo.lambda" => p.lambda = parse_one(v)?,
            "ppo.clip_eps" => p.clip_eps = parse_one(v)?,
            "ppo.value_coef" => p.value_coef = parse_one(v)?,
            "ppo.entropy_coef" => p.entropy_coef = parse_one(v)?,
            "ppo.learning_rate" => p.learning_rate = parse_one(v)?,
            "ppo.iterations" => p.iterations = parse_one(v)?,
            "ppo.samples" => p.samples_per_iteration = parse_one(v)?,
            "ppo.epochs" => p.epochs = parse_one(v)?,
            "ppo.minibatch" => p.minibatch_size = parse_one(v)?,
            "ppo.normalize_advantages" => p.normalize_advantages = parse_one(v)?,
            "ppo.num_envs" => p.num_envs = parse_one(v)?,
            "ppo.shaping" => p.shaping = parse_one(v)?,
            "ppo.alternate_sides" => p.alternate_sides = parse_one(v)?,
            "ppo.checkpoint_every" => p.checkpoint_every = parse_one(v)?,
            "eval.games" => self.eval_games = parse_one(v)?,
            "eval.greedy" => self.eval_greedy = parse_one(v)?,
            "sweep.taus" => self.sweep_taus = parse_list(v)?,
            "sweep.maps" => self.sweep_maps = parse_list(v)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Every key, in a fixed order.
    pub fn to_text(&self) -> String {
        let p = &self.ppo;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("experiment.map", self.map.clone());
        kv("experiment.base", self.base.to_string());
        kv("experiment.opponent", self.opponent.to_string());
        kv("experiment.seeds", list(&self.seeds));
        kv("experiment.wall_clock", self.wall_clock.to_string());
        kv("mixer.temperature", self.temperature.to_string());
        kv("net.hidden", list(&self.hidden_sizes));
        kv("net.activation", self.activation.to_string());
        kv("net.shared_trunk", self.shared_trunk.to_string());
        kv("ppo.gamma", p.gamma.to_string());
        kv("ppo.lambda", p.lambda.to_string());
        kv("ppo.clip_eps", p.clip_eps.to_string());
        kv("ppo.value_coef", p.value_coef.to_string());
        kv("ppo.entropy_coef", p.entropy_coef.to_string());
        kv("ppo.learning_rate", p.learning_rate.to_string());
        kv("ppo.iterations", p.iterations.to_string());
        kv("ppo.samples", p.samples_per_iteration.to_string());
        kv("ppo.epochs", p.epochs.to_string());
        kv("ppo.minibatch", p.minibatch_size.to_string());
        kv(
            "ppo.normalize_advantages",
            p.normalize_advantages.to_string(),
        );
        kv("ppo.num_envs", p.num_envs.to_string());
        kv("ppo.shaping", p.shaping.to_string());
        kv("ppo.alternate_sides", p.alternate_sides.to_string());
        kv("ppo.checkpoint_every", p.checkpoint_every.to_string());
        kv("eval.games", self.eval_games.to_string());
        kv("eval.greedy", self.eval_greedy.to_string());
        kv("sweep.taus", list(&self.sweep_taus));
        kv("sweep.maps", list(&self.sweep_maps));
        s
    }

    /// Checks everything that can be checked before any compute, including
    /// that referenced map and checkpoint files exist.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Usage(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return bad(format!(
                "temperature must be positive, got {}",
                self.temperature
            ));
        }
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return bad("net.hidden needs at least one positive layer size".into());
        }
        if self.eval_games == 0 {
            return bad("eval.games must be at least 1".into());
        }
        if self.sweep_taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return bad("sweep temperatures must be positive".into());
        }
        self.ppo.validate()?;
        super::maps::resolve_map(&self.map)?;
        for m in &self.sweep_maps {
            super::maps::resolve_map(m)?;
        }
        for spec in [&self.base, &self.opponent] {
            if let AgentSpec::Checkpoint(path) = spec {
                if !path.is_file() {
                    return bad(format!("checkpoint {} does not exist", path.display()));
                }
            }
        }
        Ok(())
    }

    pub fn sweep_map_names(&self) -> Vec<String> {
        if self.sweep_maps.is_empty() {
            vec![self.map.clone()]
        } else {
            self.sweep_maps.clone()
        }
    }
}
