use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use arl_core::agents::Agent;
use arl_core::experiment::{
    adapter_from_checkpoint, play, resolve_map, run_eval, run_sweep, run_train, AgentSpec,
    ExperimentConfig, SUMMARY_FILE, SWEEP_FILE, SWEEP_MEAN_FILE,
};

#[derive(Parser)]
#[command(
    name = "arl",
    version,
    about = "Adapter policies over frozen RTS agents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment file (`section.key = value` lines); defaults apply otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use only this seed instead of the config's seed list.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one adapter per seed.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Override the mixing temperature.
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Evaluate an agent or trained adapter against the configured opponent.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Adapter checkpoint, mixed with the configured base agent.
        #[arg(long, conflicts_with = "agent")]
        checkpoint: Option<PathBuf>,
        /// Plain agent to evaluate instead (rule_based, passive, random,
        /// uniform_logits, checkpoint:<path>); defaults to the base agent.
        #[arg(long)]
        agent: Option<String>,
        #[arg(long)]
        opponent: Option<String>,
        #[arg(long)]
        games: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        /// Take the most probable mixed action instead of sampling.
        #[arg(long)]
        greedy: bool,
        /// Also write the report as CSV into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate over a list of temperatures.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated temperatures; defaults to `sweep.taus`.
        #[arg(long, value_delimiter = ',')]
        tau: Option<Vec<f64>>,
        #[arg(long)]
        games: Option<usize>,
        #[arg(long)]
        greedy: bool,
    },
    /// Print ASCII frames of one game between two agents.
    Play {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "rule_based")]
        p0: String,
        #[arg(long, default_value = "rule_based")]
        p1: String,
        /// Builtin map name or map file; defaults to the config's map.
        #[arg(long)]
        map: Option<String>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn write_config_copy(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, out, tau } => {
            let mut cfg = load_config(&common)?;
            if let Some(t) = tau {
                cfg.temperature = t;
            }
            cfg.validate()?;
            write_config_copy(&cfg, &out)?;
            let runs = run_train(&cfg, &out)?;
            for r in &runs {
                let last = r.metrics.last().map_or(0.0, |m| m.winrate);
                println!(
                    "seed {}: {} iterations, last winrate {last:.3}, checkpoint {}",
                    r.seed,
                    r.metrics.len(),
                    r.final_checkpoint.display()
                );
            }
            println!("summary: {}", out.join(SUMMARY_FILE).display());
        }
        Command::Eval {
            common,
            checkpoint,
            agent,
            opponent,
            games,
            tau,
            greedy,
            out,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(o) = opponent {
                cfg.opponent = AgentSpec::parse(&o)?;
            }
            if let Some(g) = games {
                cfg.eval_games = g;
            }
            if let Some(t) = tau {
                cfg.temperature = t;
            }
            cfg.validate()?;
            let map = resolve_map(&cfg.map)?;
            let subject: Arc<dyn Agent> = match (&checkpoint, &agent) {
                (Some(path), _) => Arc::new(adapter_from_checkpoint(
                    &cfg,
                    &map,
                    path,
                    cfg.temperature,
                    greedy || cfg.eval_greedy,
                )?),
                (None, Some(spec)) => AgentSpec::parse(spec)?.build(&map)?,
                (None, None) => cfg.base.build(&map)?,
            };
            let opp = cfg.opponent.build(&map)?;
            let seed = cfg.seeds[0];
            let report = run_eval(subject.as_ref(), opp.as_ref(), &map, cfg.eval_games, seed)?;
            println!(
                "{} vs {} on {}: {} games, {} wins, {} draws, {} losses, winrate {:.4}",
                subject.name(),
                opp.name(),
                map.name,
                report.games,
                report.wins,
                report.draws,
                report.losses,
                report.winrate()
            );
            if let Some(dir) = out {
                fs::create_dir_all(&dir)?;
                fs::write(
                    dir.join("eval.csv"),
                    format!(
                        "agent,opponent,map,seed,games,wins,draws,losses,winrate\n{},{},{},{seed},{},{},{},{},{}\n",
                        subject.name(),
                        opp.name(),
                        map.name,
                        report.games,
                        report.wins,
                        report.draws,
                        report.losses,
                        report.winrate()
                    ),
                )?;
            }
        }
        Command::Sweep {
            common,
            out,
            tau,
            games,
            greedy,
        } => {
            let mut cfg = load_config(&common)?;
            if let Some(g) = games {
                cfg.eval_games = g;
            }
            cfg.eval_greedy |= greedy;
            if let Some(t) = tau {
                cfg.sweep_taus = t;
            }
            cfg.validate()?;
            if cfg.sweep_taus.is_empty() {
                bail!("no temperatures to sweep");
            }
            write_config_copy(&cfg, &out)?;
            let rows = run_sweep(&cfg, &cfg.sweep_taus, &out)?;
            println!(
                "{} runs; results in {} and {}",
                rows.len(),
                out.join(SWEEP_FILE).display(),
                out.join(SWEEP_MEAN_FILE).display()
            );
            print!("{}", fs::read_to_string(out.join(SWEEP_MEAN_FILE))?);
        }
        Command::Play {
            common,
            p0,
            p1,
            map,
        } => {
            let cfg = load_config(&common)?;
            let map = resolve_map(map.as_deref().unwrap_or(&cfg.map))?;
            let a = AgentSpec::parse(&p0)?.build(&map)?;
            let b = AgentSpec::parse(&p1)?.build(&map)?;
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            play(&map, a.as_ref(), b.as_ref(), cfg.seeds[0], &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
