//! `hvac-rl` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::Settings;
use super::evaluate::{compare, run_days, write_comparison};
use super::metrics::{write_metrics_csv, MetricContext};
use super::policy::Policy;
use crate::ddpg::{train, write_log_csv, Checkpoint};
use crate::environment::write_trace_csv;
use crate::error::{Error, Result};
use crate::weather::{estimate_chain, synth_trace, write_chain_csv, write_initial_csv, Quantity, WeatherTrace};

#[derive(Debug, Parser)]
#[command(name = "hvac-rl", version, about = "Office climate-control RL workbench")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat TOML config; unset keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic weather trace to `weather.csv`.
    SynthWeather {
        #[arg(long)]
        days: Option<usize>,
    },
    /// Estimate temperature and solar chains from a weather trace.
    EstimateChain {
        /// Trace CSV; defaults to the configured weather source.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Train a DDPG agent; writes `checkpoint.json` and `training_log.csv`.
    Train {
        /// Overrides `episodes` from the config.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Run one policy over consecutive days with the state carried over.
    Evaluate {
        #[arg(long, default_value = "greedy")]
        policy: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        days: usize,
    },
    /// Paired comparison of several policies over independent days.
    Compare {
        /// Comma-separated: ddpg, greedy, zero, random.
        #[arg(long, value_delimiter = ',', default_value = "greedy,zero")]
        policies: Vec<String>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Overrides `eval_days` from the config.
        #[arg(long)]
        days: Option<usize>,
        /// Also write traces for the first N days.
        #[arg(long, default_value_t = 0)]
        traces: usize,
    },
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            1
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let settings = match &cli.global.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    let out = cli.global.out.as_path();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let seed = cli.global.seed.unwrap_or(settings.seed);

    match &cli.command {
        Command::SynthWeather { days } => {
            let days = days.unwrap_or(settings.synth_days);
            let seed = cli.global.seed.unwrap_or(settings.weather_seed);
            let trace = synth_trace(days, &settings.synth(), &mut ChaCha8Rng::seed_from_u64(seed))?;
            trace.write_csv(&out.join("weather.csv"))
        }
        Command::EstimateChain { trace } => {
            let trace = match trace {
                Some(p) => WeatherTrace::read_csv(p)?,
                None => settings.weather_trace()?,
            };
            for (quantity, bins, stem) in [
                (Quantity::OutdoorTemperature, settings.temperature_bins()?, "chain_t_out"),
                (Quantity::Solar, settings.solar_bins()?, "chain_q_solar"),
            ] {
                let chain = estimate_chain(&trace, quantity, &bins)?;
                write_chain_csv(&chain, &out.join(format!("{stem}.csv")))?;
                write_initial_csv(&chain, &out.join(format!("{stem}_initial.csv")))?;
            }
            Ok(())
        }
        Command::Train { episodes } => {
            let mut config = settings.ddpg();
            if let Some(m) = episodes {
                config.episodes = *m;
            }
            let mut env = settings.environment()?;
            let every = config.checkpoint_every;
            let result = train(&mut env, &config, &mut ChaCha8Rng::seed_from_u64(seed), |agent, entry| {
                if every > 0 && (entry.episode + 1) % every == 0 {
                    Checkpoint::from_agent(agent).save(&out.join(format!("checkpoint_ep{}.json", entry.episode + 1)))?;
                }
                Ok(())
            });
            match result {
                Ok(outcome) => {
                    write_log_csv(&outcome.log, &out.join("training_log.csv"))?;
                    Checkpoint::from_agent(&outcome.agent).save(&out.join("checkpoint.json"))
                }
                Err(failure) => {
                    write_log_csv(&failure.log, &out.join("training_log.csv"))?;
                    Err(failure.error)
                }
            }
        }
        Command::Evaluate { policy, checkpoint, days } => {
            if *days == 0 {
                return Err(Error::param("days", "must be at least 1"));
            }
            let policy = parse_policy(policy, checkpoint.as_deref(), &settings)?;
            let env = settings.environment()?;
            let ctx = MetricContext::new(settings.dt, env.config());
            let results = run_days(&policy, &env, &ctx, seed, *days)?;
            for (day, r) in results.iter().enumerate() {
                write_trace_csv(&r.rows, &out.join(format!("trace_{}_{day}.csv", policy.name())))?;
            }
            let metrics: Vec<_> = results.iter().map(|r| r.metrics).collect();
            write_metrics_csv(&metrics, &out.join(format!("metrics_{}.csv", policy.name())))
        }
        Command::Compare { policies, checkpoint, days, traces } => {
            let mut parsed: Vec<Policy> = Vec::with_capacity(policies.len());
            for name in policies {
                let p = parse_policy(name, checkpoint.as_deref(), &settings)?;
                if parsed.iter().any(|q| q.name() == p.name()) {
                    return Err(Error::param("policies", format!("`{name}` listed twice")));
                }
                parsed.push(p);
            }
            let env = settings.environment()?;
            let ctx = MetricContext::new(settings.dt, env.config());
            let days = days.unwrap_or(settings.eval_days);
            let runs = compare(&parsed, &env, &ctx, days, seed, *traces)?;
            write_comparison(&runs, out, settings.hist_bins)
        }
    }
}

fn parse_policy(name: &str, checkpoint: Option<&Path>, settings: &Settings) -> Result<Policy> {
    match name.trim() {
        "ddpg" => {
            let path = checkpoint.ok_or_else(|| Error::param("checkpoint", "the ddpg policy needs --checkpoint"))?;
            Policy::from_checkpoint(path)
        }
        "greedy" => Ok(Policy::Greedy(settings.greedy())),
        "zero" => Ok(Policy::Zero),
        "random" => Ok(Policy::Random),
        other => Err(Error::param("policy", format!("unknown policy `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_global_flags_after_the_subcommand() {
        let cli = Cli::try_parse_from(["hvac-rl", "compare", "--policies", "greedy,zero", "--seed", "1", "--out", "x"])
            .unwrap();
        assert_eq!(cli.global.seed, Some(1));
        assert_eq!(cli.global.out, PathBuf::from("x"));
        match cli.command {
            Command::Compare { policies, .. } => assert_eq!(policies, ["greedy", "zero"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        assert_ne!(main_with(["hvac-rl", "fly"]), 0);
        assert_ne!(main_with(["hvac-rl", "train", "--bogus"]), 0);
    }

    #[test]
    fn ddpg_without_checkpoint_fails() {
        assert!(parse_policy("ddpg", None, &Settings::default()).is_err());
        assert!(parse_policy("nope", None, &Settings::default()).is_err());
    }
}
