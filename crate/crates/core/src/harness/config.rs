//! Flat key-value run configuration.
//!
//! The file is TOML restricted to top-level keys, one per tunable. Every key
//! is optional; missing keys take the defaults shown by `Settings::default()`.
//!
//! ```toml
//! # thermal circuit
//! r1 = 0.0084197
//! r2 = 0.044014
//! r3 = 4.38
//! c1 = 9861100.0
//! c2 = 128560.0
//! solar_split = 0.55
//! dt = 600.0
//!
//! # occupant comfort model
//! t_cold = 20.0
//! t_hot = 24.0
//! comfort_softness = 1.0
//!
//! # weather: read a trace, or synthesise `synth_days` from `weather_seed`
//! # weather_trace = "weather.csv"
//! synth_days = 31
//! weather_seed = 2017
//! t_out_lo = 10.0
//! t_out_hi = 40.0
//! t_out_bins = 6
//! solar_lo = 0.0
//! solar_hi = 900.0
//! solar_bins = 9
//! synth_t_mean = 27.0
//! synth_t_swing = 6.0
//! synth_t_peak_k = 90.0
//! synth_t_day_sd = 1.5
//! synth_t_noise_sd = 0.5
//! synth_solar_peak = 700.0
//! synth_sunrise_k = 39.0
//! synth_sunset_k = 126.0
//! synth_solar_noise_sd = 30.0
//! synth_min_clearness = 0.75
//!
//! # environment and reward
//! u_max = 1000.0
//! episode_len = 144
//! energy_weight_unoccupied = 0.001
//! energy_weight_occupied = 0.00001
//! constraint_penalty = 200.0
//! discomfort_penalty = 100.0
//! band_lo = 20.0
//! band_hi = 30.0
//! init_lo = 20.0
//! init_hi = 26.0
//!
//! # DDPG
//! discount = 0.99
//! tau = 0.005
//! batch_size = 64
//! buffer_capacity = 100000
//! episodes = 200
//! steps_per_episode = 144
//! hidden_widths = [64, 64]
//! actor_lr = 0.0001
//! critic_lr = 0.001
//! final_init_bound = 0.003
//! warmup_batches = 10
//! reward_scale = 0.01
//! noise_mu = 0.0
//! noise_theta = 0.15
//! noise_sigma_start = 200.0
//! noise_sigma_end = 20.0
//! checkpoint_every = 0
//!
//! # greedy baseline
//! greedy_target = 22.0
//! greedy_tracking_weight = 1.0
//! greedy_energy_weight = 0.00001
//!
//! # evaluation
//! seed = 0
//! eval_days = 500
//! hist_bins = 20
//! ```

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baseline::GreedyParams;
use crate::ddpg::DdpgConfig;
use crate::environment::{EnvConfig, Environment, WeatherModel};
use crate::error::{Error, Result};
use crate::occupant::ComfortParams;
use crate::thermal::{build_matrices, CircuitParams};
use crate::weather::{synth_trace, BinSpec, SynthParams, WeatherTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub c1: f64,
    pub c2: f64,
    pub solar_split: f64,
    pub dt: f64,

    pub t_cold: f64,
    pub t_hot: f64,
    pub comfort_softness: f64,

    pub weather_trace: Option<PathBuf>,
    pub synth_days: usize,
    pub weather_seed: u64,
    pub t_out_lo: f64,
    pub t_out_hi: f64,
    pub t_out_bins: usize,
    pub solar_lo: f64,
    pub solar_hi: f64,
    pub solar_bins: usize,
    pub synth_t_mean: f64,
    pub synth_t_swing: f64,
    pub synth_t_peak_k: f64,
    pub synth_t_day_sd: f64,
    pub synth_t_noise_sd: f64,
    pub synth_solar_peak: f64,
    pub synth_sunrise_k: f64,
    pub synth_sunset_k: f64,
    pub synth_solar_noise_sd: f64,
    pub synth_min_clearness: f64,

    pub u_max: f64,
    pub episode_len: usize,
    pub energy_weight_unoccupied: f64,
    pub energy_weight_occupied: f64,
    pub constraint_penalty: f64,
    pub discomfort_penalty: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub init_lo: f64,
    pub init_hi: f64,

    pub discount: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub hidden_widths: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub final_init_bound: f64,
    pub warmup_batches: usize,
    pub reward_scale: f64,
    pub noise_mu: f64,
    pub noise_theta: f64,
    pub noise_sigma_start: f64,
    pub noise_sigma_end: f64,
    pub checkpoint_every: usize,

    pub greedy_target: f64,
    pub greedy_tracking_weight: f64,
    pub greedy_energy_weight: f64,

    pub seed: u64,
    pub eval_days: usize,
    pub hist_bins: usize,
}

impl Default for Settings {
    fn default() -> Self {
        let circuit = CircuitParams::default();
        let comfort = ComfortParams::default();
        let synth = SynthParams::default();
        let (tb, sb) = (BinSpec::temperature(), BinSpec::solar());
        let env = EnvConfig::default();
        let ddpg = DdpgConfig::default();
        let greedy = GreedyParams::default();
        Self {
            r1: circuit.r1,
            r2: circuit.r2,
            r3: circuit.r3,
            c1: circuit.c1,
            c2: circuit.c2,
            solar_split: circuit.a,
            dt: circuit.dt,
            t_cold: comfort.t_cold,
            t_hot: comfort.t_hot,
            comfort_softness: comfort.s,
            weather_trace: None,
            synth_days: 31,
            weather_seed: 2017,
            t_out_lo: tb.lo,
            t_out_hi: tb.hi,
            t_out_bins: tb.n,
            solar_lo: sb.lo,
            solar_hi: sb.hi,
            solar_bins: sb.n,
            synth_t_mean: synth.t_mean,
            synth_t_swing: synth.t_swing,
            synth_t_peak_k: synth.t_peak_k,
            synth_t_day_sd: synth.t_day_sd,
            synth_t_noise_sd: synth.t_noise_sd,
            synth_solar_peak: synth.solar_peak,
            synth_sunrise_k: synth.sunrise_k,
            synth_sunset_k: synth.sunset_k,
            synth_solar_noise_sd: synth.solar_noise_sd,
            synth_min_clearness: synth.min_clearness,
            u_max: env.u_max,
            episode_len: env.episode_len,
            energy_weight_unoccupied: env.energy_weight_unoccupied,
            energy_weight_occupied: env.energy_weight_occupied,
            constraint_penalty: env.constraint_penalty,
            discomfort_penalty: env.discomfort_penalty,
            band_lo: env.band_lo,
            band_hi: env.band_hi,
            init_lo: env.init_lo,
            init_hi: env.init_hi,
            discount: ddpg.discount,
            tau: ddpg.tau,
            batch_size: ddpg.batch_size,
            buffer_capacity: ddpg.buffer_capacity,
            episodes: ddpg.episodes,
            steps_per_episode: ddpg.steps_per_episode,
            hidden_widths: ddpg.hidden,
            actor_lr: ddpg.actor_lr,
            critic_lr: ddpg.critic_lr,
            final_init_bound: ddpg.final_init_bound,
            warmup_batches: ddpg.warmup_batches,
            reward_scale: ddpg.reward_scale,
            noise_mu: ddpg.noise_mu,
            noise_theta: ddpg.noise_theta,
            noise_sigma_start: ddpg.noise_sigma_start,
            noise_sigma_end: ddpg.noise_sigma_end,
            checkpoint_every: ddpg.checkpoint_every,
            greedy_target: greedy.target,
            greedy_tracking_weight: greedy.tracking_weight,
            greedy_energy_weight: greedy.energy_weight,
            seed: 0,
            eval_days: 500,
            hist_bins: 20,
        }
    }
}

impl Settings {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file. Relative `weather_trace` paths resolve against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut settings =
            Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(trace), Some(dir)) = (&settings.weather_trace, path.parent()) {
            if trace.is_relative() {
                settings.weather_trace = Some(dir.join(trace));
            }
        }
        Ok(settings)
    }

    pub fn circuit(&self) -> CircuitParams {
        CircuitParams {
            r1: self.r1,
            r2: self.r2,
            r3: self.r3,
            c1: self.c1,
            c2: self.c2,
            a: self.solar_split,
            dt: self.dt,
        }
    }

    pub fn comfort(&self) -> ComfortParams {
        ComfortParams {
            t_cold: self.t_cold,
            t_hot: self.t_hot,
            s: self.comfort_softness,
        }
    }

    pub fn temperature_bins(&self) -> Result<BinSpec> {
        BinSpec::new(self.t_out_lo, self.t_out_hi, self.t_out_bins)
    }

    pub fn solar_bins(&self) -> Result<BinSpec> {
        BinSpec::new(self.solar_lo, self.solar_hi, self.solar_bins)
    }

    pub fn synth(&self) -> SynthParams {
        SynthParams {
            t_mean: self.synth_t_mean,
            t_swing: self.synth_t_swing,
            t_peak_k: self.synth_t_peak_k,
            t_day_sd: self.synth_t_day_sd,
            t_noise_sd: self.synth_t_noise_sd,
            solar_peak: self.synth_solar_peak,
            sunrise_k: self.synth_sunrise_k,
            sunset_k: self.synth_sunset_k,
            solar_noise_sd: self.synth_solar_noise_sd,
            min_clearness: self.synth_min_clearness,
        }
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            u_max: self.u_max,
            episode_len: self.episode_len,
            energy_weight_unoccupied: self.energy_weight_unoccupied,
            energy_weight_occupied: self.energy_weight_occupied,
            constraint_penalty: self.constraint_penalty,
            discomfort_penalty: self.discomfort_penalty,
            band_lo: self.band_lo,
            band_hi: self.band_hi,
            init_lo: self.init_lo,
            init_hi: self.init_hi,
            fixed_schedule: None,
        }
    }

    pub fn ddpg(&self) -> DdpgConfig {
        DdpgConfig {
            discount: self.discount,
            tau: self.tau,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            episodes: self.episodes,
            steps_per_episode: self.steps_per_episode,
            hidden: self.hidden_widths.clone(),
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            final_init_bound: self.final_init_bound,
            warmup_batches: self.warmup_batches,
            reward_scale: self.reward_scale,
            noise_mu: self.noise_mu,
            noise_theta: self.noise_theta,
            noise_sigma_start: self.noise_sigma_start,
            noise_sigma_end: self.noise_sigma_end,
            checkpoint_every: self.checkpoint_every,
        }
    }

    pub fn greedy(&self) -> GreedyParams {
        GreedyParams {
            target: self.greedy_target,
            tracking_weight: self.greedy_tracking_weight,
            energy_weight: self.greedy_energy_weight,
            bound: self.u_max,
        }
    }

    /// The weather trace chains are estimated from: the configured file, or
    /// `synth_days` synthetic days drawn from `weather_seed`.
    pub fn weather_trace(&self) -> Result<WeatherTrace> {
        match &self.weather_trace {
            Some(path) => WeatherTrace::read_csv(path),
            None => synth_trace(
                self.synth_days,
                &self.synth(),
                &mut ChaCha8Rng::seed_from_u64(self.weather_seed),
            ),
        }
    }

    pub fn weather_model(&self) -> Result<WeatherModel> {
        WeatherModel::from_trace(&self.weather_trace()?, self.temperature_bins()?, self.solar_bins()?)
    }

    pub fn environment(&self) -> Result<Environment> {
        Environment::new(
            build_matrices(&self.circuit())?,
            self.comfort(),
            self.weather_model()?,
            self.env_config(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Settings::from_toml_str("").unwrap(), Settings::default());
    }

    #[test]
    fn keys_override_and_unknown_keys_fail() {
        let s = Settings::from_toml_str("r2 = 0.05\nhidden_widths = [32, 16]\nepisodes = 0\n").unwrap();
        assert_eq!(s.circuit().r2, 0.05);
        assert_eq!(s.ddpg().hidden, vec![32, 16]);
        assert_eq!(s.ddpg().episodes, 0);
        assert!(Settings::from_toml_str("not_a_key = 1").is_err());
        assert!(Settings::from_toml_str("r2 = \"wide\"").is_err());
    }

    #[test]
    fn documented_example_parses_to_defaults() {
        let doc: String = include_str!("config.rs")
            .lines()
            .skip_while(|l| !l.starts_with("//! ```toml"))
            .skip(1)
            .take_while(|l| !l.starts_with("//! ```"))
            .map(|l| l.trim_start_matches("//!").trim_start())
            .collect::<Vec<_>>()
            .join("\n");
        assert_eq!(Settings::from_toml_str(&doc).unwrap(), Settings::default());
    }

    #[test]
    fn default_environment_builds() {
        let env = Settings::default().environment().unwrap();
        assert_eq!(env.config().u_max, 1000.0);
    }
}
