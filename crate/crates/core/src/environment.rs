//! The office as a partially observed control problem.
//!
//! An [`Environment`] owns the zone matrices, the comfort model and the
//! weather chains. Each episode is one simulated day. Exogenous randomness
//! (weather path, occupancy schedule, initial temperatures) is fixed at
//! [`Environment::reset`] from the rng passed there; the rng passed to
//! [`Environment::step`] only drives comfort labels. Two environments reset
//! with identically seeded rngs therefore see the same weather and occupancy
//! regardless of the actions applied.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::occupant::{
    internal_heat, occupancy, sample_comfort, sample_schedule, Comfort, ComfortParams, Schedule,
    STEPS_PER_DAY,
};
use crate::thermal::{self, Disturbance, StateMatrices, ThermalState};
use crate::weather::{estimate_chain, sample_day_bins, BinSpec, Quantity, TimeChain, WeatherTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub thermal: ThermalState,
    pub comfort: Comfort,
    pub k: usize,
    pub t_out: f64,
    pub q_solar: f64,
    pub occupied: bool,
}

impl FullState {
    pub fn disturbance(&self) -> Disturbance {
        Disturbance {
            q_solar: self.q_solar,
            q_internal: internal_heat(self.occupied),
            t_out: self.t_out,
        }
    }
}

/// What the controller is allowed to see.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t_air: f64,
    pub k: usize,
    pub occupied: bool,
}

/// Number of network input features derived from an [`Observation`].
pub const FEATURE_DIM: usize = 4;

impl Observation {
    /// `(t_air / 50, sin(2πk/144), cos(2πk/144), occupied)`.
    pub fn features(&self) -> [f64; FEATURE_DIM] {
        let angle = 2.0 * PI * self.k as f64 / STEPS_PER_DAY as f64;
        [
            self.t_air / 50.0,
            angle.sin(),
            angle.cos(),
            if self.occupied { 1.0 } else { 0.0 },
        ]
    }
}

pub fn observe(s: &FullState) -> Observation {
    Observation {
        t_air: s.thermal.t_air,
        k: s.k,
        occupied: s.occupied,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
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
    /// Use this schedule every day instead of sampling one.
    pub fixed_schedule: Option<Schedule>,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            u_max: 1000.0,
            episode_len: STEPS_PER_DAY,
            energy_weight_unoccupied: 0.001,
            energy_weight_occupied: 0.00001,
            constraint_penalty: 200.0,
            discomfort_penalty: 100.0,
            band_lo: 20.0,
            band_hi: 30.0,
            init_lo: 20.0,
            init_hi: 26.0,
            fixed_schedule: None,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.u_max.is_finite() && self.u_max > 0.0) {
            return Err(Error::param("u_max", "must be positive"));
        }
        if self.episode_len == 0 {
            return Err(Error::param("episode_len", "must be at least 1"));
        }
        for (name, v) in [
            ("energy_weight_unoccupied", self.energy_weight_unoccupied),
            ("energy_weight_occupied", self.energy_weight_occupied),
            ("constraint_penalty", self.constraint_penalty),
            ("discomfort_penalty", self.discomfort_penalty),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        if self.band_lo.partial_cmp(&self.band_hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::param("band_lo", "must be below band_hi"));
        }
        if !(self.init_lo <= self.init_hi && self.init_lo.is_finite() && self.init_hi.is_finite()) {
            return Err(Error::param("init_lo", "must not exceed init_hi"));
        }
        Ok(())
    }

    pub fn clamp_action(&self, u: f64) -> f64 {
        u.clamp(-self.u_max, self.u_max)
    }
}

/// Stage cost of applying `u` in state `s`. Callers clamp `u` first.
pub fn cost(s: &FullState, u: f64, cfg: &EnvConfig) -> f64 {
    if !s.occupied {
        return cfg.energy_weight_unoccupied * u * u;
    }
    let t = s.thermal.t_air;
    let constraint = if (cfg.band_lo..=cfg.band_hi).contains(&t) {
        0.0
    } else {
        cfg.constraint_penalty
    };
    let discomfort = if s.comfort.is_comfortable() {
        0.0
    } else {
        cfg.discomfort_penalty
    };
    cfg.energy_weight_occupied * u * u + constraint + discomfort
}

/// Outdoor temperature and solar chains with their binnings.
#[derive(Debug, Clone, PartialEq)]
pub struct WeatherModel {
    pub temperature: TimeChain,
    pub temperature_bins: BinSpec,
    pub solar: TimeChain,
    pub solar_bins: BinSpec,
}

impl WeatherModel {
    pub fn from_trace(trace: &WeatherTrace, temperature_bins: BinSpec, solar_bins: BinSpec) -> Result<Self> {
        Ok(Self {
            temperature: estimate_chain(trace, Quantity::OutdoorTemperature, &temperature_bins)?,
            temperature_bins,
            solar: estimate_chain(trace, Quantity::Solar, &solar_bins)?,
            solar_bins,
        })
    }

    /// Weather that never changes from the bins holding the given values.
    pub fn constant(t_out: f64, q_solar: f64) -> Self {
        let tb = BinSpec::temperature();
        let sb = BinSpec::solar();
        Self {
            temperature: TimeChain::constant(tb.n, tb.index(t_out)),
            temperature_bins: tb,
            solar: TimeChain::constant(sb.n, sb.index(q_solar)),
            solar_bins: sb,
        }
    }

    fn check(&self) -> Result<()> {
        if self.temperature.n_bins() != self.temperature_bins.n || self.solar.n_bins() != self.solar_bins.n {
            return Err(Error::Shape("weather chains do not match their binnings".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct DayPlan {
    schedule: Schedule,
    t_bins: Vec<usize>,
    s_bins: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Episode {
    state: FullState,
    day: DayPlan,
    exo_rng: ChaCha8Rng,
    steps: usize,
}

/// Outcome of one [`Environment::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    /// State the action was applied in.
    pub prev: FullState,
    /// Action after clamping.
    pub action: f64,
    pub reward: f64,
    pub state: FullState,
    pub observation: Observation,
    pub done: bool,
}

#[derive(Debug, Clone)]
pub struct Environment {
    matrices: StateMatrices,
    comfort: ComfortParams,
    weather: WeatherModel,
    config: EnvConfig,
    episode: Option<Episode>,
}

impl Environment {
    pub fn new(
        matrices: StateMatrices,
        comfort: ComfortParams,
        weather: WeatherModel,
        config: EnvConfig,
    ) -> Result<Self> {
        comfort.validate()?;
        config.validate()?;
        weather.check()?;
        Ok(Self {
            matrices,
            comfort,
            weather,
            config,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn matrices(&self) -> &StateMatrices {
        &self.matrices
    }

    pub fn comfort_params(&self) -> &ComfortParams {
        &self.comfort
    }

    pub fn weather(&self) -> &WeatherModel {
        &self.weather
    }

    pub fn state(&self) -> Result<&FullState> {
        self.episode
            .as_ref()
            .map(|e| &e.state)
            .ok_or_else(|| Error::Config("environment has not been reset".into()))
    }

    /// Starts a day with temperatures drawn uniformly from the initial range.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<(FullState, Observation)> {
        let lo = self.config.init_lo;
        let hi = self.config.init_hi;
        let mut draw = || if lo < hi { rng.random_range(lo..hi) } else { lo };
        let t_air = draw();
        let t_wall = draw();
        self.reset_from(ThermalState::new(t_air, t_wall), rng)
    }

    /// Starts a day from a given thermal state, as when chaining days into a week.
    pub fn reset_from<R: Rng + ?Sized>(
        &mut self,
        thermal: ThermalState,
        rng: &mut R,
    ) -> Result<(FullState, Observation)> {
        ensure_finite("initial thermal state", &[thermal.t_air, thermal.t_wall])?;
        let t0 = self.weather.temperature.sample_initial(rng);
        let s0 = self.weather.solar.sample_initial(rng);
        let schedule = self.config.fixed_schedule.unwrap_or_else(|| sample_schedule(rng));
        let t_bins = sample_day_bins(&self.weather.temperature, t0, rng)?;
        let s_bins = sample_day_bins(&self.weather.solar, s0, rng)?;
        let comfort = sample_comfort(thermal.t_air, &self.comfort, rng)?;
        let exo_rng = ChaCha8Rng::seed_from_u64(rng.random());

        let day = DayPlan { schedule, t_bins, s_bins };
        let state = FullState {
            thermal,
            comfort,
            k: 0,
            t_out: self.weather.temperature_bins.center(day.t_bins[0]),
            q_solar: self.weather.solar_bins.center(day.s_bins[0]),
            occupied: occupancy(0, &day.schedule)?,
        };
        self.episode = Some(Episode {
            state,
            day,
            exo_rng,
            steps: 0,
        });
        Ok((state, observe(&state)))
    }

    pub fn step<R: Rng + ?Sized>(&mut self, u: f64, rng: &mut R) -> Result<Step> {
        if !u.is_finite() {
            return Err(Error::NonFinite("action".into()));
        }
        let action = self.config.clamp_action(u);
        let episode = self
            .episode
            .as_mut()
            .ok_or_else(|| Error::Config("environment has not been reset".into()))?;
        let prev = episode.state;
        let reward = -cost(&prev, action, &self.config);

        let thermal = thermal::step(&prev.thermal, action, &prev.disturbance(), &self.matrices)?;
        let k = (prev.k + 1) % STEPS_PER_DAY;
        if k == 0 {
            episode.day = next_day(&episode.day, &self.weather, &self.config, &mut episode.exo_rng)?;
        }
        let comfort = sample_comfort(thermal.t_air, &self.comfort, rng)?;
        let state = FullState {
            thermal,
            comfort,
            k,
            t_out: self.weather.temperature_bins.center(episode.day.t_bins[k]),
            q_solar: self.weather.solar_bins.center(episode.day.s_bins[k]),
            occupied: occupancy(k, &episode.day.schedule)?,
        };
        episode.state = state;
        episode.steps += 1;
        Ok(Step {
            prev,
            action,
            reward,
            state,
            observation: observe(&state),
            done: episode.steps >= self.config.episode_len,
        })
    }
}

fn next_day(prev: &DayPlan, weather: &WeatherModel, cfg: &EnvConfig, rng: &mut ChaCha8Rng) -> Result<DayPlan> {
    let last = STEPS_PER_DAY - 1;
    let t0 = weather.temperature.next_bin(last, prev.t_bins[last], rng);
    let s0 = weather.solar.next_bin(last, prev.s_bins[last], rng);
    Ok(DayPlan {
        schedule: cfg.fixed_schedule.unwrap_or_else(|| sample_schedule(rng)),
        t_bins: sample_day_bins(&weather.temperature, t0, rng)?,
        s_bins: sample_day_bins(&weather.solar, s0, rng)?,
    })
}

/// One row of an episode trace: the state an action was applied in, the
/// action and the resulting reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub t_air: f64,
    pub t_wall: f64,
    pub t_out: f64,
    pub q_solar: f64,
    pub occupied: u8,
    pub comfort: u8,
    pub u: f64,
    pub reward: f64,
}

impl TraceRow {
    pub fn from_step(step: &Step) -> Self {
        let s = &step.prev;
        Self {
            k: s.k,
            t_air: s.thermal.t_air,
            t_wall: s.thermal.t_wall,
            t_out: s.t_out,
            q_solar: s.q_solar,
            occupied: s.occupied as u8,
            comfort: s.comfort.label(),
            u: step.action,
            reward: step.reward,
        }
    }
}

pub fn write_trace_csv(rows: &[TraceRow], path: &std::path::Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::weather::with_path(e, path))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
