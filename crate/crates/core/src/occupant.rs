//! Occupant model: thermal sensation, daily presence and internal gains.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling steps in one day (10 minute resolution).
pub const STEPS_PER_DAY: usize = 144;

pub const ARRIVE_RANGE: std::ops::RangeInclusive<usize> = 48..=54;
pub const DEPART_RANGE: std::ops::RangeInclusive<usize> = 96..=114;

/// Appliance load present around the clock (W).
pub const BASE_INTERNAL_GAIN: f64 = 75.0;
/// Extra heat while the occupant is present (W).
pub const OCCUPANT_GAIN: f64 = 70.0;

/// Occupant's reported thermal sensation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comfort {
    Cold,
    Comfortable,
    Hot,
}

impl Comfort {
    /// Numeric label: 1 cold, 2 comfortable, 3 hot.
    pub fn label(self) -> u8 {
        match self {
            Comfort::Cold => 1,
            Comfort::Comfortable => 2,
            Comfort::Hot => 3,
        }
    }

    pub fn from_label(label: u8) -> Result<Self> {
        match label {
            1 => Ok(Comfort::Cold),
            2 => Ok(Comfort::Comfortable),
            3 => Ok(Comfort::Hot),
            other => Err(Error::OutOfRange(format!("comfort label {other}"))),
        }
    }

    pub fn is_comfortable(self) -> bool {
        self == Comfort::Comfortable
    }
}

/// Two-logistic sensation model. Cold probability falls through `t_cold`,
/// hot probability rises through `t_hot`, both with softness `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComfortParams {
    pub t_cold: f64,
    pub t_hot: f64,
    pub s: f64,
}

impl Default for ComfortParams {
    fn default() -> Self {
        Self {
            t_cold: 20.0,
            t_hot: 24.0,
            s: 1.0,
        }
    }
}

impl ComfortParams {
    fn check_shape(&self) -> Result<()> {
        if !(self.t_cold.is_finite() && self.t_hot.is_finite()) {
            return Err(Error::param("t_cold/t_hot", "must be finite"));
        }
        if self.t_cold >= self.t_hot {
            return Err(Error::param(
                "t_cold",
                format!("must be below t_hot ({} >= {})", self.t_cold, self.t_hot),
            ));
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return Err(Error::param("s", format!("must be positive, got {}", self.s)));
        }
        Ok(())
    }

    /// Full validation, including a 0.01 °C sweep of [0, 50] confirming the
    /// comfortable probability never goes negative.
    pub fn validate(&self) -> Result<()> {
        self.check_shape()?;
        for i in 0..=5000 {
            let t = i as f64 * 0.01;
            let (p1, _, p3) = self.tails(t);
            if p1 + p3 >= 1.0 {
                return Err(Error::param(
                    "s",
                    format!("cold and hot probabilities reach 1 at {t} °C"),
                ));
            }
        }
        Ok(())
    }

    fn tails(&self, t_air: f64) -> (f64, f64, f64) {
        let p1 = logistic((self.t_cold - t_air) / self.s);
        let p3 = logistic((t_air - self.t_hot) / self.s);
        (p1, 1.0 - p1 - p3, p3)
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Probabilities of (cold, comfortable, hot) at air temperature `t_air`.
pub fn comfort_pmf(t_air: f64, p: &ComfortParams) -> Result<(f64, f64, f64)> {
    if !t_air.is_finite() {
        return Err(Error::NonFinite("air temperature".into()));
    }
    p.check_shape()?;
    Ok(p.tails(t_air))
}

pub fn sample_comfort<R: Rng + ?Sized>(
    t_air: f64,
    p: &ComfortParams,
    rng: &mut R,
) -> Result<Comfort> {
    let (p1, p2, _) = comfort_pmf(t_air, p)?;
    let u: f64 = rng.random();
    Ok(if u < p1 {
        Comfort::Cold
    } else if u < p1 + p2 {
        Comfort::Comfortable
    } else {
        Comfort::Hot
    })
}

/// Arrival and departure steps for one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub arrive: usize,
    pub depart: usize,
}

impl Schedule {
    pub fn new(arrive: usize, depart: usize) -> Result<Self> {
        if !ARRIVE_RANGE.contains(&arrive) {
            return Err(Error::OutOfRange(format!("arrival step {arrive}")));
        }
        if !DEPART_RANGE.contains(&depart) {
            return Err(Error::OutOfRange(format!("departure step {depart}")));
        }
        Ok(Self { arrive, depart })
    }
}

pub fn sample_schedule<R: Rng + ?Sized>(rng: &mut R) -> Schedule {
    Schedule {
        arrive: rng.random_range(ARRIVE_RANGE),
        depart: rng.random_range(DEPART_RANGE),
    }
}

/// Presence at step `k`, over the half-open interval `[arrive, depart)`.
pub fn occupancy(k: usize, s: &Schedule) -> Result<bool> {
    if k >= STEPS_PER_DAY {
        return Err(Error::OutOfRange(format!("time step {k}")));
    }
    Ok(s.arrive <= k && k < s.depart)
}

pub fn internal_heat(occupied: bool) -> f64 {
    BASE_INTERNAL_GAIN + if occupied { OCCUPANT_GAIN } else { 0.0 }
}
