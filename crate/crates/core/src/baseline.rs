//! Greedy one-step controller with full state and disturbance knowledge.
//!
//! While the room is occupied it picks the power minimising
//! `weight * (T_air' - target)^2 + energy_weight * u^2` over `|u| <= bound`,
//! where `T_air'` is the one-step prediction of the air temperature. The
//! prediction is affine in `u`, so the minimiser is a clamped ratio.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::thermal::{Disturbance, StateMatrices, ThermalState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreedyParams {
    pub target: f64,
    pub tracking_weight: f64,
    pub energy_weight: f64,
    pub bound: f64,
}

impl Default for GreedyParams {
    fn default() -> Self {
        Self {
            target: 22.0,
            tracking_weight: 1.0,
            energy_weight: 1e-5,
            bound: 1000.0,
        }
    }
}

impl GreedyParams {
    pub fn validate(&self) -> Result<()> {
        if !self.target.is_finite() {
            return Err(Error::param("target", "must be finite"));
        }
        for (name, v) in [
            ("tracking_weight", self.tracking_weight),
            ("energy_weight", self.energy_weight),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(Error::param("bound", "must be positive"));
        }
        Ok(())
    }
}

pub fn greedy_action(
    x: &ThermalState,
    w: &Disturbance,
    occupied: bool,
    mats: &StateMatrices,
    p: &GreedyParams,
) -> Result<f64> {
    ensure_finite(
        "greedy input",
        &[x.t_air, x.t_wall, w.q_solar, w.q_internal, w.t_out],
    )?;
    p.validate()?;
    if !occupied {
        return Ok(0.0);
    }
    let drift = mats.free_response(x, w)[0];
    let gain = mats.b_vec[0];
    let denom = p.tracking_weight * gain * gain + p.energy_weight;
    if denom == 0.0 {
        return Ok(0.0);
    }
    let u = p.tracking_weight * gain * (p.target - drift) / denom;
    Ok(u.clamp(-p.bound, p.bound))
}
