//! Two-node RC thermal model of a single office zone.
//!
//! The zone is an air node (capacitance `c2`) coupled to an aggregated mass
//! node (capacitance `c1`) through `r1`, to the outdoor air through `r2`, with
//! the mass node coupled to outdoors through `r3`. Solar gain is split between
//! the nodes by the absorption fraction `a`. HVAC power and internal gains act
//! on the air node only. Explicit Euler with step `dt` gives
//!
//! ```text
//! x' = A x + B u + D w,   x = [T_air, T_wall],   w = [q_solar, q_internal, T_out]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Air to mass node resistance (°C/W).
    pub r1: f64,
    /// Air to outdoor resistance (°C/W).
    pub r2: f64,
    /// Mass node to outdoor resistance (°C/W).
    pub r3: f64,
    /// Mass node capacitance (J/°C).
    pub c1: f64,
    /// Air node capacitance (J/°C).
    pub c2: f64,
    /// Fraction of solar gain absorbed by the mass node.
    pub a: f64,
    /// Sampling time (s).
    pub dt: f64,
}

impl Default for CircuitParams {
    fn default() -> Self {
        Self {
            r1: 0.0084197,
            r2: 0.044014,
            r3: 4.38,
            c1: 9_861_100.0,
            c2: 128_560.0,
            a: 0.55,
            dt: 600.0,
        }
    }
}

impl CircuitParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r1", self.r1),
            ("r2", self.r2),
            ("r3", self.r3),
            ("c1", self.c1),
            ("c2", self.c2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.a.is_finite() && (0.0..=1.0).contains(&self.a)) {
            return Err(Error::param("a", format!("must lie in [0, 1], got {}", self.a)));
        }
        // dt = 0 is allowed: it yields the identity map.
        if !(self.dt.is_finite() && self.dt >= 0.0) {
            return Err(Error::param("dt", format!("must be non-negative, got {}", self.dt)));
        }
        Ok(())
    }
}

/// Discrete-time matrices of the zone model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMatrices {
    pub a_mat: [[f64; 2]; 2],
    pub b_vec: [f64; 2],
    pub d_mat: [[f64; 3]; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub t_air: f64,
    pub t_wall: f64,
}

impl ThermalState {
    pub fn new(t_air: f64, t_wall: f64) -> Self {
        Self { t_air, t_wall }
    }

    pub fn uniform(t: f64) -> Self {
        Self::new(t, t)
    }
}

/// Exogenous inputs for one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub q_solar: f64,
    pub q_internal: f64,
    pub t_out: f64,
}

impl Disturbance {
    pub fn as_array(&self) -> [f64; 3] {
        [self.q_solar, self.q_internal, self.t_out]
    }
}

pub fn build_matrices(params: &CircuitParams) -> Result<StateMatrices> {
    params.validate()?;
    let CircuitParams {
        r1,
        r2,
        r3,
        c1,
        c2,
        a,
        dt,
    } = *params;

    let a_mat = [
        [1.0 - dt / (c2 * r2) - dt / (c2 * r1), dt / (c2 * r1)],
        [dt / (c1 * r1), 1.0 - dt / (c1 * r3) - dt / (c1 * r1)],
    ];
    let b_vec = [dt / c2, 0.0];
    let d_mat = [
        [dt * (1.0 - a) / c2, dt / c2, dt / (c2 * r2)],
        [dt * a / c1, 0.0, dt / (c1 * r3)],
    ];
    Ok(StateMatrices {
        a_mat,
        b_vec,
        d_mat,
    })
}

impl StateMatrices {
    /// `A x + D w` for one row, i.e. the next state with zero HVAC input.
    pub fn free_response(&self, x: &ThermalState, w: &Disturbance) -> [f64; 2] {
        let xs = [x.t_air, x.t_wall];
        let ws = w.as_array();
        let mut out = [0.0; 2];
        for (row, o) in out.iter_mut().enumerate() {
            *o = self.a_mat[row][0] * xs[0]
                + self.a_mat[row][1] * xs[1]
                + self.d_mat[row][0] * ws[0]
                + self.d_mat[row][1] * ws[1]
                + self.d_mat[row][2] * ws[2];
        }
        out
    }

    /// Largest eigenvalue magnitude of `A`.
    pub fn spectral_radius(&self) -> f64 {
        let [[p, q], [r, s]] = self.a_mat;
        let tr = p + s;
        let det = p * s - q * r;
        let disc = tr * tr / 4.0 - det;
        if disc >= 0.0 {
            let root = disc.sqrt();
            (tr / 2.0 + root).abs().max((tr / 2.0 - root).abs())
        } else {
            // complex pair, |lambda|^2 = det
            det.sqrt()
        }
    }
}

/// Advances the zone one sampling step.
pub fn step(
    x: &ThermalState,
    u: f64,
    w: &Disturbance,
    m: &StateMatrices,
) -> Result<ThermalState> {
    ensure_finite(
        "thermal step input",
        &[x.t_air, x.t_wall, u, w.q_solar, w.q_internal, w.t_out],
    )?;
    let free = m.free_response(x, w);
    let next = ThermalState::new(free[0] + m.b_vec[0] * u, free[1] + m.b_vec[1] * u);
    ensure_finite("thermal step output", &[next.t_air, next.t_wall])?;
    Ok(next)
}

/// Solves `x = A x + B u + D w` for the equilibrium under constant inputs.
pub fn fixed_point(u: f64, w: &Disturbance, m: &StateMatrices) -> Result<ThermalState> {
    let zero = ThermalState::uniform(0.0);
    let free = m.free_response(&zero, w);
    let rhs = [free[0] + m.b_vec[0] * u, free[1] + m.b_vec[1] * u];
    // (I - A) x = rhs
    let [[p, q], [r, s]] = m.a_mat;
    let (p, q, r, s) = (1.0 - p, -q, -r, 1.0 - s);
    let det = p * s - q * r;
    if det.abs() < 1e-300 {
        return Err(Error::Numeric("I - A is singular".into()));
    }
    Ok(ThermalState::new(
        (s * rhs[0] - q * rhs[1]) / det,
        (p * rhs[1] - r * rhs[0]) / det,
    ))
}
