use std::path::Path;

use rand::Rng;

use crate::baseline::{greedy_action, GreedyParams};
use crate::ddpg::{act, Checkpoint};
use crate::environment::{observe, Environment, FullState, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::neural::MlpParams;

/// A controller the harness can run. Only `Greedy` reads the full state;
/// `Ddpg` is handed the observation features and nothing else.
#[derive(Debug, Clone)]
pub enum Policy {
    Ddpg { actor: MlpParams, u_max: f64 },
    Greedy(GreedyParams),
    Zero,
    Random,
}

impl Policy {
    pub fn ddpg(actor: MlpParams, u_max: f64) -> Result<Self> {
        if actor.input_dim() != FEATURE_DIM || actor.output_dim() != 1 {
            return Err(Error::Shape(format!(
                "actor maps {} -> {}, expected {FEATURE_DIM} -> 1",
                actor.input_dim(),
                actor.output_dim()
            )));
        }
        if !(u_max.is_finite() && u_max > 0.0) {
            return Err(Error::param("u_max", "must be positive"));
        }
        Ok(Policy::Ddpg { actor, u_max })
    }

    pub fn from_checkpoint(path: &Path) -> Result<Self> {
        let cp = Checkpoint::load(path)?;
        let (actor, _) = cp.networks()?;
        Self::ddpg(actor, cp.u_max)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Ddpg { .. } => "ddpg",
            Policy::Greedy(_) => "greedy",
            Policy::Zero => "zero",
            Policy::Random => "random",
        }
    }

    /// Rejects a policy that cannot drive `env`.
    pub fn check(&self, env: &Environment) -> Result<()> {
        match self {
            Policy::Ddpg { u_max, .. } if *u_max != env.config().u_max => Err(Error::Shape(format!(
                "checkpoint action bound {u_max} differs from environment bound {}",
                env.config().u_max
            ))),
            Policy::Greedy(p) => p.validate(),
            _ => Ok(()),
        }
    }

    pub fn action<R: Rng + ?Sized>(&self, state: &FullState, env: &Environment, rng: &mut R) -> Result<f64> {
        let u_max = env.config().u_max;
        match self {
            Policy::Ddpg { actor, .. } => act(actor, &observe(state).features(), None, u_max),
            Policy::Greedy(p) => greedy_action(
                &state.thermal,
                &state.disturbance(),
                state.occupied,
                env.matrices(),
                p,
            ),
            Policy::Zero => Ok(0.0),
            Policy::Random => Ok(rng.random_range(-u_max..=u_max)),
        }
    }
}
