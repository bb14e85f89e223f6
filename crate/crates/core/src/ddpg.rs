//! Deep deterministic policy gradient on the office environment.
//!
//! The actor maps observation features to an HVAC power in `[-u_max, u_max]`
//! through a scaled tanh head. The critic takes the features concatenated with
//! the action divided by `u_max`. Targets always bootstrap: day boundaries are
//! artificial cuts of a continuing task.

use std::collections::VecDeque;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{Environment, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::neural::{adam_update, Activation, AdamState, MlpDocument, MlpParams};

pub type Features = [f64; FEATURE_DIM];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Features,
    pub action: f64,
    pub reward: f64,
    pub next_obs: Features,
}

/// Bounded FIFO of transitions with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::param("buffer_capacity", "must be at least 1"));
        }
        Ok(Self {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Appends, evicting the oldest transition when full.
    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    /// `n` independent uniform draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Transition>> {
        if self.items.is_empty() {
            return Err(Error::Empty("replay buffer".into()));
        }
        Ok((0..n)
            .map(|_| self.items[rng.random_range(0..self.items.len())])
            .collect())
    }
}

/// Ornstein-Uhlenbeck exploration noise in watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuNoise {
    pub value: f64,
    pub mu: f64,
    pub theta: f64,
    pub sigma: f64,
}

impl OuNoise {
    pub fn new(mu: f64, theta: f64, sigma: f64) -> Self {
        Self {
            value: mu,
            mu,
            theta,
            sigma,
        }
    }

    pub fn reset(&mut self) {
        self.value = self.mu;
    }

    /// `e <- e + theta (mu - e) + sigma N(0, 1)`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.value += self.theta * (self.mu - self.value) + self.sigma * z;
        self.value
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DdpgConfig {
    pub discount: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Bound of the uniform initialisation of both output layers.
    pub final_init_bound: f64,
    /// Updates start once the buffer holds `warmup_batches * batch_size` transitions.
    pub warmup_batches: usize,
    /// Multiplies rewards before they are stored for learning.
    pub reward_scale: f64,
    pub noise_mu: f64,
    pub noise_theta: f64,
    pub noise_sigma_start: f64,
    pub noise_sigma_end: f64,
    /// Write a checkpoint every this many episodes (0 disables).
    pub checkpoint_every: usize,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        Self {
            discount: 0.99,
            tau: 0.005,
            batch_size: 64,
            buffer_capacity: 100_000,
            episodes: 200,
            steps_per_episode: 144,
            hidden: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            final_init_bound: 3e-3,
            warmup_batches: 10,
            reward_scale: 0.01,
            noise_mu: 0.0,
            noise_theta: 0.15,
            noise_sigma_start: 200.0,
            noise_sigma_end: 20.0,
            checkpoint_every: 0,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.discount) {
            return Err(Error::param("discount", format!("must lie in [0, 1), got {}", self.discount)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::param("tau", format!("must lie in (0, 1], got {}", self.tau)));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be at least 1"));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::param("buffer_capacity", "must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::param("hidden", "widths must be positive"));
        }
        for (name, v) in [
            ("actor_lr", self.actor_lr),
            ("critic_lr", self.critic_lr),
            ("reward_scale", self.reward_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, "must be positive"));
            }
        }
        for (name, v) in [
            ("noise_sigma_start", self.noise_sigma_start),
            ("noise_sigma_end", self.noise_sigma_end),
            ("noise_theta", self.noise_theta),
            ("final_init_bound", self.final_init_bound),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, "must be non-negative"));
            }
        }
        Ok(())
    }

    /// Exploration scale for `episode`, decaying geometrically from start to end.
    pub fn sigma_at(&self, episode: usize) -> f64 {
        if self.episodes <= 1 || self.noise_sigma_start <= 0.0 || self.noise_sigma_end <= 0.0 {
            return self.noise_sigma_start;
        }
        let frac = episode as f64 / (self.episodes - 1) as f64;
        self.noise_sigma_start * (self.noise_sigma_end / self.noise_sigma_start).powf(frac)
    }
}

/// Actor, critic, their targets and optimizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub actor: MlpParams,
    pub critic: MlpParams,
    pub target_actor: MlpParams,
    pub target_critic: MlpParams,
    pub actor_opt: AdamState,
    pub critic_opt: AdamState,
    pub u_max: f64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(config: &DdpgConfig, u_max: f64, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let mut actor_sizes = vec![FEATURE_DIM];
        actor_sizes.extend(&config.hidden);
        actor_sizes.push(1);
        let mut critic_sizes = actor_sizes.clone();
        critic_sizes[0] = FEATURE_DIM + 1;

        let bound = Some(config.final_init_bound);
        let actor = MlpParams::init_with_final_bound(
            &actor_sizes,
            Activation::Relu,
            Activation::ScaledTanh { scale: u_max },
            bound,
            rng,
        )?;
        let critic =
            MlpParams::init_with_final_bound(&critic_sizes, Activation::Relu, Activation::Identity, bound, rng)?;
        Ok(Self {
            actor_opt: AdamState::new(&actor, config.actor_lr),
            critic_opt: AdamState::new(&critic, config.critic_lr),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
            u_max,
        })
    }
}

/// Critic input rows: features followed by the normalised action.
fn critic_input(obs: impl Iterator<Item = Features>, actions: &[f64], u_max: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(actions.len() * (FEATURE_DIM + 1));
    for (f, a) in obs.zip(actions) {
        out.extend_from_slice(&f);
        out.push(a / u_max);
    }
    out
}

fn check_networks(actor: &MlpParams, critic: &MlpParams) -> Result<()> {
    if actor.input_dim() != FEATURE_DIM || actor.output_dim() != 1 {
        return Err(Error::Shape(format!(
            "actor must map {FEATURE_DIM} features to 1 action, got {:?}",
            actor.sizes()
        )));
    }
    if critic.input_dim() != FEATURE_DIM + 1 || critic.output_dim() != 1 {
        return Err(Error::Shape(format!(
            "critic must map {} inputs to 1 value, got {:?}",
            FEATURE_DIM + 1,
            critic.sizes()
        )));
    }
    Ok(())
}

/// Bootstrapped regression targets `r + discount * Q'(o', pi'(o'))`.
pub fn critic_targets(
    batch: &[Transition],
    target_actor: &MlpParams,
    target_critic: &MlpParams,
    discount: f64,
    u_max: f64,
) -> Result<Vec<f64>> {
    check_networks(target_actor, target_critic)?;
    if batch.is_empty() {
        return Ok(Vec::new());
    }
    let next: Vec<f64> = batch.iter().flat_map(|t| t.next_obs).collect();
    let next_actions = target_actor.predict(&next)?;
    let q_next = target_critic.predict(&critic_input(batch.iter().map(|t| t.next_obs), &next_actions, u_max))?;
    Ok(batch
        .iter()
        .zip(q_next)
        .map(|(t, q)| t.reward + discount * q)
        .collect())
}

/// Gradient of an action-value function with respect to the action.
pub trait ActionGradient {
    /// `dQ/da` at each (features, action) pair, actions in watts.
    fn action_gradient(&self, obs: &[Features], actions: &[f64]) -> Result<Vec<f64>>;
}

/// A critic network paired with the action scale it was trained with.
pub struct CriticNet<'a> {
    pub net: &'a MlpParams,
    pub u_max: f64,
}

impl ActionGradient for CriticNet<'_> {
    fn action_gradient(&self, obs: &[Features], actions: &[f64]) -> Result<Vec<f64>> {
        let input = critic_input(obs.iter().copied(), actions, self.u_max);
        let (_, cache) = self.net.forward(&input)?;
        let (_, input_grad) = self.net.backward(&cache, &vec![1.0; actions.len()])?;
        Ok(input_grad
            .chunks(FEATURE_DIM + 1)
            .map(|row| row[FEATURE_DIM] / self.u_max)
            .collect())
    }
}

/// One Adam ascent step on the mean of `Q(o, pi(o))` over the batch.
pub fn actor_step(
    actor: &mut MlpParams,
    opt: &mut AdamState,
    obs: &[Features],
    critic: &impl ActionGradient,
) -> Result<()> {
    if obs.is_empty() {
        return Err(Error::Empty("actor batch".into()));
    }
    let flat: Vec<f64> = obs.iter().flatten().copied().collect();
    let (actions, cache) = actor.forward(&flat)?;
    let dq_da = critic.action_gradient(obs, &actions)?;
    // Adam descends, so hand it the gradient of -mean Q.
    let n = obs.len() as f64;
    let out_grad: Vec<f64> = dq_da.iter().map(|g| -g / n).collect();
    let (grads, _) = actor.backward(&cache, &out_grad)?;
    adam_update(actor, &grads, opt)
}

/// `target <- tau * main + (1 - tau) * target`.
pub fn soft_update(main: &MlpParams, target: &mut MlpParams, tau: f64) -> Result<()> {
    if !main.same_shape(target) {
        return Err(Error::Shape("soft update between differently shaped networks".into()));
    }
    for (t, m) in target.values_mut().zip(main.values()) {
        *t = tau * m + (1.0 - tau) * *t;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub critic_loss: f64,
    pub mean_q: f64,
}

/// Critic regression step, actor policy-gradient step, then target blending.
pub fn train_step(agent: &mut Agent, batch: &[Transition], config: &DdpgConfig) -> Result<StepDiagnostics> {
    if batch.is_empty() {
        return Err(Error::Empty("training batch".into()));
    }
    check_networks(&agent.actor, &agent.critic)?;
    let n = batch.len() as f64;
    let y = critic_targets(
        batch,
        &agent.target_actor,
        &agent.target_critic,
        config.discount,
        agent.u_max,
    )?;

    let actions: Vec<f64> = batch.iter().map(|t| t.action).collect();
    let input = critic_input(batch.iter().map(|t| t.obs), &actions, agent.u_max);
    let (q, cache) = agent.critic.forward(&input)?;
    let residual: Vec<f64> = q.iter().zip(&y).map(|(q, y)| q - y).collect();
    let critic_loss = residual.iter().map(|r| r * r).sum::<f64>() / n;
    let mean_q = q.iter().sum::<f64>() / n;
    let out_grad: Vec<f64> = residual.iter().map(|r| 2.0 * r / n).collect();
    let (grads, _) = agent.critic.backward(&cache, &out_grad)?;
    adam_update(&mut agent.critic, &grads, &mut agent.critic_opt)?;

    let obs: Vec<Features> = batch.iter().map(|t| t.obs).collect();
    let critic = CriticNet {
        net: &agent.critic,
        u_max: agent.u_max,
    };
    actor_step(&mut agent.actor, &mut agent.actor_opt, &obs, &critic)?;

    soft_update(&agent.critic, &mut agent.target_critic, config.tau)?;
    soft_update(&agent.actor, &mut agent.target_actor, config.tau)?;

    if !(critic_loss.is_finite() && mean_q.is_finite()) {
        return Err(Error::Numeric(format!(
            "critic loss {critic_loss}, mean Q {mean_q}"
        )));
    }
    Ok(StepDiagnostics { critic_loss, mean_q })
}

/// Policy action, plus optional exploration noise, clamped to the bound.
pub fn act(actor: &MlpParams, obs: &Features, noise: Option<f64>, u_max: f64) -> Result<f64> {
    let a = actor.predict(obs)?[0] + noise.unwrap_or(0.0);
    Ok(a.clamp(-u_max, u_max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub mean_critic_loss: f64,
    pub mean_q: f64,
    pub noise_sigma: f64,
}

pub struct TrainOutcome {
    pub agent: Agent,
    pub log: Vec<EpisodeLog>,
}

/// Training stopped early; carries the episodes completed before the failure.
#[derive(Debug, Error)]
#[error("training failed after {} episodes: {error}", log.len())]
pub struct TrainFailure {
    #[source]
    pub error: Error,
    pub log: Vec<EpisodeLog>,
}

/// Runs the full training loop. `on_episode` sees the agent after every
/// episode, e.g. to write checkpoints.
pub fn train<R, F>(
    env: &mut Environment,
    config: &DdpgConfig,
    rng: &mut R,
    mut on_episode: F,
) -> std::result::Result<TrainOutcome, TrainFailure>
where
    R: Rng + ?Sized,
    F: FnMut(&Agent, &EpisodeLog) -> Result<()>,
{
    let mut log = Vec::with_capacity(config.episodes);
    let fail = |error: Error, log: &Vec<EpisodeLog>| TrainFailure { error, log: log.clone() };

    let u_max = env.config().u_max;
    let stream = |rng: &mut R| ChaCha8Rng::seed_from_u64(rng.random());
    let mut init_rng = stream(rng);
    let mut reset_rng = stream(rng);
    let mut comfort_rng = stream(rng);
    let mut noise_rng = stream(rng);
    let mut replay_rng = stream(rng);

    let mut agent = Agent::new(config, u_max, &mut init_rng).map_err(|e| fail(e, &log))?;
    let mut buffer = ReplayBuffer::new(config.buffer_capacity).map_err(|e| fail(e, &log))?;
    let warmup = config.warmup_batches.saturating_mul(config.batch_size).max(1);
    let mut noise = OuNoise::new(config.noise_mu, config.noise_theta, config.noise_sigma_start);

    for episode in 0..config.episodes {
        noise.sigma = config.sigma_at(episode);
        noise.reset();
        let result = (|| -> Result<EpisodeLog> {
            let (_, mut obs) = env.reset(&mut reset_rng)?;
            let mut ret = 0.0;
            let (mut loss_sum, mut q_sum, mut updates) = (0.0, 0.0, 0usize);
            for _ in 0..config.steps_per_episode {
                let features = obs.features();
                let e = noise.step(&mut noise_rng);
                let a = act(&agent.actor, &features, Some(e), u_max)?;
                let step = env.step(a, &mut comfort_rng)?;
                ret += step.reward;
                buffer.push(Transition {
                    obs: features,
                    action: step.action,
                    reward: step.reward * config.reward_scale,
                    next_obs: step.observation.features(),
                });
                if buffer.len() >= warmup {
                    let batch = buffer.sample(config.batch_size, &mut replay_rng)?;
                    let d = train_step(&mut agent, &batch, config)?;
                    loss_sum += d.critic_loss;
                    q_sum += d.mean_q;
                    updates += 1;
                }
                obs = step.observation;
                if step.done {
                    break;
                }
            }
            let mean = |s: f64| if updates > 0 { s / updates as f64 } else { f64::NAN };
            Ok(EpisodeLog {
                episode,
                episode_return: ret,
                mean_critic_loss: mean(loss_sum),
                mean_q: mean(q_sum),
                noise_sigma: noise.sigma,
            })
        })();
        let entry = result.map_err(|e| fail(e, &log))?;
        log.push(entry);
        on_episode(&agent, &entry).map_err(|e| fail(e, &log))?;
    }
    Ok(TrainOutcome { agent, log })
}

pub const CHECKPOINT_FORMAT: &str = "hvac-rl-ddpg";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Actor and critic weights on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub u_max: f64,
    pub actor: MlpDocument,
    pub critic: MlpDocument,
}

impl Checkpoint {
    pub fn from_agent(agent: &Agent) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            u_max: agent.u_max,
            actor: agent.actor.to_document(),
            critic: agent.critic.to_document(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cp: Checkpoint = serde_json::from_str(&text)?;
        if cp.format != CHECKPOINT_FORMAT || cp.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "{}: expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION}, found {} v{}",
                path.display(),
                cp.format,
                cp.version
            )));
        }
        Ok(cp)
    }

    /// Actor and critic, shape-checked.
    pub fn networks(&self) -> Result<(MlpParams, MlpParams)> {
        let actor = MlpParams::from_document(self.actor.clone())?;
        let critic = MlpParams::from_document(self.critic.clone())?;
        check_networks(&actor, &critic)?;
        Ok((actor, critic))
    }
}

pub const LOG_HEADER: [&str; 5] = ["episode", "return", "mean_critic_loss", "mean_q", "noise_sigma"];

/// Writes the training log; the header is present even for zero episodes.
pub fn write_log_csv(log: &[EpisodeLog], path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| crate::weather::with_path(e, path))?;
    w.write_record(LOG_HEADER)?;
    for entry in log {
        w.serialize(entry)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
