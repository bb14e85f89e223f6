//! Dense feedforward networks with hand-written reverse mode and Adam.
//!
//! Inputs and outputs are row-major batches: a batch of `n` samples of width
//! `d` is a flat slice of length `n * d`. Weight matrices are stored row-major
//! as `outputs x inputs`.

use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_NAME: &str = "hvac-rl-mlp";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    /// `scale * tanh(z)`, bounded by `scale`.
    ScaledTanh { scale: f64 },
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::ScaledTanh { scale } => scale * z.tanh(),
        }
    }

    /// Derivative at pre-activation `z`, given the activation output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::ScaledTanh { scale } => {
                let t = a / scale;
                scale * (1.0 - t * t)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn check(&self, index: usize) -> Result<()> {
        if self.inputs == 0 || self.outputs == 0 {
            return Err(Error::Shape(format!("layer {index} has a zero dimension")));
        }
        if self.weights.len() != self.inputs * self.outputs || self.bias.len() != self.outputs {
            return Err(Error::Shape(format!(
                "layer {index}: {}x{} needs {} weights and {} biases, got {} and {}",
                self.outputs,
                self.inputs,
                self.inputs * self.outputs,
                self.outputs,
                self.weights.len(),
                self.bias.len()
            )));
        }
        Ok(())
    }
}

/// A dense network: affine layers with `hidden` activations between them and
/// `output` on the last layer.
#[derive(Debug, Clone)]
pub struct MlpParams {
    layers: Vec<Layer>,
    hidden: Activation,
    output: Activation,
    // Tags forward caches; refreshed on every mutation.
    generation: u64,
}

impl PartialEq for MlpParams {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.hidden == other.hidden && self.output == other.output
    }
}

fn next_generation() -> u64 {
    static COUNTER: AtomicU64 = AtomicU64::new(1);
    COUNTER.fetch_add(1, Ordering::Relaxed)
}

/// Values saved by [`MlpParams::forward`] for the matching backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    batch: usize,
    /// Input to each layer, then the network output.
    activations: Vec<Vec<f64>>,
    pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Parameter gradients laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(p: &MlpParams) -> Self {
        Self {
            layers: p.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= factor);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values().all(|g| g == 0.0)
    }
}

impl MlpParams {
    /// Uniform fan-in initialisation, `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        Self::init_with_final_bound(sizes, hidden, output, None, rng)
    }

    /// Like [`MlpParams::init`], optionally drawing the last layer's weights
    /// from `[-bound, bound]` instead.
    pub fn init_with_final_bound<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        final_bound: Option<f64>,
        rng: &mut R,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::Shape(format!(
                "need input and output sizes, got {sizes:?}"
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::Shape(format!("layer sizes must be positive, got {sizes:?}")));
        }
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(idx, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = match final_bound {
                    Some(b) if idx == n - 1 => b,
                    _ => 1.0 / (fan_in as f64).sqrt(),
                };
                let weights = (0..fan_in * fan_out)
                    .map(|_| if bound > 0.0 { rng.random_range(-bound..=bound) } else { 0.0 })
                    .collect();
                Layer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights,
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        Self::from_layers(layers, hidden, output)
    }

    pub fn from_layers(layers: Vec<Layer>, hidden: Activation, output: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            l.check(i)?;
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Shape(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    pair[0].outputs,
                    i + 1,
                    pair[1].inputs
                )));
            }
        }
        let p = Self {
            layers,
            hidden,
            output,
            generation: next_generation(),
        };
        p.check_finite()?;
        Ok(p)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// Layer widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    /// Mutable access to every parameter. Invalidates outstanding caches.
    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.generation = next_generation();
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn same_shape(&self, other: &MlpParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs)
    }

    fn check_finite(&self) -> Result<()> {
        if self.values().all(f64::is_finite) {
            Ok(())
        } else {
            Err(Error::NonFinite("network parameters".into()))
        }
    }

    fn activation_for(&self, layer: usize) -> Activation {
        if layer + 1 == self.layers.len() {
            self.output
        } else {
            self.hidden
        }
    }

    /// Evaluates a batch, returning the outputs and the cache for [`MlpParams::backward`].
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let d = self.input_dim();
        if input.is_empty() || !input.len().is_multiple_of(d) {
            return Err(Error::Shape(format!(
                "input of length {} is not a batch of width {d}",
                input.len()
            )));
        }
        if !input.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        let batch = input.len() / d;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        activations.push(input.to_vec());

        for (idx, layer) in self.layers.iter().enumerate() {
            let act = self.activation_for(idx);
            let x = &activations[idx];
            let mut z = vec![0.0; batch * layer.outputs];
            for b in 0..batch {
                let xb = &x[b * layer.inputs..(b + 1) * layer.inputs];
                let zb = &mut z[b * layer.outputs..(b + 1) * layer.outputs];
                for (o, zo) in zb.iter_mut().enumerate() {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    *zo = layer.bias[o] + row.iter().zip(xb).map(|(w, v)| w * v).sum::<f64>();
                }
            }
            let a: Vec<f64> = z.iter().map(|&v| act.apply(v)).collect();
            pre_activations.push(z);
            activations.push(a);
        }

        let out = activations[self.layers.len()].clone();
        if !out.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("network output".into()));
        }
        Ok((
            out,
            ForwardCache {
                generation: self.generation,
                batch,
                activations,
                pre_activations,
            },
        ))
    }

    /// Output only.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.0)
    }

    /// Reverse pass: parameter gradients (summed over the batch) and the
    /// gradient with respect to the input batch.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &[f64]) -> Result<(Gradients, Vec<f64>)> {
        if cache.generation != self.generation
            || cache.activations.len() != self.layers.len() + 1
            || cache.activations[0].len() != cache.batch * self.input_dim()
        {
            return Err(Error::Shape("forward cache does not belong to these parameters".into()));
        }
        if output_grad.len() != cache.batch * self.output_dim() {
            return Err(Error::Shape(format!(
                "output gradient has length {}, expected {}",
                output_grad.len(),
                cache.batch * self.output_dim()
            )));
        }
        if !output_grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("output gradient".into()));
        }

        let batch = cache.batch;
        let mut grads = Gradients::zeros_like(self);
        let mut upstream = output_grad.to_vec();

        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let act = self.activation_for(idx);
            let z = &cache.pre_activations[idx];
            let a = &cache.activations[idx + 1];
            let x = &cache.activations[idx];

            let delta: Vec<f64> = upstream
                .iter()
                .zip(z.iter().zip(a))
                .map(|(g, (&zv, &av))| g * act.derivative(zv, av))
                .collect();

            let lg = &mut grads.layers[idx];
            let mut down = vec![0.0; batch * layer.inputs];
            for b in 0..batch {
                let xb = &x[b * layer.inputs..(b + 1) * layer.inputs];
                let db = &mut down[b * layer.inputs..(b + 1) * layer.inputs];
                for o in 0..layer.outputs {
                    let d = delta[b * layer.outputs + o];
                    if d == 0.0 {
                        continue;
                    }
                    lg.bias[o] += d;
                    let row = o * layer.inputs..(o + 1) * layer.inputs;
                    for ((gw, w), (xv, dv)) in lg.weights[row.clone()]
                        .iter_mut()
                        .zip(&layer.weights[row])
                        .zip(xb.iter().zip(db.iter_mut()))
                    {
                        *gw += d * xv;
                        *dv += d * w;
                    }
                }
            }
            upstream = down;
        }

        if !grads.values().all(f64::is_finite) || !upstream.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFinite("gradients".into()));
        }
        Ok((grads, upstream))
    }

    pub fn to_document(&self) -> MlpDocument {
        MlpDocument {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            hidden_activation: self.hidden,
            output_activation: self.output,
            layers: self.layers.clone(),
        }
    }

    pub fn from_document(doc: MlpDocument) -> Result<Self> {
        if doc.format != FORMAT_NAME || doc.version != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "expected {FORMAT_NAME} v{FORMAT_VERSION}, found {} v{}",
                doc.format, doc.version
            )));
        }
        Self::from_layers(doc.layers, doc.hidden_activation, doc.output_activation)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_document())?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_document(serde_json::from_str(&text)?)
    }
}

/// On-disk form of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpDocument {
    pub format: String,
    pub version: u32,
    pub hidden_activation: Activation,
    pub output_activation: Activation,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(p: &MlpParams, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; p.num_params()],
            v: vec![0.0; p.num_params()],
        }
    }
}

/// One bias-corrected Adam descent step along `grads`.
pub fn adam_update(p: &mut MlpParams, grads: &Gradients, st: &mut AdamState) -> Result<()> {
    let n = p.num_params();
    if st.m.len() != n
        || grads.layers.len() != p.layers.len()
        || grads
            .layers
            .iter()
            .zip(&p.layers)
            .any(|(g, l)| g.weights.len() != l.weights.len() || g.bias.len() != l.bias.len())
    {
        return Err(Error::Shape("optimizer state or gradients do not match the network".into()));
    }
    if !grads.values().all(f64::is_finite) {
        return Err(Error::NonFinite("gradients passed to Adam".into()));
    }

    st.step += 1;
    let t = st.step as i32;
    let c1 = 1.0 - st.beta1.powi(t);
    let c2 = 1.0 - st.beta2.powi(t);
    let (b1, b2, lr, eps) = (st.beta1, st.beta2, st.lr, st.eps);

    for (((w, g), m), v) in p
        .values_mut()
        .zip(grads.values())
        .zip(st.m.iter_mut())
        .zip(st.v.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    p.check_finite()
}
