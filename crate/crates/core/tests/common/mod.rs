//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;

use hvac_rl::baseline::GreedyParams;
use hvac_rl::neural::{Activation, MlpParams};
use hvac_rl::thermal::{Disturbance, StateMatrices, ThermalState};

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact entries of A, B and D for the default circuit, in row-major order
/// `(name, value)`, computed in rational arithmetic from the decimal constants.
pub fn exact_default_matrices() -> Vec<(&'static str, BigRational)> {
    let r1 = ratio(84197, 10_000_000);
    let r2 = ratio(44014, 1_000_000);
    let r3 = ratio(438, 100);
    let c1 = ratio(9_861_100, 1);
    let c2 = ratio(128_560, 1);
    let a = ratio(55, 100);
    let dt = ratio(600, 1);
    let one = ratio(1, 1);
    vec![
        ("A11", &one - &dt / (&c2 * &r2) - &dt / (&c2 * &r1)),
        ("A12", &dt / (&c2 * &r1)),
        ("A21", &dt / (&c1 * &r1)),
        ("A22", &one - &dt / (&c1 * &r3) - &dt / (&c1 * &r1)),
        ("B1", &dt / &c2),
        ("B2", ratio(0, 1)),
        ("D11", &dt * (&one - &a) / &c2),
        ("D12", &dt / &c2),
        ("D13", &dt / (&c2 * &r2)),
        ("D21", &dt * &a / &c1),
        ("D22", ratio(0, 1)),
        ("D23", &dt / (&c1 * &r3)),
    ]
}

pub fn computed_entries(m: &StateMatrices) -> Vec<f64> {
    vec![
        m.a_mat[0][0],
        m.a_mat[0][1],
        m.a_mat[1][0],
        m.a_mat[1][1],
        m.b_vec[0],
        m.b_vec[1],
        m.d_mat[0][0],
        m.d_mat[0][1],
        m.d_mat[0][2],
        m.d_mat[1][0],
        m.d_mat[1][1],
        m.d_mat[1][2],
    ]
}

/// Largest relative error of the computed matrices against the exact ones,
/// plus the number of exact nonzero entries compared. Zero entries must be
/// exactly zero, otherwise the error is infinite.
pub fn matrix_relative_error(m: &StateMatrices) -> (f64, usize) {
    let mut worst: f64 = 0.0;
    let mut nonzero = 0;
    for ((_, exact), got) in exact_default_matrices().into_iter().zip(computed_entries(m)) {
        if exact.is_zero() {
            if got != 0.0 {
                return (f64::INFINITY, nonzero);
            }
            continue;
        }
        nonzero += 1;
        let got = BigRational::from_float(got).expect("finite entry");
        let rel = ((got - &exact) / &exact).abs();
        worst = worst.max(rel.to_f64().unwrap());
    }
    (worst, nonzero)
}

/// Equilibrium of `x = A x + B u + D w` by Cramer's rule.
pub fn direct_equilibrium(m: &StateMatrices, u: f64, w: &Disturbance) -> [f64; 2] {
    let ws = w.as_array();
    let rhs: Vec<f64> = (0..2)
        .map(|i| m.b_vec[i] * u + (0..3).map(|j| m.d_mat[i][j] * ws[j]).sum::<f64>())
        .collect();
    let (a, b, c, d) = (1.0 - m.a_mat[0][0], -m.a_mat[0][1], -m.a_mat[1][0], 1.0 - m.a_mat[1][1]);
    let det = a * d - b * c;
    [(rhs[0] * d - b * rhs[1]) / det, (a * rhs[1] - c * rhs[0]) / det]
}

/// One-step greedy objective evaluated directly from the matrices.
pub fn greedy_objective(u: f64, x: &ThermalState, w: &Disturbance, m: &StateMatrices, p: &GreedyParams) -> f64 {
    let ws = w.as_array();
    let next = m.a_mat[0][0] * x.t_air
        + m.a_mat[0][1] * x.t_wall
        + m.b_vec[0] * u
        + m.d_mat[0][0] * ws[0]
        + m.d_mat[0][1] * ws[1]
        + m.d_mat[0][2] * ws[2];
    p.tracking_weight * (next - p.target).powi(2) + p.energy_weight * u * u
}

/// Exhaustive argmin of the greedy objective over `[-bound, bound]` in steps
/// of `grid`.
pub fn greedy_grid_search(x: &ThermalState, w: &Disturbance, m: &StateMatrices, p: &GreedyParams, grid: f64) -> f64 {
    let n = (2.0 * p.bound / grid).round() as i64;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let u = -p.bound + grid * i as f64;
        let j = greedy_objective(u, x, w, m, p);
        if j < best.0 {
            best = (j, u);
        }
    }
    best.1
}

pub fn random_activation<R: Rng>(rng: &mut R) -> Activation {
    match rng.random_range(0..4) {
        0 => Activation::Identity,
        1 => Activation::Relu,
        2 => Activation::Tanh,
        _ => Activation::ScaledTanh { scale: rng.random_range(0.5..3.0) },
    }
}

/// A random network with 1 to 3 layers and widths up to 16. Biases are
/// random too: with zero biases a dead ReLU layer puts the next layer's
/// pre-activations exactly on the kink, where no derivative exists.
pub fn random_network<R: Rng>(rng: &mut R) -> MlpParams {
    let layers = rng.random_range(1..=3);
    let sizes: Vec<usize> = (0..=layers).map(|_| rng.random_range(1..=16)).collect();
    let hidden = random_activation(rng);
    let output = random_activation(rng);
    let mut net = MlpParams::init(&sizes, hidden, output, rng).unwrap();
    for v in net.values_mut() {
        if *v == 0.0 {
            *v = rng.random_range(-0.5..0.5);
        }
    }
    net
}

fn activate(act: Activation, z: f64) -> f64 {
    match act {
        Activation::Identity => z,
        Activation::Relu => z.max(0.0),
        Activation::Tanh => z.tanh(),
        Activation::ScaledTanh { scale } => scale * z.tanh(),
    }
}

/// Smallest |pre-activation| feeding a ReLU anywhere in the network for
/// this batch, computed independently of the library's forward pass.
pub fn relu_margin(net: &MlpParams, input: &[f64]) -> f64 {
    let n = net.layers().len();
    let batch = input.len() / net.input_dim();
    let mut margin = f64::INFINITY;
    for b in 0..batch {
        let mut a = input[b * net.input_dim()..(b + 1) * net.input_dim()].to_vec();
        for (li, layer) in net.layers().iter().enumerate() {
            let act = if li + 1 == n { net.output_activation() } else { net.hidden_activation() };
            let z: Vec<f64> = (0..layer.outputs)
                .map(|o| layer.bias[o] + (0..layer.inputs).map(|i| layer.weights[o * layer.inputs + i] * a[i]).sum::<f64>())
                .collect();
            if act == Activation::Relu {
                margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            }
            a = z.iter().map(|&v| activate(act, v)).collect();
        }
    }
    margin
}

fn weighted_output(net: &MlpParams, input: &[f64], weights: &[f64]) -> f64 {
    net.predict(input).unwrap().iter().zip(weights).map(|(y, c)| y * c).sum()
}

/// Relative error used by the gradient checks. Entries where both values are
/// below `floor` are compared absolutely against it.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Distance from a ReLU kink below which finite differences are not trusted.
pub const KINK_MARGIN: f64 = 1e-3;

/// Central-difference check of parameter and input gradients for the scalar
/// `sum(c * f(x))` over a random batch. Returns the largest relative error.
pub fn gradient_check<R: Rng>(net: &MlpParams, rng: &mut R, h: f64) -> f64 {
    // Central differences straddling a ReLU kink measure half a slope, so the
    // batch is redrawn until every ReLU input is well clear of zero.
    let input = (0..1000)
        .map(|_| {
            let batch = rng.random_range(1..=4);
            (0..batch * net.input_dim()).map(|_| rng.random_range(-2.0..2.0)).collect::<Vec<f64>>()
        })
        .find(|x| relu_margin(net, x) >= KINK_MARGIN)
        .expect("no batch clear of ReLU kinks");
    let batch = input.len() / net.input_dim();
    let c: Vec<f64> = (0..batch * net.output_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();

    let (_, cache) = net.forward(&input).unwrap();
    let (grads, input_grad) = net.backward(&cache, &c).unwrap();
    let analytic: Vec<f64> = grads.values().collect();

    let floor = 1e-6;
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = net.clone();
        let mut minus = net.clone();
        *plus.values_mut().nth(i).unwrap() += h;
        *minus.values_mut().nth(i).unwrap() -= h;
        let numeric = (weighted_output(&plus, &input, &c) - weighted_output(&minus, &input, &c)) / (2.0 * h);
        worst = worst.max(relative_error(a, numeric, floor));
    }
    for (i, &a) in input_grad.iter().enumerate() {
        let mut plus = input.clone();
        let mut minus = input.clone();
        plus[i] += h;
        minus[i] -= h;
        let numeric = (weighted_output(net, &plus, &c) - weighted_output(net, &minus, &c)) / (2.0 * h);
        worst = worst.max(relative_error(a, numeric, floor));
    }
    worst
}
