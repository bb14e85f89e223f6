mod common;

use proptest::prelude::*;

use hvac_rl::thermal::{build_matrices, fixed_point, step, CircuitParams, Disturbance, ThermalState};

#[test]
fn default_matrices_match_exact_rational_values() {
    let m = build_matrices(&CircuitParams::default()).unwrap();
    let (worst, nonzero) = common::matrix_relative_error(&m);
    assert_eq!(nonzero, 10);
    assert!(worst <= 1e-12, "{worst:e}");
}

#[test]
fn long_rollouts_reach_the_fixed_point() {
    let m = build_matrices(&CircuitParams::default()).unwrap();
    for (u, w) in [
        (0.0, Disturbance { q_solar: 0.0, q_internal: 75.0, t_out: 30.0 }),
        (-800.0, Disturbance { q_solar: 600.0, q_internal: 145.0, t_out: 35.0 }),
        (400.0, Disturbance { q_solar: 0.0, q_internal: 75.0, t_out: 12.0 }),
    ] {
        // slowest mode decays by 0.99884 per step: 10,000 steps leave ~1e-4
        // of a 13 degree offset, 20,000 leave ~1e-9
        let mut x = ThermalState::new(22.0, 18.0);
        for _ in 0..20_000 {
            x = step(&x, u, &w, &m).unwrap();
        }
        let fp = fixed_point(u, &w, &m).unwrap();
        let direct = common::direct_equilibrium(&m, u, &w);
        assert!((x.t_air - fp.t_air).abs() < 1e-6 && (x.t_wall - fp.t_wall).abs() < 1e-6);
        assert!((fp.t_air - direct[0]).abs() < 1e-9 && (fp.t_wall - direct[1]).abs() < 1e-9);
    }
}

#[test]
fn error_decays_at_the_spectral_radius() {
    let m = build_matrices(&CircuitParams::default()).unwrap();
    let rho = m.spectral_radius();
    let w = Disturbance { q_solar: 0.0, q_internal: 75.0, t_out: 30.0 };
    let fp = fixed_point(0.0, &w, &m).unwrap();
    let err = |x: &ThermalState| (x.t_air - fp.t_air).abs().max((x.t_wall - fp.t_wall).abs());
    let mut x = ThermalState::new(20.0, 20.0);
    // let the fast mode die out first
    for _ in 0..200 {
        x = step(&x, 0.0, &w, &m).unwrap();
    }
    let e0 = err(&x);
    for _ in 0..1000 {
        x = step(&x, 0.0, &w, &m).unwrap();
    }
    let ratio = err(&x) / e0;
    assert!((ratio / rho.powi(1000) - 1.0).abs() < 1e-3, "{ratio} vs {}", rho.powi(1000));
}

fn temp() -> impl Strategy<Value = f64> {
    -10.0..50.0f64
}

fn disturbance() -> impl Strategy<Value = Disturbance> {
    (0.0..900.0f64, 0.0..200.0f64, temp()).prop_map(|(q_solar, q_internal, t_out)| Disturbance { q_solar, q_internal, t_out })
}

proptest! {
    #[test]
    fn step_is_linear_in_state_and_inputs(
        a in (temp(), temp()), b in (temp(), temp()),
        u1 in -1000.0..1000.0f64, u2 in -1000.0..1000.0f64,
        w1 in disturbance(), w2 in disturbance(),
    ) {
        let m = build_matrices(&CircuitParams::default()).unwrap();
        let x1 = ThermalState::new(a.0, a.1);
        let x2 = ThermalState::new(b.0, b.1);
        let sum_w = Disturbance {
            q_solar: w1.q_solar + w2.q_solar,
            q_internal: w1.q_internal + w2.q_internal,
            t_out: w1.t_out + w2.t_out,
        };
        let whole = step(&ThermalState::new(a.0 + b.0, a.1 + b.1), u1 + u2, &sum_w, &m).unwrap();
        let p1 = step(&x1, u1, &w1, &m).unwrap();
        let p2 = step(&x2, u2, &w2, &m).unwrap();
        prop_assert!((whole.t_air - p1.t_air - p2.t_air).abs() <= 1e-10 * whole.t_air.abs().max(1.0));
        prop_assert!((whole.t_wall - p1.t_wall - p2.t_wall).abs() <= 1e-10 * whole.t_wall.abs().max(1.0));
    }

    #[test]
    fn fixed_point_is_stationary(u in -1000.0..1000.0f64, w in disturbance()) {
        let m = build_matrices(&CircuitParams::default()).unwrap();
        let x = fixed_point(u, &w, &m).unwrap();
        let next = step(&x, u, &w, &m).unwrap();
        prop_assert!((next.t_air - x.t_air).abs() < 1e-9);
        prop_assert!((next.t_wall - x.t_wall).abs() < 1e-9);
    }

    #[test]
    fn heating_warms_the_air_node(x in (temp(), temp()), w in disturbance(), u in 1.0..1000.0f64) {
        let m = build_matrices(&CircuitParams::default()).unwrap();
        let x = ThermalState::new(x.0, x.1);
        let off = step(&x, 0.0, &w, &m).unwrap();
        let on = step(&x, u, &w, &m).unwrap();
        prop_assert!(on.t_air > off.t_air);
        prop_assert_eq!(on.t_wall, off.t_wall);
    }
}
