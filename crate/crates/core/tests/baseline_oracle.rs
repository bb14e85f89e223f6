mod common;

use proptest::prelude::*;

use hvac_rl::baseline::{greedy_action, GreedyParams};
use hvac_rl::thermal::{build_matrices, CircuitParams, Disturbance, ThermalState};

fn inputs() -> impl Strategy<Value = (ThermalState, Disturbance)> {
    (10.0..40.0f64, 10.0..40.0f64, 0.0..900.0f64, prop::bool::ANY, 10.0..40.0f64).prop_map(|(ta, tw, qs, occ, to)| {
        let w = Disturbance { q_solar: qs, q_internal: if occ { 145.0 } else { 75.0 }, t_out: to };
        (ThermalState::new(ta, tw), w)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_grid_search((x, w) in inputs()) {
        let m = build_matrices(&CircuitParams::default()).unwrap();
        let p = GreedyParams::default();
        let u = greedy_action(&x, &w, true, &m, &p).unwrap();
        let grid = common::greedy_grid_search(&x, &w, &m, &p, 0.01);
        prop_assert!((u - grid).abs() <= 0.01 + 1e-9, "{} vs {}", u, grid);
    }

    #[test]
    fn common_weight_scaling_is_invariant((x, w) in inputs(), c in 1e-3..1e3f64) {
        let m = build_matrices(&CircuitParams::default()).unwrap();
        let p = GreedyParams::default();
        let scaled = GreedyParams { tracking_weight: p.tracking_weight * c, energy_weight: p.energy_weight * c, ..p };
        let a = greedy_action(&x, &w, true, &m, &p).unwrap();
        let b = greedy_action(&x, &w, true, &m, &scaled).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn never_acts_when_unoccupied((x, w) in inputs()) {
        let m = build_matrices(&CircuitParams::default()).unwrap();
        prop_assert_eq!(greedy_action(&x, &w, false, &m, &GreedyParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn beats_every_grid_neighbour((x, w) in inputs(), du in -50.0..50.0f64) {
        let m = build_matrices(&CircuitParams::default()).unwrap();
        let p = GreedyParams::default();
        let u = greedy_action(&x, &w, true, &m, &p).unwrap();
        let other = (u + du).clamp(-p.bound, p.bound);
        prop_assert!(common::greedy_objective(u, &x, &w, &m, &p) <= common::greedy_objective(other, &x, &w, &m, &p) + 1e-12);
    }
}
