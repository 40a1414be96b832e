//! The page's three operations, called natively.

use vacuum_euler_web::{operator_view, picard_view, simulate_view};

#[test]
fn simulation_view_is_consistent() {
    let v = simulate_view("gamma3", 0.1, 64, 0.1).unwrap();
    assert!(v.completed && (v.t_star - 0.1).abs() < 1e-12);
    assert_eq!(v.series.first().unwrap().t, 0.0);
    assert_eq!(v.series.first().unwrap().energy_ratio, 1.0);
    assert!(v.series.iter().all(|p| p.zeroth_drift.abs() < 1e-8 && p.energy_ratio <= 2.0));
    assert_eq!(v.xi.len(), 64);
    // Eulerian profile: vacuum at the left end, increasing positions
    assert_eq!(v.rho[0], 0.0);
    assert!(v.x.windows(2).all(|w| w[1] > w[0]));
    assert!(serde_json::to_string(&v).unwrap().contains("\"t_star\""));
}

#[test]
fn operator_view_pairs_exactly() {
    let v = operator_view("gamma4", 96, 7).unwrap();
    assert!(v.relative_residual < 1e-12);
    assert_eq!(v.f.len(), v.vstar_g.len());
    let again = operator_view("gamma4", 96, 7).unwrap();
    assert_eq!(v.pairing, again.pairing);
    assert_ne!(operator_view("gamma4", 96, 8).unwrap().pairing, v.pairing);
}

#[test]
fn picard_view_contracts_on_a_short_horizon() {
    let v = picard_view("gamma3", 64, 0.02, 8).unwrap();
    assert!(v.error.is_none());
    assert_eq!(v.diffs.len(), 8);
    assert!(v.pass, "{v:?}");
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(simulate_view("gamma3", 0.1, 4, 0.1).is_err());
    assert!(simulate_view("gamma8", 0.1, 64, 0.1).is_err());
    assert!(simulate_view("gamma3", 0.1, 64, -1.0).is_err());
    assert!(picard_view("gamma3", 64, 0.0, 5).is_err());
}
