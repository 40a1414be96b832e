//! Quadrature, weighted division and the weighted norms against exact integrals.

use vacuum_euler::norms::{norm_equivalence_ratio, space_norm, zeroth_energy};
use vacuum_euler::{make_grid, Field, OperatorStack, Side, State};

fn ratio_near_four(e: [f64; 3], what: &str) {
    for r in [e[0] / e[1], e[1] / e[2]] {
        assert!((3.5..=4.5).contains(&r), "{what}: errors {e:?}");
    }
}

#[test]
fn weights_integrate_constants_exactly() {
    for p in [1.0, 2.0, 3.0] {
        let g = make_grid(100, p).unwrap();
        for side in [Side::X, Side::Y] {
            let one = Field::sample(&g, side, |_| 1.0, 0.0);
            assert!((one.inner(&one).unwrap() - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn inner_of_xi_with_xi_is_a_third() {
    let e = [64, 128, 256].map(|n| {
        let g = make_grid(n, 1.0).unwrap();
        let f = Field::sample(&g, Side::X, |x| x, 1.0);
        (f.inner(&f).unwrap() - 1.0 / 3.0).abs()
    });
    assert!(e[2] < 1e-5);
    ratio_near_four(e, "<xi, xi>");
}

#[test]
fn divided_field_norm() {
    // || xi^(3/2) / xi || = || xi^(1/2) || = 1/sqrt 2
    let e = [64, 128, 256].map(|n| {
        let g = make_grid(n, 1.0).unwrap();
        let f = Field::sample(&g, Side::Y, |x| x.powf(1.5), 1.5).divide_by_xi_pow(1.0, false).unwrap();
        (f.norm() - 0.5f64.sqrt()).abs()
    });
    ratio_near_four(e, "||xi^(1/2)||");
}

#[test]
fn weighted_division_round_trip_and_refusal() {
    let g = make_grid(64, 2.0).unwrap();
    let f = Field::sample(&g, Side::X, |x| 1.0 + x.sin(), 0.0);
    let back = f.multiply_by_xi_pow(2.5).divide_by_xi_pow(2.5, false).unwrap();
    for (a, b) in back.values.iter().zip(&f.values) {
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs());
    }
    assert!(f.divide_by_xi_pow(1.0, false).is_err());
    assert!(f.divide_by_xi_pow(1.0, true).is_ok());
}

#[test]
fn smallest_node_scales_with_the_grading() {
    for p in [1.0, 2.0, 3.0] {
        let h: Vec<f64> = [64, 128, 256].iter().map(|&n| make_grid(n, p).unwrap().h_min()).collect();
        for w in h.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - p).abs() < 0.05, "grading {p}: observed {order}");
        }
    }
}

#[test]
fn first_order_norm_of_xi_squared() {
    // k = 1, phi = xi, f = xi^2: ||f||^2 + ||V f||^2 = 1/5 + ||3 xi||^2 = 1/5 + 3 = 3.2
    let e = [64, 128, 256].map(|n| {
        let g = make_grid(n, 1.0).unwrap();
        let stack = OperatorStack::homogeneous(&g, 1.0).unwrap();
        let f = Field::sample(&g, Side::X, |x| x * x, 2.0);
        (space_norm(&stack, 1, &f).unwrap().powi(2) - 3.2).abs()
    });
    ratio_near_four(e, "X^(1,1) norm");
}

#[test]
fn zeroth_energy_at_rest() {
    // u = 0, phi = xi, k = 1: (1/3) ||xi phi||^2 = (1/3) int xi^4 = 1/15
    let e = [64, 128, 256].map(|n| {
        let g = make_grid(n, 1.0).unwrap();
        let st = State::from_fns(&g, |_| 1.0, |_| 0.0).unwrap();
        (zeroth_energy(&st, 1.0) - 1.0 / 15.0).abs()
    });
    ratio_near_four(e, "zeroth energy");
}

#[test]
fn norm_equivalence_is_one_for_the_homogeneous_profile() {
    let g = make_grid(128, 2.0).unwrap();
    let stack = OperatorStack::homogeneous(&g, 1.0).unwrap();
    let f = Field::sample(&g, Side::X, |x| x * (1.0 + 0.5 * x) * (1.0 - x * x), 1.0);
    let (r, inv) = norm_equivalence_ratio(&stack, &f, 3).unwrap();
    assert!((r - 1.0).abs() < 1e-12 && (inv - 1.0).abs() < 1e-12);
}

#[test]
fn norm_equivalence_is_bounded_by_the_profile() {
    // at order 0 both are the plain L2 norm; from order 1 the profile enters
    let g = make_grid(128, 2.0).unwrap();
    let psi = Field::sample(&g, Side::X, |x| 1.0 + 0.5 * x * x, 0.0);
    let stack = OperatorStack::new(&psi, 1.0).unwrap();
    let f = Field::sample(&g, Side::X, |x| x * (1.0 - x * x), 1.0);
    let (r0, _) = norm_equivalence_ratio(&stack, &f, 0).unwrap();
    assert!((r0 - 1.0).abs() < 1e-14);
    let (r1, inv1) = norm_equivalence_ratio(&stack, &f, 1).unwrap();
    assert!((r1 - 1.0).abs() > 1e-3 && (r1 * inv1 - 1.0).abs() < 1e-14);
}
