//! Coordinate transforms against closed forms.

use vacuum_euler::coords::{eulerian_reconstruct, lagrangian_of_eulerian, phi_of_rho, rho_of_phi, xi_of_y, y_of_xi};
use vacuum_euler::{make_grid, EulerianProfile, Params};

#[test]
fn gamma_three_with_a_third_makes_phi_the_density() {
    // 2 sqrt(A gamma)/(gamma - 1) = 2 sqrt(1)/2 = 1 and (gamma - 1)/2 = 1
    let p = Params::new(3.0, 1.0 / 3.0, 1.0).unwrap();
    for r in [0.0, 0.25, 1.0, 7.5] {
        assert!((phi_of_rho(r, &p).unwrap() - r).abs() < 1e-15);
        assert!((rho_of_phi(r, &p).unwrap() - r).abs() < 1e-14);
    }
}

#[test]
fn quarter_mass_point_by_bisection() {
    let p = Params::new(3.0, 1.0, 2.0).unwrap();
    let target = p.total_mass / 4.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if y_of_xi(mid, &p).unwrap() < target { lo = mid } else { hi = mid }
    }
    let xi = xi_of_y(target, &p).unwrap();
    assert!((xi - lo).abs() < 1e-14);
    assert!((xi - 0.25f64.powf(1.0 / 3.0)).abs() < 1e-15);
    assert!((xi - 0.62996).abs() < 1e-5);
}

#[test]
fn out_of_range_coordinates_are_rejected() {
    let p = Params::new(2.0, 1.0, 1.0).unwrap();
    assert!(xi_of_y(1.5, &p).is_err());
    assert!(y_of_xi(-0.1, &p).is_err());
    assert!(Params::new(1.0, 1.0, 1.0).is_err());
}

/// `rho = sqrt(x)` on `[0, 1]` with gamma = 3, A = 1/3: `y = (2/3) x^(3/2)`, so
/// `xi = sqrt(x)` and `phi = rho = xi`, i.e. `phi/xi` is constant.
fn sqrt_profile(cells: usize) -> (EulerianProfile, Params) {
    let p = Params::new(3.0, 1.0 / 3.0, 2.0 / 3.0).unwrap();
    (EulerianProfile::from_fn(0.0, 1.0, cells, f64::sqrt, |x| 0.1 * (1.0 - x)), p)
}

#[test]
fn square_root_density_has_constant_phi_over_xi() {
    let (prof, p) = sqrt_profile(400);
    let g = make_grid(128, 2.0).unwrap();
    let st = lagrangian_of_eulerian(&prof, &p, &g).unwrap();
    let sigma = p.state_scale();
    for v in &st.psi.values {
        assert!((v / sigma - 1.0).abs() < 1e-6, "phi/xi = {}", v / sigma);
    }
    // the velocity lands at x = xi^2
    for (x, v) in st.u.nodes().iter().zip(&st.u.values) {
        assert!((v / sigma - 0.1 * (1.0 - x * x)).abs() < 1e-4);
    }
}

#[test]
fn round_trip_error_is_second_order() {
    let e = [32, 64, 128].map(|n| {
        let (prof, p) = sqrt_profile(4 * n);
        let g = make_grid(n, 2.0).unwrap();
        let st = lagrangian_of_eulerian(&prof, &p, &g).unwrap();
        let back = eulerian_reconstruct(&st, 0.0, &p).unwrap();
        assert!((back.mass(&p) - p.total_mass).abs() < 1e-12);
        back.x_nodes.iter().zip(&back.u).skip(1).map(|(x, u)| (u - 0.1 * (1.0 - x)).abs()).fold(0.0, f64::max)
    });
    for r in [e[0] / e[1], e[1] / e[2]] {
        assert!(r > 3.5, "round-trip errors {e:?}");
    }
}

#[test]
fn inadmissible_profiles_are_rejected() {
    let p = Params::new(3.0, 1.0 / 3.0, 2.0 / 3.0).unwrap();
    // density jumps at the vacuum point
    let jump = EulerianProfile::from_fn(0.0, 1.0, 50, |x| 1.0 + x, |_| 0.0);
    assert!(jump.check_admissible(&p).is_err());
    // rho^(gamma-1) = x^(1/2): infinite slope at the vacuum point
    let steep = EulerianProfile::from_fn(0.0, 1.0, 50, |x| x.powf(0.25), |_| 0.0);
    assert!(steep.check_admissible(&p).is_err());
}
