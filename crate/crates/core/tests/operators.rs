//! Operator values against hand-computed closed forms, with refinement ratios for the
//! discretisation error.

use proptest::prelude::*;
use vacuum_euler::operators::{apply_vbar, apply_vbar_star};
use vacuum_euler::{make_grid, make_vacuum_grid, Field, Op, OperatorStack, Side};

const KS: [f64; 4] = [1.0, 2.0, 1.5, 5.0 / 6.0];

/// Max-norm error over nodes with `xi >= from`.
fn err_on(f: &Field, exact: impl Fn(f64) -> f64, from: f64) -> f64 {
    f.nodes().iter().zip(&f.values).filter(|(x, _)| **x >= from).map(|(x, v)| (v - exact(*x)).abs()).fold(0.0, f64::max)
}

/// Errors at `n = 64, 128, 256`.
fn errors(err: impl FnMut(usize) -> f64) -> Vec<f64> {
    [64, 128, 256].into_iter().map(err).collect()
}

/// Either exact to round-off at every `n`, or second order with ratios near 4.
fn second_order(e: Vec<f64>, what: &str) {
    if e.iter().all(|v| *v < 1e-12) {
        return;
    }
    let r = [e[0] / e[1], e[1] / e[2]];
    for x in r {
        assert!((3.5..=4.5).contains(&x), "{what}: errors {e:?}, refinement ratios {r:?}");
    }
}

/// Where the max-norm error is measured: `xi^k` has a singular derivative at 0 for `k < 1`.
fn from(k: f64) -> f64 {
    if k >= 1.0 { 0.0 } else { 0.1 }
}

#[test]
fn vbar_of_xi_is_k_plus_one() {
    // xi^-k d/dxi xi^(k+1) = k + 1
    for k in KS {
        let r = errors(|n| {
            let g = make_grid(n, 1.0).unwrap();
            let out = apply_vbar(&g, k, &Field::sample(&g, Side::X, |x| x, 1.0)).unwrap();
            err_on(&out, |_| k + 1.0, 0.1)
        });
        second_order(r, &format!("vbar(xi), k = {k}"));
    }
}

#[test]
fn v_with_phi_equal_xi() {
    // phi = xi: V(xi^(k+1)) = xi^-k d/dxi xi^(2k+1) = (2k+1) xi^k
    for k in KS {
        let r = errors(|n| {
            let g = make_vacuum_grid(n, 2.0, k).unwrap();
            let stack = OperatorStack::homogeneous(&g, k).unwrap();
            let out = stack.v(&Field::sample(&g, Side::X, |x| x.powf(k + 1.0), k + 1.0)).unwrap();
            err_on(&out, |x| (2.0 * k + 1.0) * x.powf(k), from(k))
        });
        second_order(r, &format!("V(xi^(k+1)), k = {k}"));
    }
}

#[test]
fn vstar_with_phi_equal_xi() {
    // g = xi^k (1 - xi): -xi^k d/dxi (1 - xi) = xi^k, for V* and for vbar*
    for k in KS {
        // the centred difference of a line is exact
        for n in [64, 256] {
            let g = make_vacuum_grid(n, 2.0, k).unwrap();
            let stack = OperatorStack::homogeneous(&g, k).unwrap();
            let out = stack.vstar(&Field::sample(&g, Side::Y, |x| x.powf(k) * (1.0 - x), k)).unwrap();
            assert!(err_on(&out, |x| x.powf(k), 0.0) < 1e-12);
        }
        let g = make_grid(128, 2.0).unwrap();
        let gy = Field::sample(&g, Side::Y, |x| x.powf(k) * (1.0 - x), k);
        let a = apply_vbar_star(&g, k, &gy).unwrap();
        let b = OperatorStack::homogeneous(&g, k).unwrap().vstar(&gy).unwrap();
        assert!(a.values.iter().zip(&b.values).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0)));
    }
}

fn phi_profile(x: f64) -> f64 {
    x * (1.2 - 0.3 * x * x)
}

fn dphi_profile(x: f64) -> f64 {
    1.2 - 0.9 * x * x
}

#[test]
fn v_of_weighted_phi_general_profile() {
    // V(xi^k phi) = xi^-k d/dxi phi^(2k+1) = (2k+1) phi^(2k) xi^-k phi'
    for k in [1.0, 2.0] {
        let r = errors(|n| {
            let g = make_vacuum_grid(n, 2.0, k).unwrap();
            let psi = Field::sample(&g, Side::X, |x| phi_profile(x) / x, 0.0);
            let stack = OperatorStack::new(&psi, k).unwrap();
            let out = stack.v(&Field::sample(&g, Side::X, |x| x.powf(k) * phi_profile(x), k + 1.0)).unwrap();
            err_on(&out, |x| (2.0 * k + 1.0) * phi_profile(x).powf(2.0 * k) * x.powf(-k) * dphi_profile(x), 0.0)
        });
        second_order(r, &format!("V(xi^k phi), k = {k}"));
    }
}

#[test]
fn vstar_of_weighted_velocity() {
    // V*(xi^k u) = -(phi^(2k)/xi^k) u'
    let u = |x: f64| (std::f64::consts::FRAC_PI_2 * x).cos();
    let du = |x: f64| -std::f64::consts::FRAC_PI_2 * (std::f64::consts::FRAC_PI_2 * x).sin();
    for k in [1.0, 2.0] {
        let r = errors(|n| {
            let g = make_vacuum_grid(n, 2.0, k).unwrap();
            let psi = Field::sample(&g, Side::X, |x| phi_profile(x) / x, 0.0);
            let stack = OperatorStack::new(&psi, k).unwrap();
            let out = stack.vstar(&Field::sample(&g, Side::Y, |x| x.powf(k) * u(x), k)).unwrap();
            err_on(&out, |x| -phi_profile(x).powf(2.0 * k) * x.powf(-k) * du(x), 0.0)
        });
        second_order(r, &format!("V*(xi^k u), k = {k}"));
    }
}

#[test]
fn square_of_v_on_xi_squared_flags_the_boundary() {
    // k = 1, phi = xi: V(xi^2) = 3 xi, which is 3 at xi = 1, so V* sees a boundary residual;
    // away from the ends V*(3 xi) = -xi d/dxi 3 = 0.
    let e = errors(|n| {
        let g = make_grid(n, 2.0).unwrap();
        let stack = OperatorStack::homogeneous(&g, 1.0).unwrap();
        let f = Field::sample(&g, Side::X, |x| x * x, 2.0);
        let (out, residual) = stack.power_checked(Op::V, 2, &f).unwrap();
        assert!((residual - 3.0).abs() < 1e-3, "boundary residual {residual}");
        out.nodes().iter().zip(&out.values).filter(|(x, _)| (0.1..0.9).contains(*x)).map(|(_, v)| v.abs()).fold(0.0, f64::max)
    });
    second_order(e, "interior of V*V(xi^2)");
}

#[test]
fn power_zero_and_two() {
    let g = make_vacuum_grid(64, 2.0, 1.0).unwrap();
    let psi = Field::sample(&g, Side::X, |x| 1.0 + 0.2 * x * x, 0.0);
    let stack = OperatorStack::new(&psi, 1.0).unwrap();
    let f = Field::sample(&g, Side::X, |x| x * (1.0 + x), 1.0);
    assert_eq!(stack.power(Op::V, 0, &f).unwrap().values, f.values);
    let two = stack.power(Op::V, 2, &f).unwrap();
    let unrolled = stack.vstar(&stack.v(&f).unwrap()).unwrap();
    assert_eq!(two.values, unrolled.values);
    assert!(stack.power(Op::V, stack.s() + 1, &f).is_err());
}

#[test]
fn triplets_are_weighted_transposes() {
    // W_Y V = (W_X V*)^T is summation by parts written as matrices.
    let g = make_vacuum_grid(24, 2.0, 1.5).unwrap();
    let psi = Field::sample(&g, Side::X, |x| 0.8 + 0.5 * x, 0.0);
    let stack = OperatorStack::new(&psi, 1.5).unwrap();
    let n = g.n();
    let dense = |t: Vec<(usize, usize, f64)>| {
        let mut m = vec![vec![0.0; n]; n];
        for (r, c, v) in t {
            m[r][c] += v;
        }
        m
    };
    let v = dense(stack.v_triplets());
    let vs = dense(stack.vstar_triplets());
    let (wx, wy) = (g.weights(Side::X), g.weights(Side::Y));
    for i in 0..n {
        for j in 0..n {
            let lhs = wy[i] * v[i][j];
            let rhs = wx[j] * vs[j][i];
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0), "({i}, {j}): {lhs} vs {rhs}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_identity_holds_for_any_grid_functions(
        k in 0.6f64..4.0,
        grading in 1.0f64..3.0,
        psi in prop::collection::vec(0.5f64..2.0, 32),
        f in prop::collection::vec(-1.0f64..1.0, 32),
        h in prop::collection::vec(-1.0f64..1.0, 32),
    ) {
        let g = make_vacuum_grid(32, grading, k).unwrap();
        let stack = OperatorStack::new(&Field::new(g.clone(), Side::X, psi, 1.0, 0.0), k).unwrap();
        let f = Field::new(g.clone(), Side::X, f, 0.0, 0.0);
        let h = Field::new(g, Side::Y, h, 0.0, 0.0);
        let lhs = stack.v(&f).unwrap().inner(&h).unwrap();
        let rhs = f.inner(&stack.vstar(&h).unwrap()).unwrap();
        let scale = stack.v(&f).unwrap().norm() * h.norm() + f.norm() * stack.vstar(&h).unwrap().norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
    }
}
