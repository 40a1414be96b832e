//! Weighted norms, the energy hierarchy and the difference functional.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Side, State};
use crate::operators::{Op, OperatorStack};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelNorms {
    /// `||(V)^i (xi^k phi)||^2`
    pub phi: f64,
    /// `||(V*)^i (xi^k u)||^2`
    pub u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub time: f64,
    pub zeroth: f64,
    pub full: f64,
    /// `||xi^k phi||^2_X + ||xi^k u||^2_Y` at the same order, without the weights.
    pub unweighted: f64,
    pub per_level: Vec<LevelNorms>,
    pub phi_over_xi_min: f64,
    pub phi_over_xi_max: f64,
    /// Largest `|g(1)|` met when V* was applied inside the hierarchy.
    pub boundary_residual: f64,
}

impl EnergyReport {
    /// Contribution of level `i` to `full`.
    pub fn level_term(&self, i: usize, k: f64) -> f64 {
        let l = &self.per_level[i];
        let c = 2.0 * k + 1.0;
        if i == 0 { l.phi / c + l.u } else { l.phi / (c * c) + l.u }
    }
}

fn ladder_with_residual(stack: &OperatorStack, which: Op, s: usize, f: &Field) -> Result<(Vec<Field>, f64)> {
    let ladder = stack.power_ladder(which, s, f)?;
    let worst = ladder
        .iter()
        .take(s)
        .filter(|g| g.side == Side::Y)
        .enumerate()
        .filter(|(i, _)| !(which == Op::Vstar && *i == 0))
        .map(|(_, g)| g.edge.abs())
        .fold(0.0, f64::max);
    Ok((ladder, worst))
}

fn sq(f: &Field) -> f64 {
    f.inner(f).expect("field pairs with itself")
}

/// `sqrt(sum_{i<=s} ||(V)^i f||^2)` for X fields, or the `V*` analogue for Y fields.
pub fn space_norm(stack: &OperatorStack, s: usize, f: &Field) -> Result<f64> {
    let which = match f.side {
        Side::X => Op::V,
        Side::Y => Op::Vstar,
    };
    let ladder = stack.power_ladder(which, s, f)?;
    Ok(ladder.iter().map(sq).sum::<f64>().sqrt())
}

/// `(1/(2k+1)) ||xi^k phi||^2 + ||xi^k u||^2`.
pub fn zeroth_energy(state: &State, k: f64) -> f64 {
    sq(&state.weighted_phi(k)) / (2.0 * k + 1.0) + sq(&state.weighted_u(k))
}

/// The energy `E^{k,s}` with its per-level breakdown.
pub fn energy(stack: &OperatorStack, state: &State, s: usize) -> Result<EnergyReport> {
    state.check_positive()?;
    let k = stack.k();
    let (phi_ladder, r1) = ladder_with_residual(stack, Op::V, s, &state.weighted_phi(k))?;
    let (u_ladder, r2) = ladder_with_residual(stack, Op::Vstar, s, &state.weighted_u(k))?;
    let c = 2.0 * k + 1.0;
    let mut per_level = Vec::with_capacity(s + 1);
    let (mut full, mut unweighted) = (0.0, 0.0);
    for i in 0..=s {
        let l = LevelNorms { phi: sq(&phi_ladder[i]), u: sq(&u_ladder[i]) };
        if !l.phi.is_finite() || !l.u.is_finite() {
            return Err(Error::Overflow { level: i });
        }
        full += if i == 0 { l.phi / c + l.u } else { l.phi / (c * c) + l.u };
        unweighted += l.phi + l.u;
        per_level.push(l);
    }
    let (lo, hi) = state.psi_bounds();
    Ok(EnergyReport {
        time: 0.0,
        zeroth: per_level[0].phi / c + per_level[0].u,
        full,
        unweighted,
        per_level,
        phi_over_xi_min: lo,
        phi_over_xi_max: hi,
        boundary_residual: r1.max(r2),
    })
}

/// `sum_{i <= ceil k} (1/(2k+1)^2) ||(V_n*)^i G||^2 + ||(V_n)^i F||^2`.
pub fn approx_energy(stack: &OperatorStack, g: &Field, f: &Field) -> Result<f64> {
    let k = stack.k();
    let top = k.ceil() as usize;
    let c = 2.0 * k + 1.0;
    let gl = stack.power_ladder(Op::Vstar, top, g)?;
    let fl = stack.power_ladder(Op::V, top, f)?;
    let total: f64 = gl.iter().map(|x| sq(x) / (c * c)).sum::<f64>() + fl.iter().map(sq).sum::<f64>();
    if !total.is_finite() {
        return Err(Error::Overflow { level: top });
    }
    Ok(total)
}

/// Ratio of the norm induced by `stack` to the homogeneous one, and its reciprocal.
pub fn norm_equivalence_ratio(stack: &OperatorStack, f: &Field, order: usize) -> Result<(f64, f64)> {
    let bar = OperatorStack::homogeneous(stack.grid(), stack.k())?;
    let a = space_norm(stack, order, f)?;
    let b = space_norm(&bar, order, f)?;
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidInput("norm ratio of a zero field".into()));
    }
    Ok((a / b, b / a))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub d_value: f64,
    pub per_level: [f64; 3],
}

/// The uniqueness functional: levels 0..=2 of the difference of two states, each
/// differentiated by its own operators.
pub fn diff_functional(
    stack1: &OperatorStack,
    stack2: &OperatorStack,
    state1: &State,
    state2: &State,
) -> Result<DiffReport> {
    if !state1.grid().same_as(state2.grid()) {
        return Err(Error::Shape("states live on different grids".into()));
    }
    let k = stack1.k();
    let c = 2.0 * k + 1.0;
    let p1 = stack1.power_ladder(Op::V, 2, &state1.weighted_phi(k))?;
    let p2 = stack2.power_ladder(Op::V, 2, &state2.weighted_phi(k))?;
    let u1 = stack1.power_ladder(Op::Vstar, 2, &state1.weighted_u(k))?;
    let u2 = stack2.power_ladder(Op::Vstar, 2, &state2.weighted_u(k))?;
    let mut per_level = [0.0; 3];
    for i in 0..3 {
        let dp = sq(&p1[i].sub(&p2[i])?);
        let du = sq(&u1[i].sub(&u2[i])?);
        per_level[i] = if i == 0 { dp / c + du } else { dp / (c * c) + du };
    }
    Ok(DiffReport { d_value: per_level.iter().sum(), per_level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zeroth_energy_of_linear_profile() {
        let g = make_grid(256, 1.0).unwrap();
        let st = State::from_fns(&g, |_| 1.0, |_| 0.0).unwrap();
        // (1/3) * integral of xi^4
        let e = zeroth_energy(&st, 1.0);
        assert!((e - 1.0 / 15.0).abs() < 1e-4);
    }

    #[test]
    fn u_part_is_quadratic() {
        let g = make_grid(64, 2.0).unwrap();
        let a = State::from_fns(&g, |_| 1.0, |x| 1.0 - x * x).unwrap();
        let b = State::from_fns(&g, |_| 1.0, |x| 2.0 * (1.0 - x * x)).unwrap();
        let z = State::from_fns(&g, |_| 1.0, |_| 0.0).unwrap();
        let (ea, eb, ez) = (zeroth_energy(&a, 1.0), zeroth_energy(&b, 1.0), zeroth_energy(&z, 1.0));
        assert!(((eb - ez) - 4.0 * (ea - ez)).abs() < 1e-14);
    }

    #[test]
    fn report_is_consistent_and_even_in_u() {
        let g = make_grid(64, 2.0).unwrap();
        let k = 1.0;
        let st = State::from_fns(&g, |x| 1.0 + 0.1 * x * x, |x| 0.1 * (1.0 - x * x).powi(5)).unwrap();
        let neg = State::new(st.psi.clone(), st.u.scale(-1.0)).unwrap();
        let stack = OperatorStack::from_state(&st, k).unwrap();
        let r1 = energy(&stack, &st, 4).unwrap();
        let r2 = energy(&stack, &neg, 4).unwrap();
        assert_eq!(r1, r2);
        let sum: f64 = (0..=4).map(|i| r1.level_term(i, k)).sum();
        assert!((sum - r1.full).abs() < 1e-12 * r1.full);
        assert!(r1.full >= r1.zeroth && r1.zeroth >= 0.0);
    }

    #[test]
    fn zero_state_is_inadmissible() {
        let g = make_grid(16, 2.0).unwrap();
        let st = State::from_fns(&g, |_| 0.0, |_| 0.0).unwrap();
        let bar = OperatorStack::homogeneous(&g, 1.0).unwrap();
        assert!(matches!(energy(&bar, &st, 4), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn space_norm_levels() {
        let g = make_grid(256, 2.0).unwrap();
        let bar = OperatorStack::homogeneous(&g, 1.0).unwrap();
        let f = Field::sample(&g, Side::X, |x| x * x, 2.0);
        assert!((space_norm(&bar, 0, &f).unwrap() - f.norm()).abs() < 1e-15);
        let n1 = space_norm(&bar, 1, &f).unwrap();
        assert!((n1 * n1 - 3.2).abs() < 1e-3);
        let vf = bar.v(&f).unwrap();
        assert!((n1 * n1 - f.norm().powi(2) - vf.norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn approx_energy_zero() {
        let g = make_grid(16, 2.0).unwrap();
        let bar = OperatorStack::homogeneous(&g, 1.0).unwrap();
        let e = approx_energy(&bar, &Field::zeros(&g, Side::Y), &Field::zeros(&g, Side::X)).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn diff_of_identical_states_is_zero() {
        let g = make_grid(32, 2.0).unwrap();
        let st = State::from_fns(&g, |x| 1.0 + 0.1 * x * x, |x| 0.1 * (1.0 - x * x).powi(5)).unwrap();
        let s = OperatorStack::from_state(&st, 1.0).unwrap();
        let d = diff_functional(&s, &s, &st, &st).unwrap();
        assert_eq!(d.d_value, 0.0);
    }
}
