//! Midpoint integration of linear skew systems
//!
//! ```text
//! dF/dt = alpha V* G + f,   dG/dt = beta V F + g,   G(1) = 0
//! ```
//!
//! with `F` on the X side and `G` on the Y side. When `alpha` and `beta` have opposite
//! signs, `||F||^2 - (alpha/beta) ||G||^2` is conserved without sources.

use crate::error::{Error, Result};
use crate::grid::{Field, Side};
use crate::operators::OperatorStack;

use super::thomas;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SkewSystem {
    pub alpha: f64,
    pub beta: f64,
}

impl SkewSystem {
    /// Weight on `||G||^2` in the conserved norm (weight 1 on `||F||^2`).
    pub fn g_weight(&self) -> f64 {
        -self.alpha / self.beta
    }

    pub fn norm(&self, f: &Field, g: &Field) -> f64 {
        (f.norm().powi(2) + self.g_weight() * g.norm().powi(2)).sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct LinearSolution {
    pub times: Vec<f64>,
    pub f: Vec<Field>,
    pub g: Vec<Field>,
    /// `max_t ||(F, G)|| / integral of ||(f, g)|| dt`.
    pub measured_c: f64,
}

/// Steps the system over `src_f.len() - 1` steps. `stacks[m]` is the operator used on
/// step `m` (the last one is reused if the slice is shorter); sources are averaged over
/// each step.
pub fn skew_midpoint(
    sys: SkewSystem,
    stacks: &[OperatorStack],
    dt: f64,
    f0: &Field,
    g0: &Field,
    src_f: &[Field],
    src_g: &[Field],
) -> Result<(Vec<Field>, Vec<Field>)> {
    if stacks.is_empty() {
        return Err(Error::InvalidInput("no operator stack supplied".into()));
    }
    if src_f.len() != src_g.len() || src_f.is_empty() {
        return Err(Error::InvalidInput("source series must be non-empty and of equal length".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let grid = stacks[0].grid().clone();
    let n = grid.n();
    let mut fs = vec![f0.clone().with_edge(0.0)];
    let mut gs = vec![g0.clone().with_edge(0.0)];
    let h = 0.5 * dt;
    let (mut sub, mut diag, mut sup, mut r) = (vec![0.0; 2 * n], vec![1.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]);
    for m in 0..src_f.len() - 1 {
        let stack = &stacks[m.min(stacks.len() - 1)];
        let (f, g) = (fs.last().unwrap(), gs.last().unwrap());
        let vf = stack.v(f)?;
        let vsg = stack.vstar(g)?;
        for j in 0..n {
            let sg = 0.5 * (src_g[m].values[j] + src_g[m + 1].values[j]);
            let sf = 0.5 * (src_f[m].values[j] + src_f[m + 1].values[j]);
            r[2 * j] = g.values[j] + h * sys.beta * vf.values[j] + dt * sg;
            r[2 * j + 1] = f.values[j] + h * sys.alpha * vsg.values[j] + dt * sf;
        }
        sub.iter_mut().for_each(|v| *v = 0.0);
        sup.iter_mut().for_each(|v| *v = 0.0);
        diag.iter_mut().for_each(|v| *v = 1.0);
        for (row, col, v) in stack.v_triplets() {
            if col + 1 == row {
                sub[2 * row] = -h * sys.beta * v;
            } else {
                sup[2 * row] = -h * sys.beta * v;
            }
        }
        for (row, col, v) in stack.vstar_triplets() {
            if col == row {
                sub[2 * row + 1] = -h * sys.alpha * v;
            } else {
                sup[2 * row + 1] = -h * sys.alpha * v;
            }
        }
        thomas(&sub, &diag, &sup, &mut r);
        let gv: Vec<f64> = (0..n).map(|j| r[2 * j]).collect();
        let fv: Vec<f64> = (0..n).map(|j| r[2 * j + 1]).collect();
        if gv.iter().chain(&fv).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: m + 1 });
        }
        fs.push(Field::new(grid.clone(), Side::X, fv, 0.0, 0.0));
        gs.push(Field::new(grid.clone(), Side::Y, gv, 0.0, 0.0));
    }
    Ok((fs, gs))
}

/// `dF/dt - V* G = f`, `dG/dt + V F = g` from zero data on a fixed background.
pub fn solve_linear(stack: &OperatorStack, f: &[Field], g: &[Field], dt: f64) -> Result<LinearSolution> {
    let sys = SkewSystem { alpha: 1.0, beta: -1.0 };
    let grid = stack.grid();
    let (fs, gs) = skew_midpoint(
        sys,
        std::slice::from_ref(stack),
        dt,
        &Field::zeros(grid, Side::X),
        &Field::zeros(grid, Side::Y),
        f,
        g,
    )?;
    let sup = fs.iter().zip(&gs).map(|(a, b)| sys.norm(a, b)).fold(0.0, f64::max);
    let src: Vec<f64> = f.iter().zip(g).map(|(a, b)| sys.norm(a, b)).collect();
    let integral: f64 = src.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum();
    let measured_c = if sup == 0.0 { 0.0 } else { sup / integral };
    let times = (0..fs.len()).map(|m| m as f64 * dt).collect();
    Ok(LinearSolution { times, f: fs, g: gs, measured_c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn sources(stack: &OperatorStack, steps: usize, dt: f64, c: f64) -> (Vec<Field>, Vec<Field>) {
        let g = stack.grid();
        let f: Vec<Field> = (0..=steps)
            .map(|m| Field::sample(g, Side::X, |x| c * (m as f64 * dt).cos() * x * x, 2.0))
            .collect();
        let gg: Vec<Field> = (0..=steps)
            .map(|m| Field::sample(g, Side::Y, |x| c * (1.0 + m as f64 * dt) * x * (1.0 - x), 1.0))
            .collect();
        (f, gg)
    }

    #[test]
    fn zero_sources_give_zero() {
        let g = make_grid(32, 2.0).unwrap();
        let s = OperatorStack::homogeneous(&g, 1.0).unwrap();
        let z: Vec<Field> = (0..11).map(|_| Field::zeros(&g, Side::X)).collect();
        let zy: Vec<Field> = (0..11).map(|_| Field::zeros(&g, Side::Y)).collect();
        let sol = solve_linear(&s, &z, &zy, 0.01).unwrap();
        assert!(sol.f.iter().all(|f| f.max_abs() == 0.0));
        assert!(sol.g.iter().all(|f| f.max_abs() == 0.0));
    }

    #[test]
    fn superposition() {
        let g = make_grid(32, 2.0).unwrap();
        let s = OperatorStack::new(&Field::sample(&g, Side::X, |x| 1.0 + 0.2 * x * x, 0.0), 1.0).unwrap();
        let (f1, g1) = sources(&s, 20, 0.01, 1.0);
        let (f2, g2) = sources(&s, 20, 0.01, 2.5);
        let a = solve_linear(&s, &f1, &g1, 0.01).unwrap();
        let b = solve_linear(&s, &f2, &g2, 0.01).unwrap();
        for (x, y) in a.f.iter().zip(&b.f) {
            for (p, q) in x.values.iter().zip(&y.values) {
                assert!((2.5 * p - q).abs() < 1e-12 * (1.0 + q.abs()));
            }
        }
    }

    #[test]
    fn stability_constant_is_at_most_one() {
        let g = make_grid(64, 2.0).unwrap();
        let s = OperatorStack::new(&Field::sample(&g, Side::X, |x| 1.0 + 0.2 * x * x, 0.0), 1.0).unwrap();
        let (f, gg) = sources(&s, 50, 0.01, 1.0);
        let sol = solve_linear(&s, &f, &gg, 0.01).unwrap();
        assert!(sol.measured_c > 0.0 && sol.measured_c <= 1.0 + 1e-12);
    }
}
