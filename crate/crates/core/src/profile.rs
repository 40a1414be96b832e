//! Initial data given as even polynomials, and their projection onto the grid.
//!
//! Near the vacuum smooth data are even in `xi`, so both `phi/xi` and `u` are stored as
//! polynomials in `q = xi^2`. In that variable the operators act without singular
//! coefficients:
//!
//! ```text
//! V (xi^(k+1) F) = xi^k     ((2k+1) W + 2q W'),   W = psi^(2k) F
//! V*(xi^k G)     = xi^(k+1) (-2 psi^(2k) G')
//! ```
//!
//! so every level of the hierarchy can be evaluated exactly with truncated Taylor series.
//!
//! Sampling the profile at the nodes is accurate to `O(h^2)` at fixed `xi`, but the
//! first few nodes carry an `O(1)` relative error that each application of V or V*
//! amplifies by `1/h`. The top of the hierarchy then grows without bound under
//! refinement. [`EvenProfile::prepare`] instead returns the grid state whose discrete
//! top level equals the exact one, obtained by running the exact discrete inverses down
//! the ladder. Every level is then bounded uniformly in `n`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Side, State};
use crate::operators::{Op, OperatorStack};

/// Truncated Taylor series `sum c_m d^m` about a fixed point.
#[derive(Clone, Debug)]
struct Jet(Vec<f64>);

impl Jet {
    fn poly(coeffs: &[f64], q0: f64, order: usize) -> Jet {
        let mut c = vec![0.0; order + 1];
        for (i, &p) in coeffs.iter().enumerate() {
            // binomial expansion of (q0 + d)^i
            let mut b = 1.0;
            for (m, cm) in c.iter_mut().enumerate().take(i.min(order) + 1) {
                *cm += p * b * q0.powi((i - m) as i32);
                b *= (i - m) as f64 / (m + 1) as f64;
            }
        }
        Jet(c)
    }

    fn len(&self) -> usize {
        self.0.len()
    }

    fn mul(&self, o: &Jet) -> Jet {
        let n = self.len().min(o.len());
        Jet((0..n).map(|m| (0..=m).map(|i| self.0[i] * o.0[m - i]).sum()).collect())
    }

    fn add(&self, o: &Jet) -> Jet {
        Jet(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }

    fn scale(&self, c: f64) -> Jet {
        Jet(self.0.iter().map(|v| c * v).collect())
    }

    /// `f^a` for `f(q0) > 0`, from `f g' = a f' g`.
    fn powf(&self, a: f64) -> Jet {
        let f = &self.0;
        let mut g = vec![f[0].powf(a)];
        for m in 1..f.len() {
            let s: f64 = (1..=m).map(|i| (a * i as f64 - (m - i) as f64) * f[i] * g[m - i]).sum();
            g.push(s / (m as f64 * f[0]));
        }
        Jet(g)
    }

    fn deriv(&self) -> Jet {
        Jet((1..self.len()).map(|m| m as f64 * self.0[m]).collect())
    }

    fn times_q(&self, q0: f64) -> Jet {
        Jet((0..self.len()).map(|m| q0 * self.0[m] + if m > 0 { self.0[m - 1] } else { 0.0 }).collect())
    }
}

fn horner(c: &[f64], q: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * q + v)
}

/// `phi/xi` and `u` as polynomials in `xi^2`, lowest degree first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvenProfile {
    pub psi: Vec<f64>,
    pub u: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub state: State,
    /// Largest `|psi_prepared - psi_sampled|` over nodes with `xi >= 1/8`.
    pub interior_defect: f64,
    pub newton_iterations: usize,
}

impl EvenProfile {
    pub fn psi_at(&self, xi: f64) -> f64 {
        horner(&self.psi, xi * xi)
    }

    pub fn u_at(&self, xi: f64) -> f64 {
        horner(&self.u, xi * xi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.psi.is_empty() || self.psi.iter().chain(&self.u).any(|c| !c.is_finite()) {
            return Err(Error::Config("profile coefficients must be finite and phi/xi non-empty".into()));
        }
        let ok = (0..=200).all(|i| self.psi_at(i as f64 / 200.0) > 0.0);
        if !ok {
            return Err(Error::Admissibility("phi/xi must stay positive on [0, 1]".into()));
        }
        let u1 = self.u_at(1.0);
        if u1.abs() > 1e-12 * (1.0 + self.u.iter().map(|c| c.abs()).sum::<f64>()) {
            return Err(Error::Admissibility(format!("u(1) = {u1} must vanish")));
        }
        Ok(())
    }

    /// `(min, max)` of `phi/xi` on a fine sampling of `[0, 1]`.
    pub fn psi_range(&self) -> (f64, f64) {
        (0..=2000)
            .map(|i| self.psi_at(i as f64 / 2000.0))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// Exact ladder `(V)^i (xi^k phi)` (`Op::V`) or `(V*)^i (xi^k u)` (`Op::Vstar`) at
    /// `xi`, for `i = 0..=s`.
    pub fn exact_ladder(&self, which: Op, k: f64, s: usize, xi: f64) -> Vec<f64> {
        let q0 = xi * xi;
        let order = s + 1;
        let w = Jet::poly(&self.psi, q0, order).powf(2.0 * k);
        let (mut cur, mut op, mut on_x) = match which {
            Op::V => (Jet::poly(&self.psi, q0, order), Op::V, true),
            Op::Vstar => (Jet::poly(&self.u, q0, order), Op::Vstar, false),
        };
        let lift = |v: f64, on_x: bool| v * xi.powf(if on_x { k + 1.0 } else { k });
        let mut out = vec![lift(cur.0[0], on_x)];
        for _ in 0..s {
            cur = match op {
                Op::V => {
                    let ww = w.mul(&cur);
                    ww.scale(2.0 * k + 1.0).add(&ww.deriv().times_q(q0).scale(2.0))
                }
                Op::Vstar => w.mul(&cur.deriv()).scale(-2.0),
            };
            on_x = !on_x;
            op = match op {
                Op::V => Op::Vstar,
                Op::Vstar => Op::V,
            };
            out.push(lift(cur.0[0], on_x));
        }
        out
    }

    /// The built-in family: `phi' = c (1 - xi^2)^3 (1 + 4 xi^2)` and
    /// `u = amplitude (1 - xi^2)^5`, with `c` placing the range of `phi/xi` symmetrically
    /// about 1 on a log scale (`[0.806, 1.241]`).
    pub fn standard(amplitude: f64) -> EvenProfile {
        // integrating (1 - q)^3 (1 + 4q) = 1 + q - 9q^2 + 11q^3 - 4q^4 term by term in xi
        let raw = [1.0, 1.0 / 3.0, -9.0 / 5.0, 11.0 / 7.0, -4.0 / 9.0];
        let tmp = EvenProfile { psi: raw.to_vec(), u: vec![] };
        let (lo, hi) = tmp.psi_range();
        let c = 1.0 / (lo * hi).sqrt();
        let binom = [1.0, -5.0, 10.0, -10.0, 5.0, -1.0];
        EvenProfile { psi: raw.iter().map(|v| c * v).collect(), u: binom.iter().map(|v| amplitude * v).collect() }
    }

    /// Largest relative value at `xi = 1` of a hierarchy level that V* is later applied
    /// to. The discrete V* closes with `g(1) = 0`, so these must vanish.
    pub fn compatibility_defect(&self, k: f64, s: usize) -> f64 {
        let mut worst = 0.0f64;
        for which in [Op::V, Op::Vstar] {
            let at_one = self.exact_ladder(which, k, s, 1.0);
            let scale: Vec<f64> = (1..=20)
                .map(|i| self.exact_ladder(which, k, s, i as f64 / 20.0))
                .fold(vec![0.0f64; s + 1], |m, l| m.iter().zip(&l).map(|(a, b)| a.max(b.abs())).collect());
            // Y levels are the odd ones of the phi ladder and the even ones of the u ladder
            let first = if which == Op::V { 1 } else { 0 };
            for i in (first..s).step_by(2) {
                worst = worst.max(at_one[i].abs() / scale[i].max(f64::MIN_POSITIVE));
            }
        }
        worst
    }

    /// Pointwise samples of the profile.
    pub fn sample(&self, grid: &Arc<Grid>) -> Result<State> {
        State::from_fns(grid, |x| self.psi_at(x), |x| self.u_at(x))
    }

    /// The grid state whose level-`s` hierarchy values equal the exact ones.
    pub fn prepare(&self, grid: &Arc<Grid>, k: f64, s: usize) -> Result<Prepared> {
        self.validate()?;
        let defect = self.compatibility_defect(k, s);
        if defect > 1e-10 {
            return Err(Error::Admissibility(format!(
                "profile is not compatible with the closure at xi = 1 (relative defect {defect:e})"
            )));
        }
        let n = grid.n();
        let xs = grid.nodes(Side::X).to_vec();
        let top_field = |which: Op| {
            // the ladder of phi starts on X, that of u on Y
            let on_x = (which == Op::V) == (s % 2 == 0);
            let side = if on_x { Side::X } else { Side::Y };
            let vals = grid.nodes(side).iter().map(|&x| self.exact_ladder(which, k, s, x)[s]).collect();
            Field::new(grid.clone(), side, vals, 0.0, 0.0)
        };
        let descend = |stack: &OperatorStack, top: &Field| -> Result<Field> {
            let mut cur = top.clone();
            for _ in 0..s {
                cur = match cur.side {
                    Side::X => stack.vstar_inverse(&cur)?,
                    Side::Y => stack.v_inverse(&cur)?,
                };
            }
            Ok(cur)
        };
        let top_phi = top_field(Op::V);
        let top_u = top_field(Op::Vstar);
        let lift: Vec<f64> = xs.iter().map(|x| x.powf(k + 1.0)).collect();

        // Newton on z = ln(phi/xi): r(z) = ln(descend(top; z) / xi^(k+1)) - z.
        let residual = |z: &[f64]| -> Option<Vec<f64>> {
            let psi = Field::new(grid.clone(), Side::X, z.iter().map(|v| v.exp()).collect(), 0.0, 0.0);
            let stack = OperatorStack::new(&psi, k).ok()?;
            let phi_w = descend(&stack, &top_phi).ok()?;
            let r: Vec<f64> = (0..n).map(|j| (phi_w.values[j] / lift[j]).ln() - z[j]).collect();
            r.iter().all(|v| v.is_finite()).then_some(r)
        };
        let sup = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let fail = |why: &str| Error::Admissibility(format!("profile cannot be prepared on the grid: {why}"));
        let mut z: Vec<f64> = xs.iter().map(|&x| self.psi_at(x).ln()).collect();
        let mut r = residual(&z).ok_or_else(|| fail("initial residual is not finite"))?;
        let mut iterations = 0;
        'newton: while sup(&r) > 1e-13 {
            if iterations == 40 {
                return Err(fail(&format!("newton stalled at residual {:e}", sup(&r))));
            }
            iterations += 1;
            let mut jac = DMatrix::<f64>::zeros(n, n);
            for c in 0..n {
                let eps = 1e-7;
                let mut zc = z.clone();
                zc[c] += eps;
                let rc = residual(&zc).ok_or_else(|| fail("jacobian probe is not finite"))?;
                for i in 0..n {
                    jac[(i, c)] = (rc[i] - r[i]) / eps;
                }
            }
            let dz = jac
                .lu()
                .solve(&DVector::from_iterator(n, r.iter().map(|v| -v)))
                .ok_or_else(|| fail("singular jacobian"))?;
            let before = sup(&r);
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = (0..n).map(|j| z[j] + lambda * dz[j]).collect();
                if let Some(rt) = residual(&trial) {
                    if sup(&rt) < before {
                        z = trial;
                        r = rt;
                        break;
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-6 {
                    if before < 1e-10 {
                        // no further progress below round-off
                        break 'newton;
                    }
                    let (j, worst) =
                        r.iter().enumerate().fold((0, 0.0f64), |m, (i, v)| if v.abs() > m.1 { (i, v.abs()) } else { m });
                    return Err(fail(&format!(
                        "no nearby grid state reproduces the top level (residual stalls at {worst:.1e} near xi = {:.3}); \
                         refine the grid or use sampled initial data",
                        xs[j]
                    )));
                }
            }
        }
        let psi = Field::new(grid.clone(), Side::X, z.iter().map(|v| v.exp()).collect(), 0.0, 0.0);
        let stack = OperatorStack::new(&psi, k)?;
        let u_w = descend(&stack, &top_u)?;
        let u_vals = grid.nodes(Side::Y).iter().zip(&u_w.values).map(|(&y, &v)| v / y.powf(k)).collect();
        let state = State::new(psi.with_extrapolated_edge(), Field::new(grid.clone(), Side::Y, u_vals, 0.0, 0.0))?;
        let interior_defect = xs
            .iter()
            .zip(&state.psi.values)
            .filter(|(x, _)| **x >= 0.125)
            .map(|(&x, &v)| (v - self.psi_at(x)).abs())
            .fold(0.0, f64::max);
        Ok(Prepared { state, interior_defect, newton_iterations: iterations })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_vacuum_grid;

    fn profile() -> EvenProfile {
        EvenProfile::standard(0.1)
    }

    #[test]
    fn standard_family_is_compatible_and_centred() {
        let p = profile();
        for (k, s) in [(1.0, 4), (2.0, 5), (1.5, 5), (5.0 / 6.0, 4)] {
            assert!(p.compatibility_defect(k, s) < 1e-12, "k = {k}");
        }
        let (lo, hi) = p.psi_range();
        assert!((lo * hi - 1.0).abs() < 1e-12 && hi < 1.25);
        let bad = EvenProfile { psi: vec![1.0, 0.2], u: vec![0.1, -0.1] };
        assert!(bad.compatibility_defect(1.0, 4) > 0.1);
        let g = make_vacuum_grid(16, 1.0, 1.0).unwrap();
        assert!(matches!(bad.prepare(&g, 1.0, 4), Err(Error::Admissibility(_))));
    }

    #[test]
    fn jet_power_matches_closed_form() {
        // (1 + q)^1.5 about q0 = 0.3
        let j = Jet::poly(&[1.0, 1.0], 0.3, 3).powf(1.5);
        let b: f64 = 1.3;
        let want = [b.powf(1.5), 1.5 * b.powf(0.5), 0.375 * b.powf(-0.5), -0.0625 * b.powf(-1.5)];
        for (a, w) in j.0.iter().zip(want) {
            assert!((a - w).abs() < 1e-14);
        }
    }

    #[test]
    fn homogeneous_ladder_by_hand() {
        // phi = xi, k = 1: V(xi^2) = 3 xi, V*(3 xi) = 0.
        let p = EvenProfile { psi: vec![1.0], u: vec![1.0, -1.0] };
        let l = p.exact_ladder(Op::V, 1.0, 2, 0.4);
        assert!((l[0] - 0.16).abs() < 1e-15 && (l[1] - 1.2).abs() < 1e-15 && l[2].abs() < 1e-15);
        // u = 1 - xi^2: V*(xi (1 - xi^2)) = 2 xi^2, V(2 xi^2) = 6 xi.
        let m = p.exact_ladder(Op::Vstar, 1.0, 2, 0.4);
        assert!((m[1] - 0.32).abs() < 1e-15 && (m[2] - 2.4).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonzero_velocity_at_the_right_end() {
        let p = EvenProfile { psi: vec![1.0], u: vec![0.1] };
        assert!(matches!(p.validate(), Err(Error::Admissibility(_))));
    }

    #[test]
    fn prepared_top_level_matches() {
        let p = profile();
        let k = 1.5;
        let g = make_vacuum_grid(48, 1.0, k).unwrap();
        let prep = p.prepare(&g, k, 5).unwrap();
        let stack = OperatorStack::from_state(&prep.state, k).unwrap();
        let top = stack.power(Op::V, 5, &prep.state.weighted_phi(k)).unwrap();
        for (j, &y) in g.nodes(Side::Y).iter().enumerate() {
            let want = p.exact_ladder(Op::V, k, 5, y)[5];
            assert!((top.values[j] - want).abs() < 1e-8 * (1.0 + want.abs()));
        }
        assert!(prep.interior_defect < 1e-2);
    }
}
