//! Gas parameters and the transforms Eulerian x <-> mass y <-> singular coordinate xi.
//!
//! Conventions: `xi = (y/M)^theta` with `theta = (gamma-1)/(2 gamma)`, and the state
//! variables are `phi = sigma * K * rho^((gamma-1)/2)`, `u = sigma * u_phys` where
//! `K = 2 sqrt(A gamma)/(gamma-1)` and `sigma` absorbs every remaining constant so the
//! evolution reads `phi_t + (phi/xi)^(2k) u_xi = 0`, `u_t + (phi/xi)^(2k) phi_xi = 0`
//! in physical time.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Side, State};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub gamma: f64,
    pub entropy_const: f64,
    pub total_mass: f64,
}

pub fn k_of_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must exceed 1, got {gamma}")));
    }
    Ok((gamma + 1.0) / (2.0 * (gamma - 1.0)))
}

impl Params {
    pub fn new(gamma: f64, entropy_const: f64, total_mass: f64) -> Result<Self> {
        k_of_gamma(gamma)?;
        if !(entropy_const > 0.0) || !entropy_const.is_finite() {
            return Err(Error::InvalidParameter(format!("entropy constant must be positive, got {entropy_const}")));
        }
        if !(total_mass > 0.0) || !total_mass.is_finite() {
            return Err(Error::InvalidParameter(format!("total mass must be positive, got {total_mass}")));
        }
        Ok(Params { gamma, entropy_const, total_mass })
    }

    /// Unit mass and the entropy constant for which the state scale `sigma` is one,
    /// so that `phi = K rho^((gamma-1)/2)` and `u` is the physical velocity.
    pub fn normalized(gamma: f64) -> Result<Self> {
        let k = k_of_gamma(gamma)?;
        let theta = (gamma - 1.0) / (2.0 * gamma);
        let base = theta * ((gamma - 1.0) / 2.0).powf(2.0 * k);
        let a_gamma = base.powf(1.0 / (k - 0.5));
        Params::new(gamma, a_gamma / gamma, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        Params::new(self.gamma, self.entropy_const, self.total_mass).map(|_| ())
    }

    pub fn k(&self) -> f64 {
        (self.gamma + 1.0) / (2.0 * (self.gamma - 1.0))
    }

    pub fn s(&self) -> usize {
        self.k().ceil() as usize + 3
    }

    pub fn theta(&self) -> f64 {
        (self.gamma - 1.0) / (2.0 * self.gamma)
    }

    /// `K = 2 sqrt(A gamma)/(gamma-1)`.
    pub fn phi_prefactor(&self) -> f64 {
        2.0 * (self.entropy_const * self.gamma).sqrt() / (self.gamma - 1.0)
    }

    /// Propagation-speed factor picked up by `d/dy -> d/dxi`.
    pub fn speed_scale(&self) -> f64 {
        let k = self.k();
        (self.entropy_const * self.gamma).sqrt() * self.theta()
            / (self.total_mass * self.phi_prefactor().powf(2.0 * k))
    }

    /// Factor multiplying the physical phi and u in the state.
    pub fn state_scale(&self) -> f64 {
        self.speed_scale().powf(1.0 / (2.0 * self.k()))
    }
}

/// `phi = (2 sqrt(A gamma)/(gamma-1)) rho^((gamma-1)/2)`.
pub fn phi_of_rho(rho: f64, p: &Params) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::InvalidInput(format!("density must be non-negative, got {rho}")));
    }
    Ok(p.phi_prefactor() * rho.powf((p.gamma - 1.0) / 2.0))
}

pub fn rho_of_phi(phi: f64, p: &Params) -> Result<f64> {
    if !(phi >= 0.0) {
        return Err(Error::InvalidInput(format!("phi must be non-negative, got {phi}")));
    }
    Ok((phi / p.phi_prefactor()).powf(2.0 / (p.gamma - 1.0)))
}

pub fn xi_of_y(y: f64, p: &Params) -> Result<f64> {
    let m = p.total_mass;
    if !(0.0..=m).contains(&y) {
        return Err(Error::Domain { value: y, lo: 0.0, hi: m });
    }
    Ok((y / m).powf(p.theta()))
}

pub fn y_of_xi(xi: f64, p: &Params) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::Domain { value: xi, lo: 0.0, hi: 1.0 });
    }
    Ok(p.total_mass * xi.powf(1.0 / p.theta()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerianProfile {
    pub x_nodes: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub vacuum_point: f64,
}

/// Mean of `c^p` over an interval on which `c` is linear from `c0` to `c1`.
fn mean_power(c0: f64, c1: f64, p: f64) -> f64 {
    let dc = c1 - c0;
    if dc.abs() <= 1e-12 * c0.abs().max(c1.abs()).max(f64::MIN_POSITIVE) {
        return (0.5 * (c0 + c1)).powf(p);
    }
    (c1.powf(p + 1.0) - c0.powf(p + 1.0)) / ((p + 1.0) * dc)
}

impl EulerianProfile {
    fn check_shape(&self) -> Result<()> {
        let n = self.x_nodes.len();
        if n < 3 || self.rho.len() != n || self.u.len() != n {
            return Err(Error::InvalidInput("profile needs at least 3 nodes and matching columns".into()));
        }
        if self.x_nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("x nodes must be strictly increasing".into()));
        }
        if (self.x_nodes[0] - self.vacuum_point).abs() > 1e-12 * (1.0 + self.vacuum_point.abs()) {
            return Err(Error::InvalidInput("first node must be the vacuum point".into()));
        }
        if self.rho.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) || self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("density must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Sound-speed-squared proxy `rho^(gamma-1)` at every node.
    fn c2(&self, p: &Params) -> Vec<f64> {
        self.rho.iter().map(|r| r.powf(p.gamma - 1.0)).collect()
    }

    /// Cumulative mass from the vacuum point, exact for `rho^(gamma-1)` piecewise linear.
    pub fn cumulative_mass(&self, p: &Params) -> Vec<f64> {
        let c2 = self.c2(p);
        let expo = 1.0 / (p.gamma - 1.0);
        let mut y = vec![0.0; self.x_nodes.len()];
        for i in 1..y.len() {
            let dx = self.x_nodes[i] - self.x_nodes[i - 1];
            y[i] = y[i - 1] + dx * mean_power(c2[i - 1], c2[i], expo);
        }
        y
    }

    pub fn mass(&self, p: &Params) -> f64 {
        *self.cumulative_mass(p).last().unwrap_or(&0.0)
    }

    /// Samples `rho`, `u` on a table graded quadratically toward the vacuum point.
    pub fn from_fn(
        a: f64,
        b: f64,
        cells: usize,
        rho: impl Fn(f64) -> f64,
        u: impl Fn(f64) -> f64,
    ) -> Self {
        let x_nodes: Vec<f64> = (0..=cells)
            .map(|i| {
                let t = i as f64 / cells as f64;
                if i == cells { b } else { a + (b - a) * t * t }
            })
            .collect();
        let rho = x_nodes.iter().map(|&x| rho(x)).collect();
        let u = x_nodes.iter().map(|&x| u(x)).collect();
        EulerianProfile { x_nodes, rho, u, vacuum_point: a }
    }

    /// Checks the physical vacuum conditions; returns the normalized slope of `rho^(gamma-1)`.
    pub fn check_admissible(&self, p: &Params) -> Result<f64> {
        self.check_shape()?;
        let c2 = self.c2(p);
        let n = c2.len();
        let span = self.x_nodes[n - 1] - self.vacuum_point;
        let rho_max = self.rho.iter().cloned().fold(0.0, f64::max);
        if rho_max <= 0.0 {
            return Err(Error::Admissibility("density vanishes identically".into()));
        }
        if self.rho[0] > 1e-12 * rho_max {
            return Err(Error::Admissibility(format!("density {} at the vacuum point is not zero", self.rho[0])));
        }
        if self.rho[1..].iter().any(|r| !(*r > 0.0)) {
            return Err(Error::Admissibility("density must be positive away from the vacuum point".into()));
        }
        let slope = |i: usize| c2[i] / (self.x_nodes[i] - self.vacuum_point);
        let (s1, s2) = (slope(1), slope(2));
        let ratio = s1 / s2;
        if !(1.0 / 1.5..=1.5).contains(&ratio) {
            return Err(Error::Admissibility(format!(
                "slope of rho^(gamma-1) has no finite positive limit at the vacuum point (ratio {ratio:.3})"
            )));
        }
        let mass = self.mass(p);
        let rho_ref = mass / span;
        let normalized = s1 * span / rho_ref.powf(p.gamma - 1.0);
        if !(1e-6..=1e6).contains(&normalized) {
            return Err(Error::Admissibility(format!("normalized vacuum slope {normalized:e} outside [1e-6, 1e6]")));
        }
        let u_max = self.u.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if self.u[n - 1].abs() > 1e-10 * u_max {
            return Err(Error::Admissibility(format!("velocity {} at the right end is not zero", self.u[n - 1])));
        }
        if ((mass - p.total_mass) / p.total_mass).abs() > 1e-6 {
            return Err(Error::Admissibility(format!(
                "profile mass {mass} differs from the declared total mass {}",
                p.total_mass
            )));
        }
        Ok(normalized)
    }

    /// Position, `rho^(gamma-1)` and velocity at mass coordinate `y`.
    fn locate(&self, cum: &[f64], c2: &[f64], y: f64, p: &Params) -> (f64, f64, f64) {
        let n = cum.len();
        let i = match cum.partition_point(|&m| m <= y) {
            0 => 0,
            j if j >= n => n - 2,
            j => j - 1,
        };
        let (x0, x1) = (self.x_nodes[i], self.x_nodes[i + 1]);
        let (c0, c1) = (c2[i], c2[i + 1]);
        let expo = 1.0 / (p.gamma - 1.0);
        let dm = y - cum[i];
        let slope = (c1 - c0) / (x1 - x0);
        let x = if slope.abs() * (x1 - x0) <= 1e-12 * c0.max(c1) {
            x0 + dm / c0.powf(expo).max(f64::MIN_POSITIVE)
        } else {
            let target = c0.powf(expo + 1.0) + dm * slope * (expo + 1.0);
            let c = target.max(0.0).powf(1.0 / (expo + 1.0));
            x0 + (c - c0) / slope
        };
        let x = x.clamp(x0, x1);
        let t = (x - x0) / (x1 - x0);
        let c = c0 + t * (c1 - c0);
        let u = self.u[i] + t * (self.u[i + 1] - self.u[i]);
        (x, c, u)
    }
}

/// Samples an admissible Eulerian profile onto the xi grid as a state `(phi/xi, u)`.
pub fn lagrangian_of_eulerian(prof: &EulerianProfile, p: &Params, grid: &Arc<Grid>) -> Result<State> {
    prof.check_admissible(p)?;
    let cum = prof.cumulative_mass(p);
    let c2 = prof.c2(p);
    let scale = p.state_scale() * p.phi_prefactor();
    let sigma = p.state_scale();
    let psi_vals: Vec<f64> = grid
        .nodes(Side::X)
        .iter()
        .map(|&xi| {
            let y = y_of_xi(xi, p).expect("grid nodes lie in [0,1]");
            let (_, c, _) = prof.locate(&cum, &c2, y, p);
            scale * c.max(0.0).sqrt() / xi
        })
        .collect();
    let u_vals: Vec<f64> = grid
        .nodes(Side::Y)
        .iter()
        .map(|&xi| {
            let y = y_of_xi(xi, p).expect("grid nodes lie in [0,1]");
            let (_, _, u) = prof.locate(&cum, &c2, y, p);
            sigma * u
        })
        .collect();
    let psi = Field::new(grid.clone(), Side::X, psi_vals, 0.0, 0.0).with_extrapolated_edge();
    let u = Field::new(grid.clone(), Side::Y, u_vals, 0.0, 0.0);
    State::new(psi, u)
}

/// Inverse transform; node masses are honoured exactly so `mass()` returns `M` to round-off.
pub fn eulerian_reconstruct(state: &State, a0: f64, p: &Params) -> Result<EulerianProfile> {
    state.check_positive()?;
    let grid = state.psi.grid().clone();
    let sigma = p.state_scale();
    let scale = sigma * p.phi_prefactor();
    let expo = 1.0 / (p.gamma - 1.0);
    let xs = grid.nodes(Side::X);
    let psi_right = state.psi.extrapolate_to(1.0);
    let mut xi_nodes = vec![0.0];
    xi_nodes.extend_from_slice(xs);
    xi_nodes.push(1.0);
    let mut psi_nodes = vec![state.psi.edge];
    psi_nodes.extend_from_slice(&state.psi.values);
    psi_nodes.push(psi_right);
    let u_x = state.u.to_side(Side::X);
    let mut u_nodes = vec![state.u.extrapolate_to(0.0)];
    u_nodes.extend_from_slice(&u_x.values);
    u_nodes.push(0.0);
    let c2: Vec<f64> = xi_nodes
        .iter()
        .zip(&psi_nodes)
        .map(|(&xi, &psi)| (xi * psi / scale).powi(2))
        .collect();
    let mut x_nodes = vec![a0];
    for i in 1..xi_nodes.len() {
        let dy = y_of_xi(xi_nodes[i], p)? - y_of_xi(xi_nodes[i - 1], p)?;
        let m = mean_power(c2[i - 1], c2[i], expo);
        if !(m > 0.0) {
            return Err(Error::Degenerate { node: i, xi: xi_nodes[i], value: psi_nodes[i] });
        }
        x_nodes.push(x_nodes[i - 1] + dy / m);
    }
    let rho = c2.iter().map(|c| c.powf(expo)).collect();
    let u = u_nodes.iter().map(|v| v / sigma).collect();
    Ok(EulerianProfile { x_nodes, rho, u, vacuum_point: a0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_values() {
        assert_eq!(k_of_gamma(3.0).unwrap(), 1.0);
        assert!((k_of_gamma(5.0 / 3.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((k_of_gamma(1.1).unwrap() - 10.5).abs() < 1e-12);
        assert!(k_of_gamma(1.0).is_err());
        assert!(k_of_gamma(0.5).is_err());
    }

    #[test]
    fn k_is_decreasing() {
        let gs = [1.05, 1.2, 1.4, 5.0 / 3.0, 2.0, 3.0, 4.0, 10.0];
        for w in gs.windows(2) {
            assert!(k_of_gamma(w[0]).unwrap() > k_of_gamma(w[1]).unwrap());
        }
    }

    #[test]
    fn order_s() {
        let p = Params::new(3.0, 1.0 / 3.0, 1.0).unwrap();
        assert_eq!(p.s(), 4);
        let p = Params::new(4.0, 1.0, 1.0).unwrap();
        assert_eq!(p.s(), 4);
        let p = Params::new(5.0 / 3.0, 1.0, 1.0).unwrap();
        assert_eq!(p.s(), 5);
    }

    #[test]
    fn phi_rho_pair() {
        let p = Params::new(3.0, 1.0 / 3.0, 1.0).unwrap();
        assert_eq!(phi_of_rho(0.0, &p).unwrap(), 0.0);
        for r in [0.1, 0.7, 2.5] {
            assert!((phi_of_rho(r, &p).unwrap() - r).abs() < 1e-14);
        }
        assert!(phi_of_rho(-1.0, &p).is_err());
        let p = Params::new(1.4, 0.8, 1.0).unwrap();
        for e in 0..=6 {
            let r = 10f64.powi(-e);
            let back = rho_of_phi(phi_of_rho(r, &p).unwrap(), &p).unwrap();
            assert!(((back - r) / r).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_params_have_unit_scale() {
        for g in [3.0, 5.0 / 3.0, 2.0, 4.0, 1.4] {
            let p = Params::normalized(g).unwrap();
            assert!((p.state_scale() - 1.0).abs() < 1e-12, "gamma {g}");
            assert_eq!(p.total_mass, 1.0);
        }
        let p = Params::normalized(3.0).unwrap();
        assert!((p.entropy_const - 1.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn xi_map() {
        let p = Params::new(3.0, 1.0, 2.0).unwrap();
        assert_eq!(xi_of_y(0.0, &p).unwrap(), 0.0);
        assert!((xi_of_y(2.0, &p).unwrap() - 1.0).abs() < 1e-15);
        let q = xi_of_y(0.5, &p).unwrap();
        assert!((q - 0.25f64.cbrt()).abs() < 1e-12);
        assert!((q - 0.62996).abs() < 1e-5);
        assert!(xi_of_y(2.5, &p).is_err());
        assert!(xi_of_y(-0.1, &p).is_err());
        for i in 0..=100 {
            let xi = i as f64 / 100.0;
            let back = xi_of_y(y_of_xi(xi, &p).unwrap(), &p).unwrap();
            assert!((back - xi).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_power_matches_quadrature() {
        let (c0, c1, p) = (0.3, 1.7, 1.5);
        let n = 200_000;
        let mut s = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            s += (c0 + t * (c1 - c0)).powf(p);
        }
        s /= n as f64;
        assert!((mean_power(c0, c1, p) - s).abs() < 1e-9);
        assert!((mean_power(0.4, 0.4, 2.0) - 0.16).abs() < 1e-15);
    }
}
