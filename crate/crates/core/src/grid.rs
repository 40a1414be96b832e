//! Staggered mesh on [0,1] and grid functions.
//!
//! The mesh has half-step nodes `xi_i = (i/(2n+1))^p`, `i = 0..=2n+1`. Even interior
//! indices carry the X side (phi-like fields, the domain of V); odd indices carry the
//! Y side (u-like fields, the domain of V*). Each side also has one boundary node: X at
//! `xi = 0`, where `phi = 0`, and Y at `xi = 1`, where `u = 0`. Every node owns the cell
//! between its two neighbours, so both sides get a midpoint rule whose weights sum to one.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    X,
    Y,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    n: usize,
    grading: f64,
    /// `k` used to place the first Y node, if adapted.
    vacuum_k: Option<f64>,
    half: Vec<f64>,
    nodes_x: Vec<f64>,
    nodes_y: Vec<f64>,
    weights_x: Vec<f64>,
    weights_y: Vec<f64>,
}

pub fn make_grid(n: usize, grading_exponent: f64) -> Result<Arc<Grid>> {
    if n < 8 {
        return Err(Error::Config(format!("grid needs n >= 8 cells, got {n}")));
    }
    if !(grading_exponent >= 1.0) || !grading_exponent.is_finite() {
        return Err(Error::Config(format!("grading exponent must be >= 1, got {grading_exponent}")));
    }
    let m = 2 * n + 1;
    let half: Vec<f64> = (0..=m)
        .map(|i| {
            if i == m {
                1.0
            } else {
                (i as f64 / m as f64).powf(grading_exponent)
            }
        })
        .collect();
    Ok(Arc::new(Grid::from_half(n, grading_exponent, None, half)))
}

/// As [`make_grid`], with the first two nodes adapted to the vacuum behaviour.
///
/// Near `xi = 0` the fields behave like `phi^(2k+1) ~ xi^(2k+1)` and even functions of
/// `xi`, which the plain mapped mesh differences badly in the first cell. Here `y_0` is
/// placed where the quotient of `xi^(2k+1)` over `[0, x_0]` is exact, and `x_0` halfway
/// between `y_0` and `y_1`, which makes V* exact on `xi^k` times an even quadratic.
pub fn make_vacuum_grid(n: usize, grading_exponent: f64, k: f64) -> Result<Arc<Grid>> {
    if !(k > 0.5) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("k must exceed 1/2, got {k}")));
    }
    let base = make_grid(n, grading_exponent)?;
    let mut half = base.half.clone();
    let c = (2.0 * k + 1.0).powf(-1.0 / (2.0 * k));
    half[2] = half[3] / (2.0 - c);
    half[1] = c * half[2];
    Ok(Arc::new(Grid::from_half(n, grading_exponent, Some(k), half)))
}

impl Grid {
    fn from_half(n: usize, grading: f64, vacuum_k: Option<f64>, half: Vec<f64>) -> Grid {
        let nodes_x = (0..n).map(|j| half[2 * j + 2]).collect();
    let nodes_y = (0..n).map(|j| half[2 * j + 1]).collect();
    let weights_x = (0..n).map(|j| half[2 * j + 3] - half[2 * j + 1]).collect();
    let weights_y = (0..n).map(|j| half[2 * j + 2] - half[2 * j]).collect();
        Grid { n, grading, vacuum_k, half, nodes_x, nodes_y, weights_x, weights_y }
    }
}

/// Default grading exponent: 2 for `k <= 2`, 3 above. Two-point stencils carry a relative
/// error of order `(h/xi)^2` near `xi = 0`; grading shrinks the first cells enough that the
/// absolute error is second order there too.
pub fn default_grading(k: f64) -> f64 {
    if k <= 2.0 {
        2.0
    } else {
        3.0
    }
}

/// The grid a run at `(n, grading)` uses: adapted to the vacuum when `k` is given.
pub fn grid_for(n: usize, grading: f64, vacuum_k: Option<f64>) -> Result<Arc<Grid>> {
    match vacuum_k {
        Some(k) => make_vacuum_grid(n, grading, k),
        None => make_grid(n, grading),
    }
}

impl Grid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grading(&self) -> f64 {
        self.grading
    }

    /// All `2n+2` half-step coordinates.
    pub fn half_nodes(&self) -> &[f64] {
        &self.half
    }

    pub fn nodes(&self, side: Side) -> &[f64] {
        match side {
            Side::X => &self.nodes_x,
            Side::Y => &self.nodes_y,
        }
    }

    pub fn weights(&self, side: Side) -> &[f64] {
        match side {
            Side::X => &self.weights_x,
            Side::Y => &self.weights_y,
        }
    }

    /// Coordinate of the side's boundary node.
    pub fn edge_xi(&self, side: Side) -> f64 {
        match side {
            Side::X => 0.0,
            Side::Y => 1.0,
        }
    }

    /// Width of the half cell owned by the boundary node.
    pub fn edge_weight(&self, side: Side) -> f64 {
        match side {
            Side::X => self.half[1],
            Side::Y => 1.0 - self.half[2 * self.n],
        }
    }

    /// Smallest distance between neighbouring half-step nodes.
    pub fn h_min(&self) -> f64 {
        self.half.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// Nominal mesh width `1/n`.
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// The `k` the first Y node was adapted to, if any.
    pub fn vacuum_k(&self) -> Option<f64> {
        self.vacuum_k
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.n == other.n
            && self.grading.to_bits() == other.grading.to_bits()
            && self.vacuum_k.map(f64::to_bits) == other.vacuum_k.map(f64::to_bits)
    }
}

/// Quadratic through three points, evaluated at `x`.
pub fn lagrange3(xs: [f64; 3], fs: [f64; 3], x: f64) -> f64 {
    let [x0, x1, x2] = xs;
    let [f0, f1, f2] = fs;
    f0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
        + f1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
        + f2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1))
}

/// Grid function on one side of the mesh, plus its value at that side's boundary node.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    pub side: Side,
    pub values: Vec<f64>,
    pub edge: f64,
    pub vanish_order: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, side: Side, values: Vec<f64>, edge: f64, vanish_order: f64) -> Field {
        assert_eq!(values.len(), grid.n(), "field length must match the grid");
        Field { grid, side, values, edge, vanish_order }
    }

    pub fn zeros(grid: &Arc<Grid>, side: Side) -> Field {
        Field::new(grid.clone(), side, vec![0.0; grid.n()], 0.0, 0.0)
    }

    pub fn sample(grid: &Arc<Grid>, side: Side, f: impl Fn(f64) -> f64, vanish_order: f64) -> Field {
        let values = grid.nodes(side).iter().map(|&x| f(x)).collect();
        let edge = f(grid.edge_xi(side));
        Field::new(grid.clone(), side, values, edge, vanish_order)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes(self.side)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn compatible(&self, other: &Field) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::Shape(format!(
                "grids differ (n = {} vs {})",
                self.grid.n(),
                other.grid.n()
            )));
        }
        if self.side != other.side {
            return Err(Error::Shape(format!("sides differ ({:?} vs {:?})", self.side, other.side)));
        }
        Ok(())
    }

    /// Midpoint-rule approximation of the integral of `f g` over [0,1].
    pub fn inner(&self, other: &Field) -> Result<f64> {
        self.compatible(other)?;
        let w = self.grid.weights(self.side);
        let body: f64 = w.iter().zip(&self.values).zip(&other.values).map(|((w, a), b)| w * a * b).sum();
        Ok(body + self.grid.edge_weight(self.side) * self.edge * other.edge)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).expect("a field is compatible with itself").sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(self.edge.abs(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.edge.is_finite() && self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Field {
        let values = self.nodes().iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        let edge = f(self.grid.edge_xi(self.side), self.edge);
        Field::new(self.grid.clone(), self.side, values, edge, self.vanish_order)
    }

    pub fn scale(&self, c: f64) -> Field {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.edge *= c;
        out
    }

    fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field::new(self.grid.clone(), self.side, values, f(self.edge, other.edge), 0.0))
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        let mut out = self.zip_with(other, |a, b| a + b)?;
        out.vanish_order = self.vanish_order.min(other.vanish_order);
        Ok(out)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        let mut out = self.zip_with(other, |a, b| a - b)?;
        out.vanish_order = self.vanish_order.min(other.vanish_order);
        Ok(out)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        let mut out = self.zip_with(other, |a, b| a * b)?;
        out.vanish_order = self.vanish_order + other.vanish_order;
        Ok(out)
    }

    pub fn multiply_by_xi_pow(&self, m: f64) -> Field {
        let mut out = self.map(|x, v| if x == 0.0 && m > 0.0 { 0.0 } else { v * x.powf(m) });
        out.vanish_order = self.vanish_order + m;
        out
    }

    /// Pointwise `f / xi^m`. Without `force`, the declared vanish order must cover `m`.
    pub fn divide_by_xi_pow(&self, m: f64, force: bool) -> Result<Field> {
        if !force && self.vanish_order + 1e-12 < m {
            return Err(Error::WeightedDivision { m, declared: self.vanish_order });
        }
        let values = self.nodes().iter().zip(&self.values).map(|(&x, &v)| v / x.powf(m)).collect();
        let mut out = Field::new(self.grid.clone(), self.side, values, 0.0, (self.vanish_order - m).max(0.0));
        out.edge = match self.side {
            Side::Y => self.edge,
            Side::X if m == 0.0 => self.edge,
            Side::X if self.vanish_order > m + 1e-12 => 0.0,
            Side::X => out.extrapolate_to(0.0),
        };
        Ok(out)
    }

    /// Quadratic extrapolation from the three nodes nearest `xi`.
    pub fn extrapolate_to(&self, xi: f64) -> f64 {
        let x = self.nodes();
        let n = x.len();
        let idx = if xi <= 0.5 { [0, 1, 2] } else { [n - 3, n - 2, n - 1] };
        lagrange3(idx.map(|i| x[i]), idx.map(|i| self.values[i]), xi)
    }

    pub fn with_edge(mut self, edge: f64) -> Field {
        self.edge = edge;
        self
    }

    /// Re-estimates the boundary value from the interior nodes.
    pub fn with_extrapolated_edge(mut self) -> Field {
        self.edge = self.extrapolate_to(self.grid.edge_xi(self.side));
        self
    }

    /// Linear interpolation onto the other side; the new boundary value is extrapolated.
    pub fn to_side(&self, side: Side) -> Field {
        if side == self.side {
            return self.clone();
        }
        let h = self.grid.half_nodes();
        let n = self.grid.n();
        let v = &self.values;
        let values: Vec<f64> = match self.side {
            Side::X => (0..n)
                .map(|j| {
                    let (xl, xr, x) = (h[2 * j], h[2 * j + 2], h[2 * j + 1]);
                    let fl = if j == 0 { self.edge } else { v[j - 1] };
                    fl + (x - xl) / (xr - xl) * (v[j] - fl)
                })
                .collect(),
            Side::Y => (0..n)
                .map(|j| {
                    let (xl, xr, x) = (h[2 * j + 1], h[2 * j + 3], h[2 * j + 2]);
                    let fr = if j + 1 == n { self.edge } else { v[j + 1] };
                    v[j] + (x - xl) / (xr - xl) * (fr - v[j])
                })
                .collect(),
        };
        let edge = self.extrapolate_to(self.grid.edge_xi(side));
        Field::new(self.grid.clone(), side, values, edge, self.vanish_order)
    }

    /// Largest `|f_j| / xi_j^m` over the left third of the mesh.
    pub fn vanish_constant(&self, m: f64) -> f64 {
        let lim = self.len() / 3;
        self.nodes()
            .iter()
            .zip(&self.values)
            .take(lim.max(1))
            .map(|(&x, &v)| v.abs() / x.powf(m))
            .fold(0.0, f64::max)
    }
}

/// The pair `(phi/xi, u)` with an optional cached `d phi/dt`.
#[derive(Clone, Debug)]
pub struct State {
    pub psi: Field,
    pub u: Field,
    pub dphi_dt: Option<Field>,
}

impl State {
    pub fn new(psi: Field, mut u: Field) -> Result<State> {
        if psi.side != Side::X || u.side != Side::Y {
            return Err(Error::Shape("phi/xi lives on the X side and u on the Y side".into()));
        }
        if !psi.grid().same_as(u.grid()) {
            return Err(Error::Shape("phi/xi and u use different grids".into()));
        }
        u.edge = 0.0;
        Ok(State { psi, u, dphi_dt: None })
    }

    pub fn from_fns(grid: &Arc<Grid>, psi: impl Fn(f64) -> f64, u: impl Fn(f64) -> f64) -> Result<State> {
        State::new(Field::sample(grid, Side::X, psi, 0.0), Field::sample(grid, Side::Y, u, 0.0))
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.psi.grid()
    }

    pub fn psi_bounds(&self) -> (f64, f64) {
        self.psi.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn check_positive(&self) -> Result<()> {
        for (j, (&x, &v)) in self.psi.nodes().iter().zip(&self.psi.values).enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Degenerate { node: j, xi: x, value: v });
            }
        }
        Ok(())
    }

    /// `xi^k phi = xi^(k+1) psi` on the X side.
    pub fn weighted_phi(&self, k: f64) -> Field {
        let mut f = self.psi.multiply_by_xi_pow(k + 1.0);
        f.edge = 0.0;
        f
    }

    /// `xi^k u` on the Y side.
    pub fn weighted_u(&self, k: f64) -> Field {
        let mut f = self.u.multiply_by_xi_pow(k);
        f.edge = 0.0;
        f.vanish_order = k;
        f
    }

    pub fn from_weighted(phi_w: &Field, u_w: &Field, k: f64) -> Result<State> {
        let psi = phi_w.divide_by_xi_pow(k + 1.0, true)?.with_extrapolated_edge();
        let u = u_w.divide_by_xi_pow(k, true)?;
        let mut psi = psi;
        psi.vanish_order = 0.0;
        let mut u = u;
        u.vanish_order = 0.0;
        State::new(psi, u)
    }

    pub fn to_checkpoint(&self, time: f64) -> Checkpoint {
        Checkpoint {
            time,
            n: self.grid().n(),
            grading: self.grid().grading(),
            vacuum_k: self.grid().vacuum_k(),
            xi_x: self.psi.nodes().to_vec(),
            phi_over_xi: self.psi.values.clone(),
            phi_over_xi_at_zero: self.psi.edge,
            xi_y: self.u.nodes().to_vec(),
            u: self.u.values.clone(),
            dphi_dt: self.dphi_dt.as_ref().map(|f| f.values.clone()),
        }
    }

    pub fn from_checkpoint(cp: &Checkpoint) -> Result<(State, f64)> {
        let grid = grid_for(cp.n, cp.grading, cp.vacuum_k)?;
        if cp.phi_over_xi.len() != cp.n || cp.u.len() != cp.n {
            return Err(Error::Shape("checkpoint columns do not match n".into()));
        }
        let psi = Field::new(grid.clone(), Side::X, cp.phi_over_xi.clone(), cp.phi_over_xi_at_zero, 0.0);
        let u = Field::new(grid.clone(), Side::Y, cp.u.clone(), 0.0, 0.0);
        let mut st = State::new(psi, u)?;
        if let Some(d) = &cp.dphi_dt {
            st.dphi_dt = Some(Field::new(grid, Side::X, d.clone(), 0.0, 1.0));
        }
        Ok((st, cp.time))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub time: f64,
    pub n: usize,
    pub grading: f64,
    #[serde(default)]
    pub vacuum_k: Option<f64>,
    pub xi_x: Vec<f64>,
    pub phi_over_xi: Vec<f64>,
    pub phi_over_xi_at_zero: f64,
    pub xi_y: Vec<f64>,
    pub u: Vec<f64>,
    pub dphi_dt: Option<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_n() {
        assert!(make_grid(7, 1.0).is_err());
        assert!(make_grid(8, 0.5).is_err());
        assert!(make_grid(8, 1.0).is_ok());
    }

    #[test]
    fn weights_sum_to_one() {
        for p in [1.0, 2.0, 3.0] {
            let g = make_grid(37, p).unwrap();
            for side in [Side::X, Side::Y] {
                let s: f64 = g.weights(side).iter().sum::<f64>() + g.edge_weight(side);
                assert!((s - 1.0).abs() < 1e-14, "{side:?} {s}");
            }
        }
    }

    #[test]
    fn nodes_interleave() {
        let g = make_grid(16, 2.0).unwrap();
        let (x, y) = (g.nodes(Side::X), g.nodes(Side::Y));
        for j in 0..16 {
            assert!(y[j] < x[j]);
            if j + 1 < 16 {
                assert!(x[j] < y[j + 1]);
            }
        }
        assert!(y[0] > 0.0 && x[15] < 1.0);
    }

    #[test]
    fn smallest_node_scaling() {
        let g = make_grid(64, 2.0).unwrap();
        let smallest = g.nodes(Side::Y)[0];
        assert!((smallest - (1.0f64 / 129.0).powi(2)).abs() < 1e-15);
        assert!((smallest / (1.0f64 / 128.0).powi(2) - 1.0).abs() < 0.02);
    }

    #[test]
    fn unit_pairing() {
        let g = make_grid(50, 2.0).unwrap();
        for side in [Side::X, Side::Y] {
            let one = Field::sample(&g, side, |_| 1.0, 0.0);
            assert!((one.inner(&one).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn side_mismatch_is_an_error() {
        let g = make_grid(10, 1.0).unwrap();
        let a = Field::zeros(&g, Side::X);
        let b = Field::zeros(&g, Side::Y);
        assert!(a.inner(&b).is_err());
        let g2 = make_grid(12, 1.0).unwrap();
        assert!(a.inner(&Field::zeros(&g2, Side::X)).is_err());
    }

    #[test]
    fn division_rules() {
        let g = make_grid(32, 2.0).unwrap();
        let f = Field::sample(&g, Side::X, |x| x * x, 2.0);
        let q = f.divide_by_xi_pow(1.0, false).unwrap();
        assert_eq!(q.vanish_order, 1.0);
        for (x, v) in q.nodes().iter().zip(&q.values) {
            assert!((v - x).abs() < 1e-15);
        }
        let one = Field::sample(&g, Side::X, |_| 1.0, 0.0);
        assert!(matches!(one.divide_by_xi_pow(1.0, false), Err(Error::WeightedDivision { .. })));
        assert!(one.divide_by_xi_pow(1.0, true).is_ok());
    }

    #[test]
    fn multiply_then_divide_round_trips() {
        let g = make_grid(40, 2.0).unwrap();
        let f = Field::sample(&g, Side::Y, |x| (3.0 * x).cos() + 2.0, 0.0);
        let back = f.multiply_by_xi_pow(1.7).divide_by_xi_pow(1.7, false).unwrap();
        for (a, b) in f.values.iter().zip(&back.values) {
            assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs());
        }
    }

    #[test]
    fn interpolation_is_exact_for_lines() {
        let g = make_grid(20, 2.0).unwrap();
        let f = Field::sample(&g, Side::X, |x| 2.0 - 3.0 * x, 0.0);
        let fy = f.to_side(Side::Y);
        for (x, v) in fy.nodes().iter().zip(&fy.values) {
            assert!((v - (2.0 - 3.0 * x)).abs() < 1e-13);
        }
        assert!((fy.edge - (-1.0)).abs() < 1e-12);
        let back = fy.to_side(Side::X);
        for (x, v) in back.nodes().iter().zip(&back.values) {
            assert!((v - (2.0 - 3.0 * x)).abs() < 1e-13);
        }
        assert!((back.edge - 2.0).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip() {
        let g = make_grid(12, 2.0).unwrap();
        let st = State::from_fns(&g, |x| 1.0 + x * x, |x| 1.0 - x).unwrap();
        let cp = st.to_checkpoint(0.25);
        let text = serde_json::to_string(&cp).unwrap();
        let cp2: Checkpoint = serde_json::from_str(&text).unwrap();
        let (st2, t) = State::from_checkpoint(&cp2).unwrap();
        assert_eq!(t, 0.25);
        assert_eq!(st2.psi.values, st.psi.values);
        assert_eq!(st2.u.values, st.u.values);
    }

    #[test]
    fn vacuum_grid_first_cell() {
        for k in [1.0, 1.5, 2.0] {
            let g = make_vacuum_grid(64, 1.0, k).unwrap();
            for side in [Side::X, Side::Y] {
                let sum: f64 = g.weights(side).iter().sum::<f64>() + g.edge_weight(side);
                assert!((sum - 1.0).abs() < 1e-14);
            }
            let (x0, y0, y1) = (g.nodes(Side::X)[0], g.nodes(Side::Y)[0], g.nodes(Side::Y)[1]);
            // y0^-k (x0^(2k+1) - 0) / x0 = (2k+1) y0^k
            let lhs = y0.powf(-k) * x0.powf(2.0 * k + 1.0) / g.weights(Side::Y)[0];
            assert!((lhs - (2.0 * k + 1.0) * y0.powf(k)).abs() < 1e-12 * lhs);
            assert!((x0 - 0.5 * (y0 + y1)).abs() < 1e-15);
            // beyond the first cell the mesh is untouched
            assert_eq!(g.half_nodes()[3..], make_grid(64, 1.0).unwrap().half_nodes()[3..]);
        }
    }
}
