//! Discrete V and V* on the staggered mesh.
//!
//! `V f = xi^-k d/dxi (a f)` maps X to Y and `V* g = -a d/dxi (xi^-k g)` maps Y to X,
//! with `a = phi^(2k) xi^-k`. Both use the same centred two-point differences across a
//! cell, `a` vanishes at the X boundary node `xi = 0`, and `g(1) = 0` is imposed at the Y
//! boundary node. Summation by parts is then exact: `<V f, g>_Y = <f, V* g>_X` for all
//! grid functions.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Side, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    V,
    Vstar,
}

#[derive(Clone, Debug)]
pub struct OperatorStack {
    grid: Arc<Grid>,
    k: f64,
    psi: Field,
    dphi_dt: Option<Field>,
    a: Vec<f64>,
    inv_xk_y: Vec<f64>,
}

fn same_grid(grid: &Grid, f: &Field, want: Side) -> Result<()> {
    if !grid.same_as(f.grid()) {
        return Err(Error::Shape(format!("field grid n = {} does not match stack n = {}", f.grid().n(), grid.n())));
    }
    if f.side != want {
        return Err(Error::Shape(format!("expected a {want:?}-side field, got {:?}", f.side)));
    }
    Ok(())
}

impl OperatorStack {
    /// Builds the stack from `phi/xi` on the X side.
    pub fn new(psi: &Field, k: f64) -> Result<OperatorStack> {
        if psi.side != Side::X {
            return Err(Error::Shape("phi/xi must live on the X side".into()));
        }
        if !(k > 0.5) {
            return Err(Error::InvalidParameter(format!("k must exceed 1/2, got {k}")));
        }
        let grid = psi.grid().clone();
        let xs = grid.nodes(Side::X);
        let mut a = Vec::with_capacity(xs.len());
        for (j, (&x, &p)) in xs.iter().zip(&psi.values).enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::Degenerate { node: j, xi: x, value: p });
            }
            a.push(p.powf(2.0 * k) * x.powf(k));
        }
        let inv_xk_y = grid.nodes(Side::Y).iter().map(|x| x.powf(-k)).collect();
        Ok(OperatorStack { grid, k, psi: psi.clone(), dphi_dt: None, a, inv_xk_y })
    }

    /// The stack of a state, carrying its cached `d phi/dt` when present.
    pub fn from_state(state: &State, k: f64) -> Result<OperatorStack> {
        let s = OperatorStack::new(&state.psi, k)?;
        match &state.dphi_dt {
            Some(d) => s.with_dphi_dt(d.clone()),
            None => Ok(s),
        }
    }

    /// Homogeneous operators, i.e. `phi = xi`.
    pub fn homogeneous(grid: &Arc<Grid>, k: f64) -> Result<OperatorStack> {
        OperatorStack::new(&Field::sample(grid, Side::X, |_| 1.0, 0.0), k)
    }

    pub fn with_dphi_dt(mut self, dphi_dt: Field) -> Result<OperatorStack> {
        same_grid(&self.grid, &dphi_dt, Side::X)?;
        self.dphi_dt = Some(dphi_dt);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Closure order `ceil(k) + 3`.
    pub fn s(&self) -> usize {
        self.k.ceil() as usize + 3
    }

    pub fn psi(&self) -> &Field {
        &self.psi
    }

    pub fn dphi_dt(&self) -> Option<&Field> {
        self.dphi_dt.as_ref()
    }

    /// `phi^(2k) xi^-k` at the X nodes.
    pub fn weight_a(&self) -> &[f64] {
        &self.a
    }

    pub fn v(&self, f: &Field) -> Result<Field> {
        same_grid(&self.grid, f, Side::X)?;
        let w = self.grid.weights(Side::Y);
        let n = self.grid.n();
        let mut out = vec![0.0; n];
        let mut left = 0.0;
        for j in 0..n {
            let right = self.a[j] * f.values[j];
            out[j] = self.inv_xk_y[j] * (right - left) / w[j];
            left = right;
        }
        let field = Field::new(self.grid.clone(), Side::Y, out, 0.0, (f.vanish_order - 1.0).max(0.0));
        Ok(field.with_extrapolated_edge())
    }

    /// `V* g` with `g(1) = 0` imposed; any nonzero `g.edge` is ignored.
    pub fn vstar(&self, g: &Field) -> Result<Field> {
        same_grid(&self.grid, g, Side::Y)?;
        let w = self.grid.weights(Side::X);
        let n = self.grid.n();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let ql = self.inv_xk_y[j] * g.values[j];
            let qr = if j + 1 < n { self.inv_xk_y[j + 1] * g.values[j + 1] } else { 0.0 };
            out[j] = -self.a[j] * (qr - ql) / w[j];
        }
        Ok(Field::new(self.grid.clone(), Side::X, out, 0.0, vstar_order(g.vanish_order, self.k)))
    }

    /// `V* g` together with the boundary residual `|g(1)|`.
    pub fn vstar_checked(&self, g: &Field) -> Result<(Field, f64)> {
        Ok((self.vstar(g)?, g.edge.abs()))
    }

    /// `(V)^i f` (X input) or `(V*)^i g` (Y input), alternating as in the definition.
    pub fn power(&self, which: Op, i: usize, f: &Field) -> Result<Field> {
        self.power_checked(which, i, f).map(|(out, _)| out)
    }

    /// As `power`, also returning the largest boundary residual met by a V* step.
    pub fn power_checked(&self, which: Op, i: usize, f: &Field) -> Result<(Field, f64)> {
        if i > self.s() {
            return Err(Error::Order { i, s: self.s() });
        }
        let mut cur = f.clone();
        let mut op = which;
        let mut worst = 0.0f64;
        for _ in 0..i {
            cur = match op {
                Op::V => self.v(&cur)?,
                Op::Vstar => {
                    let (out, r) = self.vstar_checked(&cur)?;
                    worst = worst.max(r);
                    out
                }
            };
            op = match op {
                Op::V => Op::Vstar,
                Op::Vstar => Op::V,
            };
        }
        Ok((cur, worst))
    }

    /// All powers `0..=s` of one operator applied to `f`.
    pub fn power_ladder(&self, which: Op, s: usize, f: &Field) -> Result<Vec<Field>> {
        if s > self.s() {
            return Err(Error::Order { i: s, s: self.s() });
        }
        let mut out = vec![f.clone()];
        let mut op = which;
        for _ in 0..s {
            let next = match op {
                Op::V => self.v(out.last().unwrap())?,
                Op::Vstar => self.vstar(out.last().unwrap())?,
            };
            out.push(next);
            op = match op {
                Op::V => Op::Vstar,
                Op::Vstar => Op::V,
            };
        }
        Ok(out)
    }

    /// `2k phi^(2k-1) phi_t xi^-k` at the X nodes.
    fn commutator_weight(&self) -> Result<Vec<f64>> {
        let d = self.dphi_dt.as_ref().ok_or(Error::MissingTimeDerivative)?;
        let k = self.k;
        Ok(self
            .grid
            .nodes(Side::X)
            .iter()
            .zip(&self.psi.values)
            .zip(&d.values)
            .map(|((&x, &p), &dt)| 2.0 * k * (x * p).powf(2.0 * k - 1.0) * dt * x.powf(-k))
            .collect())
    }

    /// `V_t f = 2k xi^-k d/dxi (phi^(2k-1) phi_t xi^-k f)`.
    pub fn vt(&self, f: &Field) -> Result<Field> {
        same_grid(&self.grid, f, Side::X)?;
        let b = self.commutator_weight()?;
        let w = self.grid.weights(Side::Y);
        let mut out = vec![0.0; self.grid.n()];
        let mut left = 0.0;
        for j in 0..out.len() {
            let right = b[j] * f.values[j];
            out[j] = self.inv_xk_y[j] * (right - left) / w[j];
            left = right;
        }
        let field = Field::new(self.grid.clone(), Side::Y, out, 0.0, (f.vanish_order - 1.0).max(0.0));
        Ok(field.with_extrapolated_edge())
    }

    /// `V_t* g = -2k phi^(2k-1) phi_t xi^-k d/dxi (xi^-k g)`.
    pub fn vt_star(&self, g: &Field) -> Result<Field> {
        same_grid(&self.grid, g, Side::Y)?;
        let b = self.commutator_weight()?;
        let w = self.grid.weights(Side::X);
        let n = self.grid.n();
        let mut out = vec![0.0; n];
        for j in 0..n {
            let ql = self.inv_xk_y[j] * g.values[j];
            let qr = if j + 1 < n { self.inv_xk_y[j + 1] * g.values[j + 1] } else { 0.0 };
            out[j] = -b[j] * (qr - ql) / w[j];
        }
        Ok(Field::new(self.grid.clone(), Side::X, out, 0.0, vstar_order(g.vanish_order, self.k)))
    }

    /// V* from its expanded form `-a (xi^-k g' - k xi^(-k-1) g)`, differencing `g` itself.
    pub fn vstar_expanded(&self, g: &Field) -> Result<Field> {
        same_grid(&self.grid, g, Side::Y)?;
        let h = self.grid.half_nodes();
        let n = self.grid.n();
        let k = self.k;
        let mut out = vec![0.0; n];
        for j in 0..n {
            let (xl, x, xr) = (h[2 * j + 1], h[2 * j + 2], h[2 * j + 3]);
            let gl = g.values[j];
            let gr = if j + 1 < n { g.values[j + 1] } else { 0.0 };
            let dg = (gr - gl) / (xr - xl);
            let gm = gl + (x - xl) / (xr - xl) * (gr - gl);
            out[j] = -self.a[j] * (x.powf(-k) * dg - k * x.powf(-k - 1.0) * gm);
        }
        Ok(Field::new(self.grid.clone(), Side::X, out, 0.0, vstar_order(g.vanish_order, k)))
    }

    /// Exact inverse of V: the X field `f` with `V f = g`, anchored at `xi = 0`.
    pub fn v_inverse(&self, g: &Field) -> Result<Field> {
        same_grid(&self.grid, g, Side::Y)?;
        let w = self.grid.weights(Side::Y);
        let mut acc = 0.0;
        let out = (0..self.grid.n())
            .map(|j| {
                acc += w[j] * g.values[j] / self.inv_xk_y[j];
                acc / self.a[j]
            })
            .collect();
        Ok(Field::new(self.grid.clone(), Side::X, out, 0.0, g.vanish_order + 1.0))
    }

    /// Exact inverse of V*: the Y field `g` with `g(1) = 0` and `V* g = f`.
    pub fn vstar_inverse(&self, f: &Field) -> Result<Field> {
        same_grid(&self.grid, f, Side::X)?;
        let w = self.grid.weights(Side::X);
        let n = self.grid.n();
        let mut out = vec![0.0; n];
        let mut q = 0.0;
        for j in (0..n).rev() {
            q += w[j] * f.values[j] / self.a[j];
            out[j] = q / self.inv_xk_y[j];
        }
        let order = if f.vanish_order >= self.k + 1.0 { self.k } else { 0.0 };
        Ok(Field::new(self.grid.clone(), Side::Y, out, 0.0, order))
    }

    /// Sparse V as `(row, col, value)` triplets; rows are Y nodes, columns X nodes.
    pub fn v_triplets(&self) -> Vec<(usize, usize, f64)> {
        let w = self.grid.weights(Side::Y);
        let mut out = Vec::with_capacity(2 * self.grid.n());
        for j in 0..self.grid.n() {
            let c = self.inv_xk_y[j] / w[j];
            if j > 0 {
                out.push((j, j - 1, -c * self.a[j - 1]));
            }
            out.push((j, j, c * self.a[j]));
        }
        out
    }

    /// Sparse V* as `(row, col, value)` triplets; rows are X nodes, columns Y nodes.
    pub fn vstar_triplets(&self) -> Vec<(usize, usize, f64)> {
        let w = self.grid.weights(Side::X);
        let n = self.grid.n();
        let mut out = Vec::with_capacity(2 * n);
        for j in 0..n {
            let c = self.a[j] / w[j];
            out.push((j, j, c * self.inv_xk_y[j]));
            if j + 1 < n {
                out.push((j, j + 1, -c * self.inv_xk_y[j + 1]));
            }
        }
        out
    }

    /// Smallest singular value of V as a map between the weighted spaces.
    pub fn smallest_singular_value(&self) -> f64 {
        let n = self.grid.n();
        let wx = self.grid.weights(Side::X);
        let wy = self.grid.weights(Side::Y);
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (r, c, v) in self.v_triplets() {
            m[(r, c)] = wy[r].sqrt() * v / wx[c].sqrt();
        }
        m.singular_values().min()
    }
}

fn vstar_order(m: f64, k: f64) -> f64 {
    if (m - k).abs() < 1e-9 { k } else { (m - 1.0).max(0.0) }
}

pub fn apply_v(stack: &OperatorStack, f: &Field) -> Result<Field> {
    stack.v(f)
}

pub fn apply_vstar(stack: &OperatorStack, g: &Field) -> Result<Field> {
    stack.vstar(g)
}

pub fn apply_power(stack: &OperatorStack, which: Op, i: usize, f: &Field) -> Result<Field> {
    stack.power(which, i, f)
}

pub fn apply_vbar(grid: &Arc<Grid>, k: f64, f: &Field) -> Result<Field> {
    OperatorStack::homogeneous(grid, k)?.v(f)
}

pub fn apply_vbar_star(grid: &Arc<Grid>, k: f64, g: &Field) -> Result<Field> {
    OperatorStack::homogeneous(grid, k)?.vstar(g)
}

pub fn commutator_vt(stack: &OperatorStack, f: &Field) -> Result<Field> {
    stack.vt(f)
}

pub fn commutator_vt_star(stack: &OperatorStack, g: &Field) -> Result<Field> {
    stack.vt_star(g)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdentityResidual {
    pub name: String,
    pub max_abs: f64,
    pub l2: f64,
    /// Size of the largest term, for judging round-off.
    pub scale: f64,
}

impl IdentityResidual {
    pub fn new(name: &str, residual: &Field, scale: f64) -> IdentityResidual {
        let max_abs = residual.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l2 = residual.norm();
        IdentityResidual { name: name.to_string(), max_abs, l2, scale }
    }

    /// Whether the identity holds to round-off rather than to truncation order.
    pub fn is_exact(&self) -> bool {
        self.max_abs <= 1e-11 * self.scale.max(1.0)
    }
}

fn scale_of(fields: &[&Field]) -> f64 {
    fields.iter().map(|f| f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max)
}

/// Centred difference of an X field across each Y cell (uses the value at xi = 0).
fn diff_x_to_y(f: &Field) -> Vec<f64> {
    let g = f.grid();
    let w = g.weights(Side::Y);
    (0..g.n())
        .map(|j| {
            let l = if j == 0 { f.edge } else { f.values[j - 1] };
            (f.values[j] - l) / w[j]
        })
        .collect()
}

/// Centred difference of a Y field across each X cell (uses the value at xi = 1).
fn diff_y_to_x(f: &Field) -> Vec<f64> {
    let g = f.grid();
    let w = g.weights(Side::X);
    let n = g.n();
    (0..n)
        .map(|j| {
            let r = if j + 1 < n { f.values[j + 1] } else { f.edge };
            (r - f.values[j]) / w[j]
        })
        .collect()
}

fn from_vals(grid: &Arc<Grid>, side: Side, v: Vec<f64>) -> Field {
    Field::new(grid.clone(), side, v, 0.0, 0.0).with_extrapolated_edge()
}

/// Residuals of the product rules, the homogeneous rules and the commutator identities.
///
/// `f` and `h` should vanish at `xi = 0` to order at least `k`, and `f`, `g` should
/// vanish at `xi = 1`; the stack needs `phi_t` for the commutator entries.
pub fn product_rule_residuals(
    stack: &OperatorStack,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    h: &dyn Fn(f64) -> f64,
) -> Result<Vec<IdentityResidual>> {
    let grid = stack.grid().clone();
    let k = stack.k();
    let c = 2.0 * k / (2.0 * k + 1.0);
    let sample = |fun: &dyn Fn(f64) -> f64, side| Field::sample(&grid, side, fun, 0.0);
    let (fx, fy) = (sample(f, Side::X), sample(f, Side::Y));
    let (gx, gy) = (sample(g, Side::X), sample(g, Side::Y));
    let (hx, hy) = (sample(h, Side::X), sample(h, Side::Y));
    let xs = grid.nodes(Side::X).to_vec();
    let ys = grid.nodes(Side::Y).to_vec();

    let psi_x = stack.psi().clone();
    let psi_y = psi_x.to_side(Side::Y);
    let phi_x = psi_x.multiply_by_xi_pow(1.0);
    let dphi_y = diff_x_to_y(&phi_x.clone().with_edge(0.0));
    let phi_y: Vec<f64> = ys.iter().zip(&psi_y.values).map(|(x, p)| x * p).collect();
    let p2k_x: Vec<f64> = psi_x.values.iter().map(|p| p.powf(2.0 * k)).collect();
    let p2k_y: Vec<f64> = psi_y.values.iter().map(|p| p.powf(2.0 * k)).collect();
    let mut out = Vec::new();

    // V* f + V f = (2k/(2k+1)) (V(xi^k phi)/xi^k) (f/phi), compared on the X side.
    {
        let lhs = stack.vstar(&fy)?;
        let vf = stack.v(&fx)?;
        let vphi = stack.v(&psi_x.multiply_by_xi_pow(k + 1.0).with_edge(0.0))?;
        let rhs_y: Vec<f64> = (0..ys.len())
            .map(|j| -vf.values[j] + c * vphi.values[j] / ys[j].powf(k) * fy.values[j] / phi_y[j])
            .collect();
        let rhs = from_vals(&grid, Side::Y, rhs_y).to_side(Side::X);
        out.push(IdentityResidual::new("vstar_plus_v", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vf])));
    }
    // V(f h) = V(f) h + f psi^2k h'.
    {
        let fh = fx.mul(&hx)?;
        let lhs = stack.v(&fh)?;
        let vf = stack.v(&fx)?;
        let dh = diff_x_to_y(&hx);
        let rhs: Vec<f64> =
            (0..ys.len()).map(|j| vf.values[j] * hy.values[j] + fy.values[j] * p2k_y[j] * dh[j]).collect();
        let rhs = from_vals(&grid, Side::Y, rhs);
        out.push(IdentityResidual::new("v_of_product", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vf])));
    }
    // V*(g h) = V*(g) h - g psi^2k h'.
    {
        let gh = gy.mul(&hy)?;
        let lhs = stack.vstar(&gh)?;
        let vg = stack.vstar(&gy)?;
        let dh = diff_y_to_x(&hy);
        let rhs: Vec<f64> =
            (0..xs.len()).map(|j| vg.values[j] * hx.values[j] - gx.values[j] * p2k_x[j] * dh[j]).collect();
        let rhs = Field::new(grid.clone(), Side::X, rhs, 0.0, 0.0);
        out.push(IdentityResidual::new("vstar_of_product", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vg])));
    }
    // psi^2k f' = V f + k psi^2k (1/xi - 2 phi'/phi) f.
    {
        let df = diff_x_to_y(&fx.clone().with_edge(0.0));
        let lhs: Vec<f64> = (0..ys.len()).map(|j| p2k_y[j] * df[j]).collect();
        let vh = stack.v(&fx)?;
        let rhs: Vec<f64> = (0..ys.len())
            .map(|j| vh.values[j] + k * p2k_y[j] * (1.0 / ys[j] - 2.0 * dphi_y[j] / phi_y[j]) * fy.values[j])
            .collect();
        let lhs = from_vals(&grid, Side::Y, lhs);
        let rhs = from_vals(&grid, Side::Y, rhs);
        out.push(IdentityResidual::new("weighted_derivative_v", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vh])));
    }
    // psi^2k g' = -V* g + k psi^2k g / xi.
    {
        let dg = diff_y_to_x(&gy.clone().with_edge(0.0));
        let lhs: Vec<f64> = (0..xs.len()).map(|j| p2k_x[j] * dg[j]).collect();
        let vh = stack.vstar(&gy)?;
        let rhs: Vec<f64> =
            (0..xs.len()).map(|j| -vh.values[j] + k * p2k_x[j] * gx.values[j] / xs[j]).collect();
        let lhs = Field::new(grid.clone(), Side::X, lhs, 0.0, 0.0);
        let rhs = Field::new(grid.clone(), Side::X, rhs, 0.0, 0.0);
        out.push(IdentityResidual::new("weighted_derivative_vstar", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vh])));
    }
    // psi^2k (f g)' = V(f) g - f V*(g) + 2k psi^2k (1/xi - phi'/phi) f g.
    {
        let fgx = fx.mul(&gx)?;
        let d = diff_x_to_y(&fgx);
        let lhs: Vec<f64> = (0..ys.len()).map(|j| p2k_y[j] * d[j]).collect();
        let vf = stack.v(&fx)?;
        let vsg = stack.vstar(&gy)?.to_side(Side::Y);
        let rhs: Vec<f64> = (0..ys.len())
            .map(|j| {
                vf.values[j] * gy.values[j] - fy.values[j] * vsg.values[j]
                    + 2.0 * k * p2k_y[j] * (1.0 / ys[j] - dphi_y[j] / phi_y[j]) * fy.values[j] * gy.values[j]
            })
            .collect();
        let lhs = from_vals(&grid, Side::Y, lhs);
        let rhs = from_vals(&grid, Side::Y, rhs);
        out.push(IdentityResidual::new("weighted_derivative_of_product", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vf])));
    }
    // Homogeneous versions.
    let bar = OperatorStack::homogeneous(&grid, k)?;
    {
        let lhs = bar.vstar(&fy)?;
        let vf = bar.v(&fx)?;
        let rhs_y: Vec<f64> = (0..ys.len()).map(|j| -vf.values[j] + 2.0 * k * fy.values[j] / ys[j]).collect();
        let rhs = from_vals(&grid, Side::Y, rhs_y).to_side(Side::X);
        out.push(IdentityResidual::new("vbar_star_plus_vbar", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vf])));
    }
    {
        let lhs = bar.v(&fx.mul(&hx)?)?;
        let vf = bar.v(&fx)?;
        let dh = diff_x_to_y(&hx);
        let rhs: Vec<f64> = (0..ys.len()).map(|j| vf.values[j] * hy.values[j] + fy.values[j] * dh[j]).collect();
        let rhs = from_vals(&grid, Side::Y, rhs);
        out.push(IdentityResidual::new("vbar_of_product", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vf])));
    }
    {
        let lhs = bar.vstar(&gy.mul(&hy)?)?;
        let vg = bar.vstar(&gy)?;
        let dh = diff_y_to_x(&hy);
        let rhs: Vec<f64> = (0..xs.len()).map(|j| vg.values[j] * hx.values[j] - gx.values[j] * dh[j]).collect();
        let rhs = Field::new(grid.clone(), Side::X, rhs, 0.0, 0.0);
        out.push(IdentityResidual::new("vbar_star_of_product", &lhs.sub(&rhs)?, scale_of(&[&lhs, &vg])));
    }
    // V(xi^k phi) = (2k+1) phi^2k xi^-k phi'.
    {
        let lhs = stack.v(&psi_x.multiply_by_xi_pow(k + 1.0).with_edge(0.0))?;
        let rhs: Vec<f64> = (0..ys.len())
            .map(|j| (2.0 * k + 1.0) * phi_y[j].powf(2.0 * k) * ys[j].powf(-k) * dphi_y[j])
            .collect();
        let rhs = from_vals(&grid, Side::Y, rhs);
        out.push(IdentityResidual::new("v_of_weighted_phi", &lhs.sub(&rhs)?, scale_of(&[&lhs])));
    }
    // Commutators.
    if let Some(dphi) = stack.dphi_dt() {
        let r: Vec<f64> = (0..xs.len()).map(|j| dphi.values[j] / (xs[j] * psi_x.values[j])).collect();
        let vtg = stack.vt_star(&gy)?;
        let vsg = stack.vstar(&gy)?;
        let rhs: Vec<f64> = (0..xs.len()).map(|j| 2.0 * k * r[j] * vsg.values[j]).collect();
        let rhs = Field::new(grid.clone(), Side::X, rhs, 0.0, 0.0);
        out.push(IdentityResidual::new("vt_star", &vtg.sub(&rhs)?, scale_of(&[&vtg, &rhs])));
        let lhs = stack.v(&vtg)?;
        let rhs = stack.vt(&vsg)?;
        out.push(IdentityResidual::new("v_vt_star", &lhs.sub(&rhs)?, scale_of(&[&lhs, &rhs])));
    }
    Ok(out)
}
