//! Picard iteration on the third-order quantities
//! `G = V V* V (xi^k phi)` (Y side) and `F = V* V V* (xi^k u)` (X side).
//!
//! Each iterate solves the linear system
//!
//! ```text
//! dG/dt - (2k+1) V_n F = J1,    dF/dt + (1/(2k+1)) V_n* G = J2
//! ```
//!
//! on the operators of the previous iterate, then recovers `D = V(xi^k phi)`,
//! `H = V*(xi^k u)`, `phi` and `u` by inverting V and V* with cumulative sums anchored
//! at `xi = 0` (for V) and `xi = 1` (for V*). The sums are the exact discrete inverses,
//! so the recovered fields satisfy `V_{n+1}(xi^k phi_{n+1}) = D_{n+1}` to round-off.

use serde::{Deserialize, Serialize};

use crate::coords::Params;
use crate::error::{Error, Result};
use crate::grid::{Field, Side, State};
use crate::norms::{approx_energy, diff_functional};
use crate::operators::OperatorStack;

use super::linear::{skew_midpoint, SkewSystem};
use super::{ratio_fields, with_time_derivative, RatioFields};

/// How `(phi, u)` are recovered from `(G, F)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionMode {
    /// Invert with the operators of the previous iterate. At fixed `G` this maps
    /// `phi_n` to `phi_{n+1}` with slope `-4k/(2k+1)` on smooth modes, so the outer
    /// iteration cannot contract for `k > 1/2`.
    Lagged,
    /// Solve `V V* V (xi^k phi) = G` with the operators of `phi` itself.
    #[default]
    SelfConsistent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub params: Params,
    pub dt: f64,
    /// Length of the time interval the iteration runs on.
    pub horizon: f64,
    pub n_max: usize,
    /// Stop once the difference functional to the previous iterate falls below this.
    pub tol: f64,
    #[serde(default)]
    pub reconstruction: ReconstructionMode,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub d: Field,
    pub h: Field,
    /// `(phi/xi, u)` with `d phi/dt = H / xi^k` attached.
    pub state: State,
}

/// Recovers `(D, H, phi, u)` from `(G, F)` using the operators of `stack`.
pub fn reconstruct(stack: &OperatorStack, g_next: &Field, f_next: &Field) -> Result<Reconstruction> {
    if g_next.side != Side::Y || f_next.side != Side::X {
        return Err(Error::Shape("G lives on the Y side and F on the X side".into()));
    }
    if !g_next.is_finite() || !f_next.is_finite() {
        return Err(Error::InvalidInput("non-finite G or F".into()));
    }
    let grid = stack.grid().clone();
    let k = stack.k();
    let n = grid.n();
    let xs = grid.nodes(Side::X);
    let ys = grid.nodes(Side::Y);
    let (wx, wy) = (grid.weights(Side::X), grid.weights(Side::Y));
    let yk: Vec<f64> = ys.iter().map(|y| y.powf(k)).collect();

    let p = stack.v_inverse(g_next)?;
    let d = stack.vstar_inverse(&p)?.values;
    let r = stack.vstar_inverse(f_next)?;
    let h = stack.v_inverse(&r)?.values;

    let mut acc = 0.0;
    let mut psi = Vec::with_capacity(n);
    for j in 0..n {
        acc += wy[j] * yk[j] * d[j];
        if !(acc >= 1e-8 * xs[j].powf(2.0 * k + 1.0)) {
            return Err(Error::Reconstruction { node: j, xi: xs[j] });
        }
        psi.push(acc.powf(1.0 / (2.0 * k + 1.0)) / xs[j]);
    }
    let psi = Field::new(grid.clone(), Side::X, psi, 0.0, 0.0).with_extrapolated_edge();
    let a_next: Vec<f64> = (0..n).map(|j| psi.values[j].powf(2.0 * k) * xs[j].powf(k)).collect();
    let mut u = vec![0.0; n];
    let mut cur = 0.0;
    for j in (0..n).rev() {
        cur += wx[j] * h[j] / a_next[j];
        u[j] = cur;
    }
    let d = Field::new(grid.clone(), Side::Y, d, 0.0, 0.0);
    let h = Field::new(grid.clone(), Side::X, h, 0.0, 0.0);
    let phi_t = h.divide_by_xi_pow(k, true)?.with_edge(0.0);
    let mut state = State::new(psi, Field::new(grid, Side::Y, u, 0.0, 0.0))?;
    state.dphi_dt = Some(phi_t);
    Ok(Reconstruction { d, h, state })
}

/// [`reconstruct`] with the operators of the recovered `phi` rather than of `stack`.
///
/// The lagged map is relaxed with weight `2/(2 + c)`, `c = 4k/(2k+1)`, which turns its
/// slope on smooth modes into a contraction by `c/(2 + c)`.
pub fn reconstruct_self_consistent(stack: &OperatorStack, g_next: &Field, f_next: &Field) -> Result<Reconstruction> {
    let k = stack.k();
    let c = 4.0 * k / (2.0 * k + 1.0);
    let omega = 2.0 / (2.0 + c);
    let mut cur = stack.clone();
    let mut last = f64::INFINITY;
    for _ in 0..200 {
        let rec = reconstruct(&cur, g_next, f_next)?;
        let old = cur.psi();
        let mut change = 0.0f64;
        let psi: Vec<f64> = old
            .values
            .iter()
            .zip(&rec.state.psi.values)
            .map(|(a, b)| {
                let step = omega * (b.ln() - a.ln());
                change = change.max(step.abs());
                a * step.exp()
            })
            .collect();
        if change <= 1e-14 {
            return Ok(rec);
        }
        if !(change < 10.0 * last.min(1.0)) {
            break;
        }
        last = change;
        let psi = Field::new(old.grid().clone(), Side::X, psi, 0.0, 0.0).with_extrapolated_edge();
        cur = OperatorStack::new(&psi, k)?;
    }
    Err(Error::InvalidInput(format!("self-consistent reconstruction stalled at change {last:e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub n: usize,
    /// Largest approximate energy over the time interval.
    pub approx_energy: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    /// Largest difference functional to the previous iterate; absent for the seed.
    pub diff_to_previous: Option<f64>,
    /// Largest `||(V)^3 Phi - G|| + ||(V*)^3 U - F||` over the interval.
    pub fg_residual: f64,
    /// Largest relative residual of `V(xi^k phi) = D` and `V*(xi^k u) = H`.
    pub identity_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterateRecord>,
    pub converged: bool,
}

impl IterationTrace {
    pub fn diffs(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.diff_to_previous).collect()
    }
}

/// One iterate on the whole time grid.
#[derive(Clone, Debug)]
pub struct Iterate {
    pub states: Vec<State>,
    pub d: Vec<Field>,
    pub h: Vec<Field>,
    pub g: Vec<Field>,
    pub f: Vec<Field>,
}

#[derive(Clone, Debug)]
pub struct PicardResult {
    pub trace: IterationTrace,
    pub times: Vec<f64>,
    pub last: Iterate,
}

impl PicardResult {
    pub fn final_state(&self) -> &State {
        self.last.states.last().expect("time grid is non-empty")
    }
}

fn stack_of(state: &State, k: f64) -> Result<OperatorStack> {
    OperatorStack::from_state(state, k)
}

/// Source terms `(J1, J2)` of the linear system built from one time level of an iterate.
fn sources(stack: &OperatorStack, state: &State, d: &Field, g: &Field, f: &Field) -> Result<(Field, Field)> {
    let k = stack.k();
    let grid = stack.grid().clone();
    let n = grid.n();
    let xs = grid.nodes(Side::X);
    let ys = grid.nodes(Side::Y);
    let phi_t = state.dphi_dt.as_ref().ok_or(Error::MissingTimeDerivative)?;
    let RatioFields { r, dr_y, t3, .. } = ratio_fields(&state.psi, phi_t, k);
    let r_y = r.to_side(Side::Y);
    let dr_x = dr_y.to_side(Side::X);
    let vsd = stack.vstar(d)?;
    let vsd_y = vsd.to_side(Side::Y);
    let psi_y = state.psi.to_side(Side::Y);
    let c = 4.0 * k;
    let j1: Vec<f64> = (0..n)
        .map(|j| {
            let phi = ys[j] * psi_y.values[j];
            c * r_y.values[j] * g.values[j]
                + c * phi.powf(2.0 * k) * ys[j].powf(-2.0 * k) * dr_y.values[j] * vsd_y.values[j]
        })
        .collect();
    let j2: Vec<f64> = (0..n)
        .map(|j| {
            let phi = xs[j] * state.psi.values[j];
            let rj = r.values[j];
            2.0 * k * rj * f.values[j] + c * rj * rj * vsd.values[j]
                - 8.0 * k * phi.powf(4.0 * k + 1.0) * xs[j].powf(-3.0 * k) * dr_x.values[j].powi(2)
                + 8.0 * k * rj * t3.values[j]
        })
        .collect();
    Ok((Field::new(grid.clone(), Side::Y, j1, 0.0, 0.0), Field::new(grid, Side::X, j2, 0.0, 0.0)))
}

fn seed(initial: &State, k: f64, steps: usize) -> Result<Iterate> {
    let st = with_time_derivative(initial, k)?;
    let stack = stack_of(&st, k)?;
    let d = stack.v(&st.weighted_phi(k))?;
    let h = stack.vstar(&st.weighted_u(k))?;
    let g = stack.v(&stack.vstar(&d)?)?.with_edge(0.0);
    let f = stack.vstar(&stack.v(&h)?)?;
    Ok(Iterate {
        states: vec![st; steps + 1],
        d: vec![d; steps + 1],
        h: vec![h; steps + 1],
        g: vec![g; steps + 1],
        f: vec![f; steps + 1],
    })
}

fn summarize(k: f64, it: &Iterate, stacks_prev: &[OperatorStack], prev: Option<&Iterate>, n: usize) -> Result<IterateRecord> {
    let mut e = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut diff = 0.0f64;
    let mut fg = 0.0f64;
    let mut ident = 0.0f64;
    for m in 0..it.states.len() {
        let st = &it.states[m];
        let stack = stack_of(st, k)?;
        e = e.max(approx_energy(&stacks_prev[m], &it.g[m], &it.f[m])?);
        let (a, b) = st.psi_bounds();
        lo = lo.min(a);
        hi = hi.max(b);
        if let Some(p) = prev {
            let ps = stack_of(&p.states[m], k)?;
            diff = diff.max(diff_functional(&stack, &ps, st, &p.states[m])?.d_value);
        }
        let pw = st.weighted_phi(k);
        let uw = st.weighted_u(k);
        let v3 = stack.power(crate::operators::Op::V, 3, &pw)?;
        let s3 = stack.power(crate::operators::Op::Vstar, 3, &uw)?;
        fg = fg.max(v3.sub(&it.g[m])?.with_edge(0.0).norm() + s3.sub(&it.f[m])?.norm());
        let vd = stack.v(&pw)?;
        let vh = stack.vstar(&uw)?;
        let rd = vd.sub(&it.d[m])?.with_edge(0.0).max_abs() / it.d[m].max_abs().max(1e-300);
        let rh = vh.sub(&it.h[m])?.max_abs() / it.h[m].max_abs().max(1e-300);
        ident = ident.max(rd).max(if it.h[m].max_abs() > 0.0 { rh } else { 0.0 });
    }
    Ok(IterateRecord {
        n,
        approx_energy: e,
        psi_min: lo,
        psi_max: hi,
        diff_to_previous: prev.map(|_| diff),
        fg_residual: fg,
        identity_residual: ident,
    })
}

/// Runs the iteration from `initial` on `[0, horizon]`.
///
/// A degenerate reconstruction is an error; a trace that fails to converge is returned.
pub fn picard_iterate(cfg: &PicardConfig, initial: &State) -> Result<PicardResult> {
    cfg.params.validate()?;
    if !(cfg.dt > 0.0) || !(cfg.horizon > 0.0) {
        return Err(Error::Config(format!("dt and horizon must be positive (dt = {}, horizon = {})", cfg.dt, cfg.horizon)));
    }
    initial.check_positive()?;
    let k = cfg.params.k();
    let steps = (cfg.horizon / cfg.dt).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=steps).map(|m| m as f64 * cfg.dt).collect();
    let sys = SkewSystem { alpha: -1.0 / (2.0 * k + 1.0), beta: 2.0 * k + 1.0 };

    let mut cur = seed(initial, k, steps)?;
    let stacks0: Vec<OperatorStack> = cur.states.iter().map(|s| stack_of(s, k)).collect::<Result<_>>()?;
    let mut records = vec![summarize(k, &cur, &stacks0, None, 0)?];
    let (g0, f0) = (cur.g[0].clone(), cur.f[0].clone());
    let mut converged = false;

    for it in 1..=cfg.n_max {
        let wrap = |e: Error| Error::Iteration { iterate: it, source: Box::new(e) };
        let stacks: Vec<OperatorStack> = cur.states.iter().map(|s| stack_of(s, k)).collect::<Result<_>>()?;
        let mids: Vec<OperatorStack> = (0..steps)
            .map(|m| {
                let psi = cur.states[m].psi.add(&cur.states[m + 1].psi)?.scale(0.5);
                OperatorStack::new(&psi, k)
            })
            .collect::<Result<_>>()
            .map_err(wrap)?;
        let mut j1 = Vec::with_capacity(steps + 1);
        let mut j2 = Vec::with_capacity(steps + 1);
        for m in 0..=steps {
            let (a, b) = sources(&stacks[m], &cur.states[m], &cur.d[m], &cur.g[m], &cur.f[m]).map_err(wrap)?;
            j1.push(a);
            j2.push(b);
        }
        let (fs, gs) = skew_midpoint(sys, &mids, cfg.dt, &f0, &g0, &j2, &j1).map_err(wrap)?;
        let mut next = Iterate { states: vec![], d: vec![], h: vec![], g: gs, f: fs };
        for m in 0..=steps {
            let rec = match cfg.reconstruction {
                ReconstructionMode::Lagged => reconstruct(&stacks[m], &next.g[m], &next.f[m]),
                ReconstructionMode::SelfConsistent => reconstruct_self_consistent(&stacks[m], &next.g[m], &next.f[m]),
            }
            .map_err(wrap)?;
            next.states.push(rec.state);
            next.d.push(rec.d);
            next.h.push(rec.h);
        }
        let record = summarize(k, &next, &stacks, Some(&cur), it).map_err(wrap)?;
        let done = record.diff_to_previous.is_some_and(|d| d <= cfg.tol);
        records.push(record);
        cur = next;
        if done {
            converged = true;
            break;
        }
    }
    Ok(PicardResult { trace: IterationTrace { records, converged }, times, last: cur })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn zero_g_is_degenerate() {
        let g = make_grid(32, 2.0).unwrap();
        let bar = OperatorStack::homogeneous(&g, 1.0).unwrap();
        let r = reconstruct(&bar, &Field::zeros(&g, Side::Y), &Field::zeros(&g, Side::X));
        assert!(matches!(r, Err(Error::Reconstruction { node: 0, .. })));
    }

    #[test]
    fn reconstruction_inverts_the_operators() {
        let g = make_grid(48, 2.0).unwrap();
        let st = State::from_fns(&g, |x| 1.0 + 0.1 * x * x, |x| 0.05 * (1.0 - x * x).powi(4)).unwrap();
        let k = 1.0;
        let s = OperatorStack::from_state(&st, k).unwrap();
        let d = s.v(&st.weighted_phi(k)).unwrap();
        let h = s.vstar(&st.weighted_u(k)).unwrap();
        let gg = s.v(&s.vstar(&d).unwrap()).unwrap();
        let ff = s.vstar(&s.v(&h).unwrap()).unwrap();
        let rec = reconstruct(&s, &gg, &ff).unwrap();
        for (a, b) in rec.state.psi.values.iter().zip(&st.psi.values) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
        for (a, b) in rec.state.u.values.iter().zip(&st.u.values) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(rec.state.u.edge, 0.0);
    }

    #[test]
    fn zero_iterations_return_the_seed() {
        let g = make_grid(32, 2.0).unwrap();
        let st = State::from_fns(&g, |x| 1.0 + 0.1 * x * x, |x| 0.05 * (1.0 - x * x).powi(4)).unwrap();
        let cfg = PicardConfig { params: Params::normalized(3.0).unwrap(), dt: 0.01, horizon: 0.05, n_max: 0, tol: 0.0, reconstruction: ReconstructionMode::Lagged };
        let res = picard_iterate(&cfg, &st).unwrap();
        assert_eq!(res.trace.records.len(), 1);
        assert_eq!(res.final_state().psi.values, st.psi.values);
        assert!(res.trace.records[0].diff_to_previous.is_none());
    }
}
