//! The verification suite: ten properties of the discretization, each measured at two
//! or more resolutions and judged against fixed tolerances.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coords::Params;
use crate::error::Result;
use crate::evolution::{
    picard_iterate, simulate, solve_linear, ti_diagnostics, with_time_derivative, PicardConfig, PicardResult, RunConfig,
    Scheme,
};
use crate::grid::{default_grading, make_vacuum_grid, Field, Side, State};
use crate::norms::{diff_functional, norm_equivalence_ratio, space_norm};
use crate::operators::{product_rule_residuals, OperatorStack};
use crate::profile::EvenProfile;

use super::fields::{rng, Background, TestField};
use super::{builtin, builtin_scenarios, PicardSettings, Scenario};

pub const ADJOINT_PAIRS: usize = 200;
pub const ADJOINT_TOL: f64 = 1e-12;
/// Refinement ratio of a second-order quantity when `n` doubles.
pub const RATIO_BAND: (f64, f64) = (3.5, 4.5);
pub const DRIFT_TOL: f64 = 1e-8;
pub const RK4_STEPS: [f64; 3] = [2e-3, 1e-3, 5e-4];
pub const RK4_MIN_ORDER: f64 = 3.5;
pub const T_STAR_CHANGE: f64 = 0.2;
pub const SUITE_FIELDS: usize = 100;
pub const MAX_CHANGE: f64 = 0.1;
pub const PICARD_FACTOR: f64 = 2.0;
pub const PICARD_RUN: usize = 4;
pub const PICARD_D_FACTOR: f64 = 5.0;
pub const UNIT_TOL: f64 = 1e-12;
pub const ZERO_TOL: f64 = 1e-14;
pub const BOUNDARY_SLACK: f64 = 1e-3;

const COARSE: usize = 128;
const FINE: usize = 256;

pub const NAMES: [&str; 10] = [
    "adjoint identity",
    "zeroth-energy conservation",
    "energy certification",
    "hardy and embedding ratios",
    "product rules and commutators",
    "T_i representation",
    "picard scheme",
    "norm equivalence",
    "linear-solver stability",
    "boundary tracking",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub pass: bool,
    /// One line per check, prefixed `ok` or `FAIL`.
    pub checks: Vec<String>,
    pub measured: BTreeMap<String, f64>,
    pub elapsed_s: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        let failed: Vec<&str> = self.checks.iter().filter(|c| c.starts_with("FAIL")).map(|s| s.as_str()).collect();
        let mut line = format!(
            "criterion {}: {} {} ({:.1}s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed_s
        );
        if !failed.is_empty() {
            line.push_str(": ");
            line.push_str(&failed.join("; "));
        }
        line
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub results: Vec<CriterionResult>,
    pub passed: bool,
}

#[derive(Default)]
struct Tally {
    checks: Vec<String>,
    measured: BTreeMap<String, f64>,
    pass: bool,
}

impl Tally {
    fn new() -> Tally {
        Tally { pass: true, ..Tally::default() }
    }

    fn check(&mut self, ok: bool, text: impl Into<String>) {
        self.pass &= ok;
        self.checks.push(format!("{} {}", if ok { "ok" } else { "FAIL" }, text.into()));
    }

    fn put(&mut self, key: impl Into<String>, v: f64) {
        self.measured.insert(key.into(), v);
    }
}

fn in_band(r: f64) -> bool {
    r >= RATIO_BAND.0 && r <= RATIO_BAND.1
}

fn rel_change(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn gamma3() -> Scenario {
    builtin("gamma3").expect("gamma3 is built in")
}

/// Smooth background from the built-in profile, sampled pointwise.
fn smooth_stack(params: &Params, n: usize) -> Result<(OperatorStack, State)> {
    let k = params.k();
    let grid = make_vacuum_grid(n, default_grading(k), k)?;
    let st = with_time_derivative(&EvenProfile::standard(0.1).sample(&grid)?, k)?;
    let stack = OperatorStack::from_state(&st, k)?;
    Ok((stack, st))
}

fn params_of(s: &Scenario) -> Params {
    s.params().expect("built-ins are valid")
}

fn adjoint(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    let scen = builtin_scenarios();
    let per = ADJOINT_PAIRS / scen.len();
    let mut worst = 0.0f64;
    for (si, s) in scen.iter().enumerate() {
        let k = params_of(s).k();
        let grid = make_vacuum_grid(COARSE, default_grading(k), k)?;
        for i in 0..per {
            let mut r = rng(seed, (si * per + i) as u64);
            let stack = OperatorStack::new(&Background::random(&mut r).sample(&grid), k)?;
            let f = TestField::random(&mut r, k + 1.0, 0).sample(&grid, Side::X);
            let g = TestField::random(&mut r, k, 1).sample(&grid, Side::Y);
            let (vf, vsg) = (stack.v(&f)?, stack.vstar(&g)?);
            let lhs = vf.inner(&g)?;
            let rhs = f.inner(&vsg)?;
            worst = worst.max((lhs - rhs).abs() / (vf.norm() * g.norm() + f.norm() * vsg.norm()));
        }
    }
    t.put("adjoint_max_relative", worst);
    t.check(worst <= ADJOINT_TOL, format!("{ADJOINT_PAIRS} pairs, max relative {worst:.2e} <= {ADJOINT_TOL:e}"));

    let params = params_of(&gamma3());
    let k = params.k();
    let gap = |n| -> Result<f64> {
        let (stack, _) = smooth_stack(&params, n)?;
        let g = Field::sample(stack.grid(), Side::Y, |x| x.powf(k) * (1.0 - x * x) * (2.0 - x * x), k);
        Ok(stack.vstar(&g)?.sub(&stack.vstar_expanded(&g)?)?.max_abs())
    };
    let ratio = gap(COARSE)? / gap(FINE)?;
    t.put("expanded_vstar_ratio", ratio);
    t.check(in_band(ratio), format!("expanded V* vs transpose ratio {ratio:.3}"));
    Ok(t)
}

fn conservation() -> Result<Tally> {
    let mut t = Tally::new();
    let base = Scenario { t_final: 0.1, record_every: 1, ..gamma3() };
    let run = base.simulate()?;
    let drift = run.zeroth_drift();
    t.put("midpoint_drift", drift);
    t.check(drift <= DRIFT_TOL && run.completed, format!("midpoint drift {drift:.2e} (n {}, grading {})", base.n, base.grading()?));

    // RK4 is explicit: the graded grid would need a step below the listed ones, so the
    // order study uses uniform spacing.
    let uniform = Scenario { grading: Some(1.0), ..base.clone() };
    let init = uniform.initial_state()?;
    let mut drifts = Vec::new();
    for dt in RK4_STEPS {
        let sc = Scenario { dt, scheme: Scheme::Rk4, ..uniform.clone() };
        let run = simulate(&sc.run_config()?, &init, 0.0)?;
        if !run.completed {
            t.check(false, format!("rk4 run at dt {dt} stopped: {}", run.violation.unwrap_or_default()));
            return Ok(t);
        }
        drifts.push(run.zeroth_drift());
    }
    let orders: Vec<f64> = drifts.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    for (dt, d) in RK4_STEPS.iter().zip(&drifts) {
        t.put(format!("rk4_drift_dt_{dt:e}"), *d);
    }
    t.put("rk4_min_order", min);
    t.check(min >= RK4_MIN_ORDER, format!("rk4 drift orders {:.2}, {:.2}", orders[0], orders[1]));
    Ok(t)
}

fn certification() -> Result<Tally> {
    let mut t = Tally::new();
    for s in builtin_scenarios() {
        let mut stars = Vec::new();
        for n in [COARSE, FINE] {
            let sc = Scenario { record_every: 1, ..s.with_n(n) };
            let run = sc.simulate()?;
            let e0 = run.initial_energy.full;
            let (lo, hi) = (0.5 / sc.c0, 2.0 * sc.c0);
            let held = run.records.iter().filter(|r| r.t <= run.t_star).all(|r| {
                r.energy.full <= 2.0 * e0 && r.energy.phi_over_xi_min >= lo && r.energy.phi_over_xi_max <= hi
            });
            t.check(run.t_star > 0.0 && held, format!("{} n {n}: T* {:.3}", s.name, run.t_star));
            t.put(format!("{}_t_star_{n}", s.name), run.t_star);
            stars.push(run.t_star);
        }
        let c = rel_change(stars[0], stars[1]);
        t.check(c <= T_STAR_CHANGE, format!("{} T* change {:.1}%", s.name, 100.0 * c));
    }
    Ok(t)
}

fn hardy(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    for (si, s) in builtin_scenarios().iter().enumerate() {
        let params = params_of(s);
        let k = params.k();
        let top = k.ceil() as usize + 1;
        let mut maxima = Vec::new();
        for n in [COARSE, FINE] {
            let (stack, st) = smooth_stack(&params, n)?;
            let grid = stack.grid().clone();
            let inv_psi = st.psi.values.iter().fold(0.0f64, |m, p| m.max(1.0 / p));
            let ys = grid.nodes(Side::Y).to_vec();
            let (mut hmax, mut emax) = (0.0f64, 0.0f64);
            for i in 0..SUITE_FIELDS {
                let mut r = rng(seed, 1000 * (si as u64 + 1) + i as u64);
                let extra = r_extra(&mut r);
                let f = TestField::random(&mut r, 1.0 + extra, 2).sample(&grid, Side::X);
                let g = TestField::random(&mut r, k.ceil() + extra, 3).sample(&grid, Side::Y);
                let h = f.divide_by_xi_pow(1.0, true)?.norm() / (inv_psi.powf(2.0 * k) * stack.v(&f)?.norm());
                let sup = g.values.iter().zip(&ys).fold(0.0f64, |m, (v, y)| m.max((v / y.powf(k)).abs()));
                let e = sup / space_norm(&stack, top, &g)?;
                hmax = hmax.max(h);
                emax = emax.max(e);
            }
            t.put(format!("{}_hardy_max_{n}", s.name), hmax);
            t.put(format!("{}_embedding_max_{n}", s.name), emax);
            maxima.push((hmax, emax));
        }
        let ch = rel_change(maxima[0].0, maxima[1].0);
        let ce = rel_change(maxima[0].1, maxima[1].1);
        let finite = maxima.iter().all(|(a, b)| a.is_finite() && b.is_finite());
        t.check(finite && ch < MAX_CHANGE, format!("{} hardy max {:.4} change {:.2}%", s.name, maxima[1].0, 100.0 * ch));
        t.check(finite && ce < MAX_CHANGE, format!("{} embedding max {:.4} change {:.2}%", s.name, maxima[1].1, 100.0 * ce));
    }
    Ok(t)
}

fn r_extra(r: &mut impl rand::Rng) -> f64 {
    r.random_range(0..3) as f64
}

fn product_rules() -> Result<Tally> {
    let mut t = Tally::new();
    let params = params_of(&gamma3());
    let k = params.k();
    let f = move |x: f64| x.powf(k + 1.0) * (1.0 - x * x).powi(2) * (1.0 + x * x / 2.0);
    let g = move |x: f64| x.powf(k) * (1.0 - x * x) * (2.0 - x * x);
    let h = |x: f64| 1.0 / (1.0 + x * x);
    let mut runs = Vec::new();
    for n in [COARSE, FINE] {
        let (stack, st) = smooth_stack(&params, n)?;
        let stack = stack.with_dphi_dt(st.dphi_dt.clone().expect("attached"))?;
        runs.push(product_rule_residuals(&stack, &f, &g, &h)?);
    }
    for (a, b) in runs[0].iter().zip(&runs[1]) {
        if a.is_exact() || b.is_exact() {
            let ok = a.is_exact() && b.is_exact();
            t.put(format!("{}_max_{FINE}", b.name), b.max_abs);
            t.check(ok, format!("{} exact ({:.1e})", b.name, b.max_abs));
        } else {
            let ratio = a.max_abs / b.max_abs;
            t.put(format!("{}_ratio", b.name), ratio);
            t.check(in_band(ratio), format!("{} ratio {ratio:.2}", b.name));
        }
    }
    Ok(t)
}

/// Certified time of the built-in `gamma3` scenario at the fine resolution.
fn gamma3_t_star() -> Result<f64> {
    Ok(gamma3().simulate()?.t_star)
}

fn ti_representation() -> Result<Tally> {
    let mut t = Tally::new();
    let base = gamma3();
    let k = params_of(&base).k();
    let t_mid = (0.5 * gamma3_t_star()? / base.dt).round() * base.dt;
    t.put("t_mid", t_mid);
    let mut reps = Vec::new();
    for n in [COARSE, FINE] {
        let sc = Scenario { t_final: t_mid, ..base.with_n(n) };
        let run = sc.simulate()?;
        let st = run.final_state();
        reps.push(ti_diagnostics(&OperatorStack::from_state(st, k)?, st)?);
    }
    for (i, (a, b)) in [(&reps[0].residual_2, &reps[1].residual_2), (&reps[0].residual_3, &reps[1].residual_3)]
        .into_iter()
        .enumerate()
    {
        let ratio = a.max_abs / b.max_abs;
        t.put(format!("t{}_ratio", i + 2), ratio);
        t.check(ratio >= RATIO_BAND.0, format!("T_{} residual {:.2e}, ratio {ratio:.2}", i + 2, b.max_abs));
    }
    for i in 0..3 {
        let (a, b) = (reps[0].observables[i], reps[1].observables[i]);
        let c = rel_change(a, b);
        t.put(format!("t{}_observable", i + 2), b);
        t.check(a.is_finite() && b.is_finite() && c < MAX_CHANGE, format!("T_{} observable {b:.4} change {:.2}%", i + 2, 100.0 * c));
    }
    Ok(t)
}

/// Longest run of consecutive ratios `d_i / d_{i+1} >= factor`.
pub fn contraction_run(diffs: &[f64], factor: f64) -> usize {
    let (mut best, mut cur) = (0, 0);
    for w in diffs.windows(2) {
        if w[1] > 0.0 && w[0] / w[1] >= factor {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    best
}

/// A Picard run on `[0, horizon]` judged against a direct run over the same interval.
#[derive(Clone, Debug)]
pub struct PicardStudy {
    pub horizon: f64,
    pub result: Option<PicardResult>,
    /// Why the iteration stopped early, if it did.
    pub error: Option<String>,
    /// Longest run of consecutive contractions by [`PICARD_FACTOR`].
    pub run: usize,
    pub identity: f64,
    /// D-functional between the last iterate and the direct solution.
    pub d: f64,
    pub bound: f64,
}

impl PicardStudy {
    pub fn pass(&self) -> bool {
        self.contracts() && self.identities_hold() && self.agrees()
    }

    pub fn contracts(&self) -> bool {
        self.error.is_none() && self.run >= PICARD_RUN
    }

    pub fn identities_hold(&self) -> bool {
        self.error.is_none() && self.identity <= 1e-10
    }

    pub fn agrees(&self) -> bool {
        self.error.is_none() && self.d <= self.bound
    }

    pub fn describe(&self) -> String {
        let horizon = self.horizon;
        match &self.error {
            Some(e) => format!("horizon {horizon:.4}: {e}"),
            None => format!(
                "horizon {horizon:.4}: {} consecutive halvings, identity residual {:.1e}, D {:.2e} vs bound {:.2e}",
                self.run, self.identity, self.d, self.bound
            ),
        }
    }
}

/// Runs the iteration on `sc` up to `horizon` and compares it with a direct run. A
/// degenerate iterate is recorded in `error` rather than returned as `Err`.
pub fn picard_study(sc: &Scenario, horizon: f64, settings: &PicardSettings) -> Result<PicardStudy> {
    let params = sc.params()?;
    let k = params.k();
    let init = sc.initial_state()?;
    let direct = simulate(&RunConfig { t_final: horizon, ..sc.run_config()? }, &init, 0.0)?;
    let cfg = PicardConfig {
        params,
        dt: sc.dt,
        horizon,
        n_max: settings.n_max,
        tol: settings.tol,
        reconstruction: settings.reconstruction,
    };
    let h = 1.0 / sc.n as f64;
    let bound = PICARD_D_FACTOR * (h * h + sc.dt * sc.dt) * direct.initial_energy.full;
    let res = match picard_iterate(&cfg, &init) {
        Ok(r) => r,
        Err(e) => {
            return Ok(PicardStudy {
                horizon,
                result: None,
                error: Some(e.to_string()),
                run: 0,
                identity: f64::NAN,
                d: f64::NAN,
                bound,
            })
        }
    };
    let fin = res.final_state();
    let dir = direct.final_state();
    let d = diff_functional(&OperatorStack::from_state(fin, k)?, &OperatorStack::from_state(dir, k)?, fin, dir)?.d_value;
    let identity = res.trace.records.iter().skip(1).map(|r| r.identity_residual).fold(0.0, f64::max);
    let run = contraction_run(&res.trace.diffs(), PICARD_FACTOR);
    Ok(PicardStudy { horizon, result: Some(res), error: None, run, identity, d, bound })
}

fn picard() -> Result<Tally> {
    let mut t = Tally::new();
    let sc = gamma3();
    let t_star = gamma3_t_star()?;
    t.put("t_star", t_star);
    let horizon = |frac: f64| (frac * t_star / sc.dt).round() * sc.dt;
    let settings = PicardSettings { n_max: 10, ..PicardSettings::default() };
    let main = picard_study(&sc, horizon(0.5), &settings)?;
    t.check(main.pass(), main.describe());
    t.put("d_over_bound", main.d / main.bound);
    if !main.pass() {
        // Shorter horizons, reported to locate where the iteration does converge.
        for frac in [0.25, 0.125] {
            let c = picard_study(&sc, horizon(frac), &settings)?;
            t.checks.push(format!("info {}", c.describe()));
            if c.pass() {
                t.put("largest_converging_fraction", frac);
                break;
            }
        }
    }
    Ok(t)
}

fn norm_equivalence(seed: u64) -> Result<Tally> {
    let mut t = Tally::new();
    for (si, s) in builtin_scenarios().iter().enumerate() {
        let k = params_of(s).k();
        let order = k.ceil() as usize;
        let mut ms = Vec::new();
        for n in [COARSE, FINE] {
            let grid = make_vacuum_grid(n, default_grading(k), k)?;
            let mut m = 1.0f64;
            for i in 0..SUITE_FIELDS {
                let mut r = rng(seed, 5000 + 1000 * si as u64 + i as u64);
                let stack = OperatorStack::new(&Background::random(&mut r).sample(&grid), k)?;
                let f = TestField::random(&mut r, k + 1.0, 2).sample(&grid, Side::X);
                let g = TestField::random(&mut r, k, 3).sample(&grid, Side::Y);
                for field in [&f, &g] {
                    let (a, b) = norm_equivalence_ratio(&stack, field, order)?;
                    m = m.max(a).max(b);
                }
            }
            t.put(format!("{}_m_{n}", s.name), m);
            ms.push(m);
        }
        let c = rel_change(ms[0], ms[1]);
        t.check(c < MAX_CHANGE, format!("{} M {:.4} change {:.2}%", s.name, ms[1], 100.0 * c));
    }
    let k = 1.0;
    let grid = make_vacuum_grid(FINE, default_grading(k), k)?;
    let flat = OperatorStack::new(&Field::sample(&grid, Side::X, |_| 1.0, 0.0), k)?;
    let mut worst = 0.0f64;
    for i in 0..SUITE_FIELDS {
        let mut r = rng(seed, 9000 + i as u64);
        let f = TestField::random(&mut r, k + 1.0, 2).sample(&grid, Side::X);
        let (a, _) = norm_equivalence_ratio(&flat, &f, 1)?;
        worst = worst.max((a - 1.0).abs());
    }
    t.put("flat_background_deviation", worst);
    t.check(worst <= UNIT_TOL, format!("phi = xi ratios deviate from 1 by {worst:.1e}"));
    Ok(t)
}

fn linear_stability() -> Result<Tally> {
    let mut t = Tally::new();
    let params = params_of(&gamma3());
    let k = params.k();
    let (dt, steps) = (1e-3, 200);
    let mut cs = Vec::new();
    for n in [COARSE, FINE] {
        let (stack, _) = smooth_stack(&params, n)?;
        let grid = stack.grid().clone();
        let at = |m: usize| m as f64 * dt;
        let f: Vec<Field> = (0..=steps)
            .map(|m| Field::sample(&grid, Side::X, |x| (3.0 * at(m)).cos() * x.powf(k + 1.0) * (1.0 - x * x).powi(2) * (1.0 + x), k + 1.0))
            .collect();
        let g: Vec<Field> = (0..=steps)
            .map(|m| Field::sample(&grid, Side::Y, |x| (1.0 + at(m)) * x.powf(k) * (1.0 - x * x) * (2.0 - x), k))
            .collect();
        let c = solve_linear(&stack, &f, &g, dt)?.measured_c;
        t.put(format!("c_{n}"), c);
        cs.push(c);
        if n == FINE {
            let zf: Vec<Field> = (0..=steps).map(|_| Field::zeros(&grid, Side::X)).collect();
            let zg: Vec<Field> = (0..=steps).map(|_| Field::zeros(&grid, Side::Y)).collect();
            let z = solve_linear(&stack, &zf, &zg, dt)?;
            let worst = z.f.iter().chain(&z.g).map(|x| x.max_abs()).fold(0.0, f64::max);
            t.put("zero_source_response", worst);
            t.check(worst <= ZERO_TOL, format!("zero sources give {worst:.1e}"));
        }
    }
    let c = rel_change(cs[0], cs[1]);
    t.check(cs.iter().all(|v| v.is_finite() && *v > 0.0) && c < MAX_CHANGE, format!("C {:.4} change {:.2}%", cs[1], 100.0 * c));
    Ok(t)
}

fn boundary() -> Result<Tally> {
    let mut t = Tally::new();
    let mut gaps = Vec::new();
    for n in [COARSE, FINE] {
        let run = gamma3().with_n(n).simulate()?;
        let b = &run.boundary;
        let mut speed = 0.0f64;
        let mut worst = 0.0f64;
        for i in 0..b.times.len() {
            speed = speed.max(b.u_at_0[i].abs());
            let allowed = speed * b.times[i] * (1.0 + BOUNDARY_SLACK);
            if allowed > 0.0 {
                worst = worst.max((b.a_of_t[i] - b.a_of_t[0]).abs() / allowed);
            } else if b.a_of_t[i] != b.a_of_t[0] {
                worst = f64::INFINITY;
            }
        }
        t.put(format!("displacement_over_bound_{n}"), worst);
        t.check(worst <= 1.0, format!("n {n}: |a(t) - a(0)| reaches {:.4} of the bound up to t = {:.3}", worst, run.t_star));
        gaps.push(b.max_route_gap());
    }
    let ratio = gaps[0] / gaps[1];
    t.put("route_gap", gaps[1]);
    t.put("route_gap_ratio", ratio);
    t.check(ratio >= RATIO_BAND.0, format!("u(t, 0) routes differ by {:.1e}, ratio {ratio:.1}", gaps[1]));
    Ok(t)
}

/// Runs one criterion; an error counts as a failure and is reported in `checks`.
pub fn run_criterion(id: u8, seed: u64) -> CriterionResult {
    let start = Instant::now();
    let out = match id {
        1 => adjoint(seed),
        2 => conservation(),
        3 => certification(),
        4 => hardy(seed),
        5 => product_rules(),
        6 => ti_representation(),
        7 => picard(),
        8 => norm_equivalence(seed),
        9 => linear_stability(),
        10 => boundary(),
        _ => Ok(Tally { pass: false, checks: vec![format!("FAIL no criterion {id}")], ..Tally::default() }),
    };
    let t = out.unwrap_or_else(|e| Tally { pass: false, checks: vec![format!("FAIL error: {e}")], ..Tally::default() });
    CriterionResult {
        id,
        name: (id as usize).checked_sub(1).and_then(|i| NAMES.get(i)).unwrap_or(&"unknown").to_string(),
        pass: t.pass,
        checks: t.checks,
        measured: t.measured,
        elapsed_s: start.elapsed().as_secs_f64(),
    }
}

/// Runs the listed criteria. Each one is deterministic on its own, so the report does
/// not depend on the thread count.
pub fn run_suite(ids: &[u8], seed: u64) -> SuiteReport {
    #[cfg(feature = "parallel")]
    let results: Vec<CriterionResult> = {
        use rayon::prelude::*;
        ids.par_iter().map(|&id| run_criterion(id, seed)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<CriterionResult> = ids.iter().map(|&id| run_criterion(id, seed)).collect();
    let passed = results.iter().all(|r| r.pass);
    SuiteReport { seed, results, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contraction_run_counts_consecutive_halvings() {
        assert_eq!(contraction_run(&[1.0, 0.4, 0.1, 0.09, 0.01, 0.001], 2.0), 2);
        assert_eq!(contraction_run(&[1.0, 0.5, 0.25, 0.125, 0.0625], 2.0), 4);
        assert_eq!(contraction_run(&[1.0], 2.0), 0);
    }

    #[test]
    fn unknown_criterion_fails() {
        let r = run_criterion(11, 0);
        assert!(!r.pass);
        assert!(r.line().starts_with("criterion 11: FAIL"));
    }
}
