//! Browser bindings. Each export takes plain numbers and returns a JSON string, which
//! `www/app.js` plots on a canvas.
//!
//! The `*_view` functions do the work and are ordinary Rust, so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers only serialize.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use vacuum_euler::coords::eulerian_reconstruct;
use vacuum_euler::harness::fields::{rng, Background, TestField};
use vacuum_euler::harness::{builtin, picard_study, PicardSettings, Scenario};
use vacuum_euler::{make_vacuum_grid, Error, OperatorStack, Result, Side};

/// Largest grid the page accepts; keeps a click under a second or so.
pub const MAX_N: usize = 512;

fn scenario(name: &str, n: usize) -> Result<Scenario> {
    if !(8..=MAX_N).contains(&n) {
        return Err(Error::Config(format!("n must lie in [8, {MAX_N}], got {n}")));
    }
    builtin(name).map(|s| s.with_n(n)).ok_or_else(|| Error::Config(format!("unknown scenario {name:?}")))
}

#[derive(Debug, Serialize)]
pub struct SeriesPoint {
    pub t: f64,
    pub energy_ratio: f64,
    pub zeroth_drift: f64,
    pub phi_over_xi_min: f64,
    pub phi_over_xi_max: f64,
    pub boundary: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulationView {
    pub k: f64,
    pub t_star: f64,
    pub completed: bool,
    pub violation: Option<String>,
    pub series: Vec<SeriesPoint>,
    /// Final state on the `xi` grid.
    pub xi: Vec<f64>,
    pub phi_over_xi: Vec<f64>,
    /// Final state in Eulerian variables.
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

pub fn simulate_view(name: &str, amplitude: f64, n: usize, t_final: f64) -> Result<SimulationView> {
    if !(t_final > 0.0 && t_final <= 5.0) {
        return Err(Error::Config(format!("t_final must lie in (0, 5], got {t_final}")));
    }
    let sc = Scenario { amplitude, t_final, record_every: 5, ..scenario(name, n)? };
    sc.validate()?;
    let params = sc.params()?;
    let run = sc.simulate()?;
    let e0 = run.initial_energy.full;
    let z0 = run.zeroth[0];
    let series = run
        .records
        .iter()
        .map(|r| SeriesPoint {
            t: r.t,
            energy_ratio: r.energy.full / e0,
            zeroth_drift: (r.energy.zeroth - z0) / z0,
            phi_over_xi_min: r.energy.phi_over_xi_min,
            phi_over_xi_max: r.energy.phi_over_xi_max,
            boundary: r.boundary_position,
        })
        .collect();
    let fin = run.final_state();
    let a = run.boundary.a_of_t.last().copied().unwrap_or(0.0);
    let prof = eulerian_reconstruct(fin, a, &params)?;
    Ok(SimulationView {
        k: params.k(),
        t_star: run.t_star,
        completed: run.completed,
        violation: run.violation.clone(),
        series,
        xi: fin.psi.nodes().to_vec(),
        phi_over_xi: fin.psi.values.clone(),
        x: prof.x_nodes,
        rho: prof.rho,
        u: prof.u,
    })
}

#[derive(Debug, Serialize)]
pub struct OperatorView {
    pub k: f64,
    pub xi_x: Vec<f64>,
    pub xi_y: Vec<f64>,
    pub phi_over_xi: Vec<f64>,
    pub f: Vec<f64>,
    pub v_f: Vec<f64>,
    pub g: Vec<f64>,
    pub vstar_g: Vec<f64>,
    /// `<V f, g>` and `<f, V* g>`.
    pub pairing: [f64; 2],
    pub relative_residual: f64,
}

/// A seeded background `phi/xi` and test pair `(f, g)`, with `V f`, `V* g` and both
/// sides of the adjoint pairing.
pub fn operator_view(name: &str, n: usize, seed: u32) -> Result<OperatorView> {
    let sc = scenario(name, n)?;
    let k = sc.params()?.k();
    let grid = make_vacuum_grid(n, sc.grading()?, k)?;
    let mut r = rng(seed as u64, 0);
    let psi = Background::random(&mut r).sample(&grid);
    let stack = OperatorStack::new(&psi, k)?;
    let f = TestField::random(&mut r, k + 1.0, 0).sample(&grid, Side::X);
    let g = TestField::random(&mut r, k, 1).sample(&grid, Side::Y);
    let vf = stack.v(&f)?;
    let vsg = stack.vstar(&g)?;
    let lhs = vf.inner(&g)?;
    let rhs = f.inner(&vsg)?;
    let scale = vf.norm() * g.norm() + f.norm() * vsg.norm();
    Ok(OperatorView {
        k,
        xi_x: grid.nodes(Side::X).to_vec(),
        xi_y: grid.nodes(Side::Y).to_vec(),
        phi_over_xi: psi.values,
        f: f.values,
        v_f: vf.values,
        g: g.values,
        vstar_g: vsg.values,
        pairing: [lhs, rhs],
        relative_residual: (lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE),
    })
}

#[derive(Debug, Serialize)]
pub struct PicardView {
    pub horizon: f64,
    pub error: Option<String>,
    pub diffs: Vec<f64>,
    pub approx_energy: Vec<f64>,
    pub contraction_run: usize,
    pub identity_residual: f64,
    pub d_to_direct: f64,
    pub bound: f64,
    pub pass: bool,
}

pub fn picard_view(name: &str, n: usize, horizon: f64, iterations: usize) -> Result<PicardView> {
    if !(horizon > 0.0 && horizon <= 1.0) || !(1..=20).contains(&iterations) {
        return Err(Error::Config("horizon must lie in (0, 1] and iterations in 1..=20".into()));
    }
    let sc = scenario(name, n)?;
    let horizon = (horizon / sc.dt).round().max(1.0) * sc.dt;
    let study = picard_study(&sc, horizon, &PicardSettings { n_max: iterations, ..PicardSettings::default() })?;
    let (diffs, approx_energy) = match &study.result {
        Some(r) => (r.trace.diffs(), r.trace.records.iter().map(|x| x.approx_energy).collect()),
        None => (vec![], vec![]),
    };
    Ok(PicardView {
        horizon,
        error: study.error.clone(),
        diffs,
        approx_energy,
        contraction_run: study.run,
        identity_residual: study.identity,
        d_to_direct: study.d,
        bound: study.bound,
        pass: study.pass(),
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

/// Evolves a built-in scenario; see [`SimulationView`].
#[wasm_bindgen]
pub fn simulate(scenario: &str, amplitude: f64, n: usize, t_final: f64) -> std::result::Result<String, JsError> {
    to_js(simulate_view(scenario, amplitude, n, t_final))
}

/// Applies V and V* to seeded fields; see [`OperatorView`].
#[wasm_bindgen]
pub fn operators(scenario: &str, n: usize, seed: u32) -> std::result::Result<String, JsError> {
    to_js(operator_view(scenario, n, seed))
}

/// Runs the Picard iteration; see [`PicardView`].
#[wasm_bindgen]
pub fn picard(scenario: &str, n: usize, horizon: f64, iterations: usize) -> std::result::Result<String, JsError> {
    to_js(picard_view(scenario, n, horizon, iterations))
}
