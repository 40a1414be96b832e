//! Self-convergence under doubling of `n`: solutions are compared at fixed interior
//! points, and the observed order is `log2(|P_n - P_2n| / |P_2n - P_4n|)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

use super::{ConvergeSettings, Scenario};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    pub n: usize,
    pub phi_over_xi: Vec<f64>,
    pub u: Vec<f64>,
    /// Largest difference to the next finer row.
    pub diff_phi_over_xi: Option<f64>,
    pub diff_u: Option<f64>,
    pub order_phi_over_xi: Option<f64>,
    pub order_u: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergeReport {
    pub scenario: String,
    pub t: f64,
    pub probes: Vec<f64>,
    pub rows: Vec<ConvergeRow>,
    pub min_order_phi_over_xi: f64,
    pub min_order_u: f64,
    pub pass: bool,
}

/// Cubic Lagrange interpolation through the four nodes nearest to `x`.
pub fn interpolate(f: &Field, x: f64) -> f64 {
    let xs = f.nodes();
    let n = xs.len();
    let i = xs.partition_point(|v| *v < x).clamp(2, n - 2) - 2;
    let (px, pv) = (&xs[i..i + 4], &f.values[i..i + 4]);
    (0..4)
        .map(|a| {
            let w: f64 = (0..4).filter(|b| *b != a).map(|b| (x - px[b]) / (px[a] - px[b])).product();
            w * pv[a]
        })
        .sum()
}

pub fn converge(scenario: &Scenario, settings: &ConvergeSettings) -> Result<ConvergeReport> {
    let ns = &settings.ns;
    let coarse = Scenario { t_final: settings.t, ..scenario.with_n(ns[0]) };
    let first = coarse.simulate()?;
    let t = first.t_star;
    if !(t > 0.0) {
        return Err(Error::Certification { time: 0.0, reason: "coarsest run certifies no time".into() });
    }
    let mut rows = Vec::new();
    for &n in ns {
        let sc = Scenario { t_final: t, ..scenario.with_n(n) };
        let run = sc.simulate()?;
        if (run.t_star - t).abs() > 0.5 * sc.dt {
            return Err(Error::Certification {
                time: run.t_star,
                reason: format!("run at n = {n} stops before the comparison time {t}"),
            });
        }
        let st = run.final_state();
        rows.push(ConvergeRow {
            n,
            phi_over_xi: settings.probes.iter().map(|&x| interpolate(&st.psi, x)).collect(),
            u: settings.probes.iter().map(|&x| interpolate(&st.u, x)).collect(),
            diff_phi_over_xi: None,
            diff_u: None,
            order_phi_over_xi: None,
            order_u: None,
        });
    }
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    for i in 0..rows.len() - 1 {
        rows[i].diff_phi_over_xi = Some(gap(&rows[i].phi_over_xi, &rows[i + 1].phi_over_xi));
        rows[i].diff_u = Some(gap(&rows[i].u, &rows[i + 1].u));
    }
    for i in 0..rows.len() - 2 {
        let ord = |a: Option<f64>, b: Option<f64>| (a.unwrap() / b.unwrap()).log2();
        rows[i].order_phi_over_xi = Some(ord(rows[i].diff_phi_over_xi, rows[i + 1].diff_phi_over_xi));
        rows[i].order_u = Some(ord(rows[i].diff_u, rows[i + 1].diff_u));
    }
    let min_of = |f: fn(&ConvergeRow) -> Option<f64>| rows.iter().filter_map(f).fold(f64::INFINITY, f64::min);
    let min_phi = min_of(|r| r.order_phi_over_xi);
    let min_u = min_of(|r| r.order_u);
    Ok(ConvergeReport {
        scenario: scenario.name.clone(),
        t,
        probes: settings.probes.clone(),
        rows,
        min_order_phi_over_xi: min_phi,
        min_order_u: min_u,
        pass: min_phi >= settings.min_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, Side};

    #[test]
    fn interpolation_is_exact_on_cubics() {
        let g = make_grid(16, 2.0).unwrap();
        let f = Field::sample(&g, Side::X, |x| 1.0 - 2.0 * x + x * x * x, 0.0);
        for x in [0.05, 0.3, 0.77, 0.99] {
            assert!((interpolate(&f, x) - (1.0 - 2.0 * x + x * x * x)).abs() < 1e-13);
        }
    }
}
