//! CSV and JSON writers for run artifacts. Column layouts are documented in the README.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::coords::EulerianProfile;
use crate::error::Result;
use crate::evolution::{IterationTrace, SimulationResult};
use crate::grid::{Field, State};

/// Per-record energies: `t, zeroth, full, level_0..level_s, phi_over_xi_min,
/// phi_over_xi_max, boundary_position, cfl`. `level_i` is the contribution of level
/// `i` to `full`.
pub fn write_time_series(path: &Path, run: &SimulationResult, k: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let s = run.initial_energy.per_level.len() - 1;
    let mut header = vec!["t".to_string(), "zeroth".into(), "full".into()];
    header.extend((0..=s).map(|i| format!("level_{i}")));
    header.extend(["phi_over_xi_min", "phi_over_xi_max", "boundary_position", "cfl"].map(String::from));
    w.write_record(&header)?;
    for r in &run.records {
        let e = &r.energy;
        let mut row = vec![r.t, e.zeroth, e.full];
        row.extend((0..=s).map(|i| e.level_term(i, k)));
        row.extend([e.phi_over_xi_min, e.phi_over_xi_max, r.boundary_position, r.cfl]);
        w.write_record(row.iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// `n, approx_energy, phi_over_xi_min, phi_over_xi_max, diff_to_previous, fg_residual,
/// identity_residual`; the seed row leaves `diff_to_previous` empty.
pub fn write_iteration_trace(path: &Path, trace: &IterationTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "n",
        "approx_energy",
        "phi_over_xi_min",
        "phi_over_xi_max",
        "diff_to_previous",
        "fg_residual",
        "identity_residual",
    ])?;
    for r in &trace.records {
        w.write_record([
            r.n.to_string(),
            format!("{:e}", r.approx_energy),
            format!("{:e}", r.psi_min),
            format!("{:e}", r.psi_max),
            r.diff_to_previous.map(|d| format!("{d:e}")).unwrap_or_default(),
            format!("{:e}", r.fg_residual),
            format!("{:e}", r.identity_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `xi, value` at the nodes of the field's side.
pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["xi", "value"])?;
    for (x, v) in field.nodes().iter().zip(&field.values) {
        w.write_record([format!("{x:e}"), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

/// `x, rho, u`.
pub fn write_profile_csv(path: &Path, prof: &EulerianProfile) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "rho", "u"])?;
    for i in 0..prof.x_nodes.len() {
        w.write_record([prof.x_nodes[i], prof.rho[i], prof.u[i]].map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Sparse matrix as `row, col, value`.
pub fn write_triplets(path: &Path, triplets: &[(usize, usize, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "col", "value"])?;
    for (r, c, v) in triplets {
        w.write_record([r.to_string(), c.to_string(), format!("{v:e}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_checkpoint(path: &Path, state: &State, time: f64) -> Result<()> {
    write_json(path, &state.to_checkpoint(time))
}

pub fn read_checkpoint(path: &Path) -> Result<(State, f64)> {
    let text = std::fs::read_to_string(path)?;
    State::from_checkpoint(&serde_json::from_str(&text)?)
}
