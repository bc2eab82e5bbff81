//! Figure-reproduction presets.
//!
//! The teleportation sweeps pin the truncation at 50. The energy legends
//! are representative choices, not authoritative ones, and are recorded in
//! the table metadata.

use crate::runs::{self, linspace, RunResult};
use crate::table::SweepTable;

pub const PRESET_TRUNC: usize = 50;
pub const PRESET_RESTARTS: usize = 2;

/// Worst-case teleportation fidelity vs noise for a small set of energies.
pub fn fig1() -> RunResult<SweepTable> {
    let xis = linspace(0.05, 1.0, 20);
    let mut table = runs::teleport_sweep(&xis, &[0.6, 1.2, 1.9], PRESET_TRUNC, PRESET_RESTARTS)?;
    table
        .metadata
        .push(("preset".into(), "fig1 (representative energies)".into()));
    Ok(table)
}

/// Optimal vs coherent vs two-mode squeezed vacuum at E = 1.9.
pub fn fig2() -> RunResult<SweepTable> {
    let xis = linspace(0.05, 1.0, 20);
    let mut table = runs::teleport_compare(&xis, 1.9, PRESET_TRUNC, PRESET_RESTARTS)?;
    table.metadata.push(("preset".into(), "fig2".into()));
    Ok(table)
}

/// Detector diamond distance vs transmissivity for a small set of energies.
pub fn fig3() -> RunResult<SweepTable> {
    let etas = linspace(0.0, 1.0, 21);
    let mut table = runs::detector_sweep(&etas, &[0.5, 1.5, 3.0])?;
    table
        .metadata
        .push(("preset".into(), "fig3 (representative energies)".into()));
    Ok(table)
}
