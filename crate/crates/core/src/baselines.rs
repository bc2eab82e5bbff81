//! Closed-form fidelities of the standard test states (coherent and
//! two-mode squeezed vacuum) for the suboptimality comparison.
//!
//! Coherent states are not number-diagonal, so their fidelity under the
//! additive-noise channel cannot be routed through the twin-Fock kernel;
//! only the closed form `1/(1+xi)` is provided, independent of the energy
//! `|alpha|^2`. The two-mode squeezed vacuum has geometric twin-Fock
//! spectrum `p_n = E^n / (E+1)^(n+1)` and closed-form fidelity
//! `1/(1+(2E+1) xi)`, which doubles as an end-to-end cross-check of the
//! kernel pipeline.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::SpectrumVector;
use crate::solver::{self, QpProblem, SolveOptions};

fn check_noise(xi: f64) -> Result<()> {
    if !xi.is_finite() || xi < 0.0 {
        return Err(Error::InvalidNoise(xi));
    }
    Ok(())
}

fn check_energy(energy: f64) -> Result<()> {
    if !energy.is_finite() || energy < 0.0 {
        return Err(Error::InvalidEnergy(energy));
    }
    Ok(())
}

/// Fidelity of any coherent state under additive noise `xi`: `1/(1+xi)`.
pub fn coherent_fidelity(xi: f64) -> Result<f64> {
    check_noise(xi)?;
    Ok(1.0 / (1.0 + xi))
}

/// Fidelity of the two-mode squeezed vacuum of mean photon number `E`
/// under additive noise `xi`: `1/(1+(2E+1) xi)`.
pub fn tmsv_fidelity(energy: f64, xi: f64) -> Result<f64> {
    check_energy(energy)?;
    check_noise(xi)?;
    Ok(1.0 / (1.0 + (2.0 * energy + 1.0) * xi))
}

/// Truncated geometric spectrum of the two-mode squeezed vacuum, with the
/// dropped mass reported instead of renormalized: renormalizing would
/// corrupt tail-sensitive cross-checks.
#[derive(Clone, Debug, Serialize)]
pub struct TmsvSpectrum {
    pub spectrum: SpectrumVector,
    /// `(E/(E+1))^(M+1)`, the geometric tail beyond the truncation.
    pub tail_mass: f64,
}

pub fn tmsv_spectrum(energy: f64, trunc: usize) -> Result<TmsvSpectrum> {
    check_energy(energy)?;
    let ratio = energy / (energy + 1.0);
    let mut probs = Vec::with_capacity(trunc + 1);
    let mut term = 1.0 / (energy + 1.0);
    for _ in 0..=trunc {
        probs.push(term);
        term *= ratio;
    }
    Ok(TmsvSpectrum {
        spectrum: SpectrumVector::new(probs)?,
        tail_mass: ratio.powi(trunc as i32 + 1),
    })
}

/// Side-by-side fidelities at one `(E, xi)` point. The optimal value comes
/// from the certified solver, so `optimal <= tmsv <= coherent` holds
/// whenever the truncation is adequate.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BaselineReport {
    pub coherent_fid: f64,
    pub tmsv_fid: f64,
    pub optimal_fid: f64,
    pub energy: f64,
    pub xi: f64,
}

pub fn baseline_report(
    energy: f64,
    xi: f64,
    trunc: usize,
    restarts: usize,
    opts: &SolveOptions,
) -> Result<BaselineReport> {
    let problem = QpProblem::build(xi, energy, trunc)?;
    let solution = solver::solve_with_restarts(&problem, restarts, opts)?;
    Ok(BaselineReport {
        coherent_fid: coherent_fidelity(xi)?,
        tmsv_fid: tmsv_fidelity(energy, xi)?,
        optimal_fid: solution.value,
        energy,
        xi,
    })
}
