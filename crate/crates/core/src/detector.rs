//! Closed-form distances between photon-number detectors, their optimal
//! input states, and a linear-programming oracle that validates the closed
//! forms.
//!
//! A lossy detector is a pure-loss channel of transmissivity `eta` followed
//! by an ideal photon-number measurement. Number-diagonal inputs suffice for
//! worst-case distinguishability, which reduces everything to two-level
//! expressions in the fractional part `{E} = E - floor(E)`:
//!
//! - half the energy-constrained diamond distance between the ideal and the
//!   lossy detector is `1 - [(1-{E}) eta^floor(E) + {E} eta^ceil(E)]`;
//! - the energy-constrained sine distance between two lossy detectors uses
//!   the overlap `mu = sqrt(eta1 eta2) + sqrt((1-eta1)(1-eta2))` in place of
//!   `eta` and takes `sqrt(1 - [...]^2)`.
//!
//! Both are achieved by the mixed number state with weights `(1-{E}, {E})`
//! on the adjacent levels, so no reference entanglement is needed. The
//! convention `0^0 = 1` keeps the formulas total at `eta = 0`: the vacuum
//! passes a fully lossy detector unchanged.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{self, SpectrumVector};

fn check_transmissivity(eta: f64) -> Result<()> {
    if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidTransmissivity(eta));
    }
    Ok(())
}

fn check_energy(energy: f64) -> Result<()> {
    if !energy.is_finite() || energy < 0.0 {
        return Err(Error::InvalidEnergy(energy));
    }
    Ok(())
}

/// `(1 - {E}) base^floor(E) + {E} base^ceil(E)`, with `0^0 = 1`.
fn two_level_mean(base: f64, energy: f64) -> f64 {
    let floor = energy.floor();
    let frac = energy - floor;
    let lo = base.powi(floor as i32);
    if frac == 0.0 {
        lo
    } else {
        (1.0 - frac) * lo + frac * base.powi(floor as i32 + 1)
    }
}

/// Half the energy-constrained diamond distance between the ideal detector
/// and its lossy approximation.
pub fn diamond_distance(eta: f64, energy: f64) -> Result<f64> {
    check_transmissivity(eta)?;
    check_energy(energy)?;
    Ok(1.0 - two_level_mean(eta, energy))
}

/// The mixed number state achieving [`diamond_distance`]: weights
/// `(1 - {E}, {E})` on levels `floor(E)`, `ceil(E)`.
pub fn optimal_detector_state(energy: f64) -> Result<SpectrumVector> {
    kernel::adjacent_level_state(energy)
}

/// Two lossy detectors under a common energy budget.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DetectorPair {
    eta1: f64,
    eta2: f64,
    energy: f64,
}

impl DetectorPair {
    pub fn new(eta1: f64, eta2: f64, energy: f64) -> Result<Self> {
        check_transmissivity(eta1)?;
        check_transmissivity(eta2)?;
        check_energy(energy)?;
        Ok(Self { eta1, eta2, energy })
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Overlap `mu = sqrt(eta1 eta2) + sqrt((1-eta1)(1-eta2))`; lies in
    /// [0, 1] and equals 1 exactly when the transmissivities coincide.
    pub fn overlap(&self) -> f64 {
        ((self.eta1 * self.eta2).sqrt() + ((1.0 - self.eta1) * (1.0 - self.eta2)).sqrt()).min(1.0)
    }
}

/// Energy-constrained sine distance between the two lossy detectors.
pub fn sine_distance(pair: &DetectorPair) -> f64 {
    let mean = two_level_mean(pair.overlap(), pair.energy);
    (1.0 - mean * mean).max(0.0).sqrt()
}

/// Linear-programming oracle for [`diamond_distance`]: maximize
/// `1 - sum_n lambda_n eta^n` over truncated spectra with unit mass and
/// energy at most `E`, by enumerating every vertex of the feasible polytope
/// (single levels and energy-binding level pairs). The enumeration does not
/// assume the optimal pair is adjacent, so it can falsify the closed form.
pub fn lp_oracle_diamond(eta: f64, energy: f64, trunc: usize) -> Result<f64> {
    check_transmissivity(eta)?;
    check_energy(energy)?;
    if (trunc as f64) < energy.ceil() {
        return Err(Error::TruncationBelowEnergy { trunc, energy });
    }
    let mut best = f64::NEG_INFINITY;
    for i in 0..=trunc {
        if i as f64 > energy {
            break;
        }
        // vertex with all mass on level i
        best = best.max(1.0 - eta.powi(i as i32));
        // vertices where the energy bound binds between levels i < j
        for j in i + 1..=trunc {
            if (j as f64) <= energy {
                continue; // covered by the single-level vertex at j
            }
            let weight_hi = (energy - i as f64) / (j - i) as f64;
            let value =
                1.0 - ((1.0 - weight_hi) * eta.powi(i as i32) + weight_hi * eta.powi(j as i32));
            best = best.max(value);
        }
    }
    Ok(best)
}
