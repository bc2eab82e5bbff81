//! Rigorous two-sided bounds that lift a truncated optimum to the
//! untruncated problem, and the truncation-selection ladder.
//!
//! Restricting the input to the first `M + 1` Fock levels can only shrink
//! the feasible set, so the truncated optimum `F_{E,M}` upper-bounds the
//! unrestricted worst-case fidelity `F_E`. In the other direction, any
//! energy-`E` state keeps at least `1 - E/(M+1)` of its mass inside the
//! truncation, and the gentle-measurement argument converts that into
//!
//! ```text
//! F_E >= 1 - (2 sqrt(E/(M+1)) + sqrt(1 - F_{E,M}))^2
//! ```
//!
//! The raw bound can be vacuous (negative) at small `M`; it is clamped to
//! zero and flagged.

use serde::Serialize;

use crate::certify::{self, KktCertificate};
use crate::error::{Error, Result};
use crate::kernel::SpectrumVector;
use crate::solver::{self, QpProblem, SolveOptions, SolveStatus};

fn check_fidelity(f: f64) -> Result<()> {
    if !f.is_finite() || !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    Ok(())
}

fn check_energy(energy: f64) -> Result<()> {
    if !energy.is_finite() || energy < 0.0 {
        return Err(Error::InvalidEnergy(energy));
    }
    Ok(())
}

fn lower_bound_raw(f_trunc: f64, energy: f64, trunc: usize) -> f64 {
    let tail = 2.0 * (energy / (trunc as f64 + 1.0)).sqrt();
    let sine = (1.0 - f_trunc).max(0.0).sqrt();
    1.0 - (tail + sine) * (tail + sine)
}

/// Lower bound on the untruncated worst-case fidelity given the truncated
/// optimum, clamped to [0, 1].
pub fn lower_bound(f_trunc: f64, energy: f64, trunc: usize) -> Result<f64> {
    check_fidelity(f_trunc)?;
    check_energy(energy)?;
    Ok(lower_bound_raw(f_trunc, energy, trunc).clamp(0.0, 1.0))
}

/// Guaranteed trace mass inside the `(M+1)`-level truncation for any state
/// of mean energy at most `E`: `max(0, 1 - E/(M+1))`.
pub fn projector_mass_bound(energy: f64, trunc: usize) -> Result<f64> {
    check_energy(energy)?;
    Ok((1.0 - energy / (trunc as f64 + 1.0)).max(0.0))
}

/// Truncated optimum together with its rigorous untruncated bracket.
#[derive(Clone, Debug, Serialize)]
pub struct FidelityResult {
    pub value_truncated: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// True when the raw lower bound was negative and got clamped to zero.
    pub lower_bound_vacuous: bool,
    pub trunc: usize,
    pub energy: f64,
    pub xi: f64,
    pub spectrum: SpectrumVector,
    pub certificate: KktCertificate,
}

impl FidelityResult {
    /// Realized width of the bracket.
    pub fn gap(&self) -> f64 {
        self.value_truncated - self.lower_bound
    }
}

/// A solved instance with its bracket and solver metadata.
#[derive(Clone, Debug)]
pub struct BoundedSolve {
    pub result: FidelityResult,
    pub status: SolveStatus,
    pub iterations: usize,
    pub notes: Vec<String>,
}

/// Solve the truncated program with restarts and wrap the optimum in its
/// truncation bracket.
pub fn solve_bounded(
    xi: f64,
    energy: f64,
    trunc: usize,
    restarts: usize,
    opts: &SolveOptions,
) -> Result<BoundedSolve> {
    let problem = QpProblem::build(xi, energy, trunc)?;
    let solution = solver::solve_with_restarts(&problem, restarts, opts)?;
    let certificate = match solution.certificate {
        Some(cert) => cert,
        None => certify::certify(&problem, &solution.spectrum, opts.kkt_tolerance)?,
    };
    let raw = lower_bound_raw(solution.value.clamp(0.0, 1.0), energy, trunc);
    Ok(BoundedSolve {
        result: FidelityResult {
            value_truncated: solution.value,
            lower_bound: raw.clamp(0.0, 1.0),
            upper_bound: solution.value,
            lower_bound_vacuous: raw < 0.0,
            trunc,
            energy,
            xi,
            spectrum: solution.spectrum,
            certificate,
        },
        status: solution.status,
        iterations: solution.iterations,
        notes: solution.notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum TruncationStatus {
    /// The gap target was met at the reported truncation.
    Converged,
    /// The cap was reached first; carries the best gap achieved.
    CapReached { best_gap: f64 },
}

#[derive(Clone, Debug)]
pub struct TruncationChoice {
    pub trunc: usize,
    pub solve: BoundedSolve,
    pub status: TruncationStatus,
}

/// Default search cap for [`choose_truncation`]; kernels stay cheap to
/// build up to here.
pub const DEFAULT_CHOICE_CAP: usize = 512;

/// Smallest truncation whose realized bracket width meets `gap_target`,
/// searched over powers of two and then refined by bisection. The bound
/// shrinks like `1/sqrt(M)`, so doubling is near-optimal for the quadratic
/// per-solve cost. Only certified rungs count: feeding an uncertified
/// (possibly above-optimal) value into the bracket would overstate the
/// lower bound. Returns [`TruncationStatus::CapReached`] with the best
/// achieved gap when the target is out of reach below `cap`.
pub fn choose_truncation(
    energy: f64,
    xi: f64,
    gap_target: f64,
    cap: usize,
    restarts: usize,
    opts: &SolveOptions,
) -> Result<TruncationChoice> {
    if !gap_target.is_finite() || gap_target <= 0.0 || gap_target > 1.0 {
        return Err(Error::InvalidGapTarget(gap_target));
    }
    check_energy(energy)?;

    let mut ladder = vec![0usize];
    let mut m = 1;
    while m < cap {
        ladder.push(m);
        m *= 2;
    }
    ladder.push(cap);

    let mut best: Option<BoundedSolve> = None;
    let mut previous_rung = 0usize;
    for &rung in &ladder {
        let solved = solve_bounded(xi, energy, rung, restarts, opts)?;
        let certified = solved.status == SolveStatus::Certified;
        let gap = solved.result.gap();
        if certified {
            let improved = best.as_ref().map(|b| gap < b.result.gap()).unwrap_or(true);
            if improved {
                best = Some(solved.clone());
            }
            if gap <= gap_target {
                // refine: smallest passing truncation in (previous_rung, rung]
                let mut lo = previous_rung;
                let mut hi = rung;
                let mut hit = solved;
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    let trial = solve_bounded(xi, energy, mid, restarts, opts)?;
                    if trial.status == SolveStatus::Certified && trial.result.gap() <= gap_target
                    {
                        hi = mid;
                        hit = trial;
                    } else {
                        lo = mid;
                    }
                }
                return Ok(TruncationChoice {
                    trunc: hi,
                    solve: hit,
                    status: TruncationStatus::Converged,
                });
            }
        }
        previous_rung = rung;
    }

    match best {
        Some(solve) => {
            let best_gap = solve.result.gap();
            Ok(TruncationChoice {
                trunc: solve.result.trunc,
                solve,
                status: TruncationStatus::CapReached { best_gap },
            })
        }
        None => {
            // no rung certified; report the cap honestly with its solve
            let solve = solve_bounded(xi, energy, cap, restarts, opts)?;
            let best_gap = solve.result.gap();
            Ok(TruncationChoice {
                trunc: cap,
                solve,
                status: TruncationStatus::CapReached { best_gap },
            })
        }
    }
}
