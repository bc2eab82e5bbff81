//! KKT certificates of global optimality, and the closed-form solution
//! families with their dual variables.
//!
//! For the convex program `min p^T G p` over the energy-bounded simplex, the
//! Lagrangian is
//!
//! ```text
//! L(p, mu, beta, gamma) = p^T G p + mu (sum_n n p_n - E)
//!                         - sum_n beta_n p_n + gamma (sum_n p_n - 1)
//! ```
//!
//! with `mu >= 0` for the energy bound, `beta_n >= 0` for nonnegativity and
//! `gamma` free for normalization. Because the objective is convex and the
//! constraints are linear, the KKT conditions are both necessary and
//! sufficient: a candidate paired with dual variables that satisfy
//! stationarity, complementary slackness, primal and dual feasibility is a
//! global optimum, with zero duality gap.
//!
//! [`certify`] reconstructs dual variables from a primal candidate by least
//! squares on the stationarity rows of its support; the off-support rows
//! then determine `beta_n = 2 (G p)_n + n mu + gamma`. Rank-deficient
//! support systems (a single occupied level with the energy bound active)
//! are resolved by the smallest `mu >= 0` compatible with the off-support
//! rows and flagged [`CertStatus::Degenerate`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{self, SpectrumVector};
use crate::math::compensated_sum;
use crate::solver::QpProblem;

/// Default support-detection threshold, shared with the solver.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;

/// Primal feasibility tolerance for an accepted certificate.
const PRIMAL_TOLERANCE: f64 = 1e-12;

/// Dual variables may dip this far below zero.
const DUAL_TOLERANCE: f64 = 1e-12;

/// Candidates violating the constraints beyond this gate are not certified
/// at all; they are reported as errors.
const INFEASIBILITY_GATE: f64 = 1e-6;

/// Relative slack below which the energy constraint is treated as active.
const ENERGY_ACTIVE_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertStatus {
    /// All residuals within tolerance; the candidate is globally optimal.
    Verified,
    /// Residuals within tolerance, but the dual variables came from a
    /// rank-deficient support system.
    Degenerate,
    /// Some residual or sign condition failed.
    Rejected,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KktResiduals {
    /// Largest violated stationarity row on the support.
    pub stationarity: f64,
    /// Largest complementary-slackness product.
    pub slackness: f64,
    /// Largest constraint violation of the candidate itself.
    pub primal: f64,
}

/// Proof object for global optimality of a candidate spectrum.
#[derive(Clone, Debug, Serialize)]
pub struct KktCertificate {
    pub mu: f64,
    pub gamma: f64,
    pub betas: Vec<f64>,
    pub residuals: KktResiduals,
    /// `f(p) - g(mu, beta, gamma)` with the dual function evaluated at the
    /// candidate; zero for an exact optimum.
    pub gap: f64,
    pub status: CertStatus,
}

impl KktCertificate {
    pub fn is_accepted(&self) -> bool {
        self.status != CertStatus::Rejected
    }

    fn min_dual(&self) -> f64 {
        self.betas
            .iter()
            .copied()
            .fold(self.mu, f64::min)
    }
}

fn primal_residual(candidate: &SpectrumVector, energy: f64) -> f64 {
    let negativity = candidate
        .probs()
        .iter()
        .fold(0.0f64, |worst, &p| worst.max(-p));
    (candidate.sum() - 1.0)
        .abs()
        .max((candidate.energy() - energy).max(0.0))
        .max(negativity)
}

struct Duals {
    mu: f64,
    gamma: f64,
    degenerate: bool,
}

/// Least-squares dual reconstruction from the support stationarity rows
/// `n mu + gamma = -2 (G p)_n`.
fn reconstruct_duals(kp: &[f64], support: &[usize], energy_active: bool) -> Duals {
    if !energy_active {
        // complementary slackness forces mu = 0; gamma is the mean residual
        let gamma = -2.0 * compensated_sum(support.iter().map(|&n| kp[n])) / support.len() as f64;
        return Duals {
            mu: 0.0,
            gamma,
            degenerate: false,
        };
    }
    if support.len() >= 2 {
        // normal equations for (mu, gamma); full rank whenever the support
        // holds two distinct levels
        let k = support.len() as f64;
        let sn: f64 = support.iter().map(|&n| n as f64).sum();
        let snn: f64 = support.iter().map(|&n| (n * n) as f64).sum();
        let rhs: Vec<f64> = support.iter().map(|&n| -2.0 * kp[n]).collect();
        let sr: f64 = compensated_sum(rhs.iter().copied());
        let snr: f64 =
            compensated_sum(support.iter().zip(&rhs).map(|(&n, &r)| n as f64 * r));
        let det = snn * k - sn * sn;
        let mu = (snr * k - sn * sr) / det;
        let gamma = (sr - mu * sn) / k;
        return Duals {
            mu,
            gamma,
            degenerate: false,
        };
    }
    // single occupied level j with the energy row active: stationarity fixes
    // gamma = -2 (G p)_j - mu j only up to the line parameterized by mu.
    // Take the smallest mu >= 0 that keeps every off-support row
    // beta_n = 2((G p)_n - (G p)_j) + (n - j) mu nonnegative.
    let j = support[0];
    let mut mu = 0.0f64;
    for (n, &kpn) in kp.iter().enumerate() {
        if n > j {
            mu = mu.max(2.0 * (kp[j] - kpn) / (n - j) as f64);
        }
    }
    Duals {
        mu,
        gamma: -2.0 * kp[j] - mu * j as f64,
        degenerate: true,
    }
}

/// Assemble a certificate from given duals: betas from the stationarity
/// rows (zero on the declared support), all residuals, and the duality gap.
fn certificate_from_duals(
    problem: &QpProblem,
    candidate: &SpectrumVector,
    kp: &[f64],
    support: &[usize],
    duals: Duals,
    tol: f64,
) -> KktCertificate {
    let energy = problem.energy();
    let Duals { mu, gamma, degenerate } = duals;

    let mut betas = Vec::with_capacity(kp.len());
    let mut stationarity = 0.0f64;
    for (n, &kpn) in kp.iter().enumerate() {
        let row = 2.0 * kpn + mu * n as f64 + gamma;
        if support.contains(&n) {
            stationarity = stationarity.max(row.abs());
            betas.push(0.0);
        } else {
            betas.push(row);
        }
    }

    let energy_slack = candidate.energy() - energy;
    let slackness = betas
        .iter()
        .zip(candidate.probs())
        .map(|(b, p)| (b * p).abs())
        .fold((mu * energy_slack).abs(), f64::max);

    let primal = primal_residual(candidate, energy);

    // dual value at the candidate: g = L(p, duals) when stationarity holds,
    // so the gap reduces to the complementary-slackness terms
    let beta_dot_p = compensated_sum(betas.iter().zip(candidate.probs()).map(|(b, p)| b * p));
    let gap = -mu * energy_slack + beta_dot_p - gamma * (candidate.sum() - 1.0);

    let mut cert = KktCertificate {
        mu,
        gamma,
        betas,
        residuals: KktResiduals {
            stationarity,
            slackness,
            primal,
        },
        gap,
        status: CertStatus::Rejected,
    };
    let accepted = cert.residuals.stationarity <= tol
        && cert.residuals.slackness <= tol
        && cert.residuals.primal <= PRIMAL_TOLERANCE
        && cert.min_dual() >= -DUAL_TOLERANCE
        && cert.gap.abs() <= tol;
    cert.status = match (accepted, degenerate) {
        (false, _) => CertStatus::Rejected,
        (true, true) => CertStatus::Degenerate,
        (true, false) => CertStatus::Verified,
    };
    cert
}

/// Build and verify a KKT certificate for `candidate`.
///
/// Dual variables are reconstructed from the candidate's support, residuals
/// and the duality gap are filled in, and the status reflects whether every
/// condition holds at tolerance `tol` (stationarity, slackness, gap) with
/// primal feasibility at 1e-12 and dual nonnegativity at -1e-12.
pub fn certify(problem: &QpProblem, candidate: &SpectrumVector, tol: f64) -> Result<KktCertificate> {
    let kernel = problem.kernel();
    if candidate.trunc() != problem.trunc() {
        return Err(Error::DimensionMismatch {
            vector: candidate.trunc() + 1,
            kernel: kernel.dim(),
        });
    }
    let residual = primal_residual(candidate, problem.energy());
    if residual > INFEASIBILITY_GATE {
        return Err(Error::InfeasibleCandidate {
            residual,
            limit: INFEASIBILITY_GATE,
        });
    }

    let kp = kernel.matvec(candidate.probs())?;
    let support = {
        let s = candidate.support(SUPPORT_THRESHOLD);
        if s.is_empty() {
            // fully spread mass below threshold cannot occur for feasible
            // candidates, but guard with the largest entry
            vec![candidate
                .probs()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(n, _)| n)
                .unwrap_or(0)]
        } else {
            s
        }
    };
    let energy_active = candidate.energy()
        >= problem.energy() - ENERGY_ACTIVE_TOLERANCE * (1.0 + problem.energy());
    let duals = reconstruct_duals(&kp, &support, energy_active);
    Ok(certificate_from_duals(
        problem, candidate, &kp, &support, duals, tol,
    ))
}

/// A closed-form optimum together with its verified certificate.
#[derive(Clone, Debug)]
pub struct AnalyticSolution {
    pub spectrum: SpectrumVector,
    pub value: f64,
    pub certificate: KktCertificate,
}

fn analytic_certificate(
    energy: f64,
    xi: f64,
    trunc: usize,
    spectrum: &SpectrumVector,
    support: &[usize],
    mu: f64,
    gamma: f64,
) -> Result<KktCertificate> {
    let problem = QpProblem::build(xi, energy, trunc)?;
    let kp = problem.kernel().matvec(spectrum.probs())?;
    Ok(certificate_from_duals(
        &problem,
        spectrum,
        &kp,
        support,
        Duals {
            mu,
            gamma,
            degenerate: false,
        },
        1e-9,
    ))
}

fn sign_conditions_hold(spectrum: &SpectrumVector, cert: &KktCertificate) -> bool {
    spectrum.probs().iter().all(|&p| p >= -DUAL_TOLERANCE)
        && cert.mu >= -DUAL_TOLERANCE
        && cert.betas.iter().all(|&b| b >= -DUAL_TOLERANCE)
}

/// Two-level optimum `p = (1-E, E, 0, ...)` for `0 <= E <= 1`, with duals
///
/// ```text
/// mu    = 2 xi (1 - (2E - 1) xi) / (1 + xi)^3
/// gamma = -2 (1 + (1 - E) xi) / (1 + xi)^2
/// f*    = (1 + xi (2 + xi - 2E (1 + (1 - E) xi))) / (1 + xi)^3
/// ```
///
/// Returns `Ok(None)` when any primal weight or dual variable turns
/// negative (the regime boundary).
pub fn analytic_two_point(energy: f64, xi: f64, trunc: usize) -> Result<Option<AnalyticSolution>> {
    if !energy.is_finite() || !(0.0..=1.0).contains(&energy) {
        return Err(Error::EnergyOutsideFamily {
            energy,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if !xi.is_finite() || xi < 0.0 {
        return Err(Error::InvalidNoise(xi));
    }
    if trunc < 1 {
        return Err(Error::TruncationBelowEnergy { trunc, energy: 1.0 });
    }
    let one_plus = 1.0 + xi;
    let mu = 2.0 * xi * (1.0 - (2.0 * energy - 1.0) * xi) / one_plus.powi(3);
    let gamma = -2.0 * (1.0 + (1.0 - energy) * xi) / one_plus.powi(2);
    let value =
        (1.0 + xi * (2.0 + xi - 2.0 * energy * (1.0 + (1.0 - energy) * xi))) / one_plus.powi(3);

    let mut probs = vec![0.0; trunc + 1];
    probs[0] = 1.0 - energy;
    probs[1] = energy;
    let spectrum = SpectrumVector::normalized(probs)?;
    let certificate = analytic_certificate(energy, xi, trunc, &spectrum, &[0, 1], mu, gamma)?;
    if !sign_conditions_hold(&spectrum, &certificate) {
        return Ok(None);
    }
    Ok(Some(AnalyticSolution {
        spectrum,
        value,
        certificate,
    }))
}

/// Three-level optimum on levels {0, 1, 2} for `1 <= E <= 2`, `xi > 0`:
///
/// ```text
/// p0 = (xi (5 xi + 3E (1 - xi) - 2) - 1) / (6 xi^2)
/// p1 = (1 + xi (2 - 3E + xi)) / (3 xi^2)
/// p2 = (1 + xi)(xi (3E - 1) - 1) / (6 xi^2)
/// mu = xi (1 + (1 - E) xi) / (1 + xi)^3
/// gamma = -(5 + (5 - 3E) xi) / (3 (1 + xi)^2)
/// f* = (5 + 5 xi (2 + xi) - 3 E xi (2 + (2 - E) xi)) / (6 (1 + xi)^3)
/// ```
///
/// Returns `Ok(None)` outside the validity region (any weight or dual
/// negative). Zero noise is rejected: the weights divide by `xi^2`.
pub fn analytic_three_point(energy: f64, xi: f64, trunc: usize) -> Result<Option<AnalyticSolution>> {
    if !energy.is_finite() || !(1.0..=2.0).contains(&energy) {
        return Err(Error::EnergyOutsideFamily {
            energy,
            lo: 1.0,
            hi: 2.0,
        });
    }
    if !xi.is_finite() || xi < 0.0 {
        return Err(Error::InvalidNoise(xi));
    }
    if xi == 0.0 {
        return Err(Error::ZeroNoiseFamily);
    }
    if trunc < 2 {
        return Err(Error::TruncationBelowEnergy { trunc, energy: 2.0 });
    }
    let one_plus = 1.0 + xi;
    let xi2 = xi * xi;
    let p0 = (xi * (5.0 * xi + 3.0 * energy * (1.0 - xi) - 2.0) - 1.0) / (6.0 * xi2);
    let p1 = (1.0 + xi * (2.0 - 3.0 * energy + xi)) / (3.0 * xi2);
    let p2 = one_plus * (xi * (3.0 * energy - 1.0) - 1.0) / (6.0 * xi2);
    if p0 < -DUAL_TOLERANCE || p1 < -DUAL_TOLERANCE || p2 < -DUAL_TOLERANCE {
        return Ok(None);
    }
    let mu = xi * (1.0 + (1.0 - energy) * xi) / one_plus.powi(3);
    let gamma = -(5.0 + (5.0 - 3.0 * energy) * xi) / (3.0 * one_plus.powi(2));
    let value = (5.0 + 5.0 * xi * (2.0 + xi) - 3.0 * energy * xi * (2.0 + (2.0 - energy) * xi))
        / (6.0 * one_plus.powi(3));

    let mut probs = vec![0.0; trunc + 1];
    probs[0] = p0.max(0.0);
    probs[1] = p1.max(0.0);
    probs[2] = p2.max(0.0);
    let spectrum = SpectrumVector::normalized(probs)?;
    let certificate = analytic_certificate(energy, xi, trunc, &spectrum, &[0, 1, 2], mu, gamma)?;
    if !sign_conditions_hold(&spectrum, &certificate) {
        return Ok(None);
    }
    Ok(Some(AnalyticSolution {
        spectrum,
        value,
        certificate,
    }))
}

/// The low-noise optimal state: weights `(1 - {E}, {E})` on the Fock levels
/// `floor(E)`, `ceil(E)`. At integer `E` this is a single level.
pub fn small_xi_state(energy: f64) -> Result<SpectrumVector> {
    kernel::adjacent_level_state(energy)
}

/// Fidelity of the low-noise state under noise `xi`, evaluated directly
/// from the kernel entries of its (at most two) occupied levels.
pub fn small_xi_fidelity(energy: f64, xi: f64) -> Result<f64> {
    if !energy.is_finite() || energy < 0.0 {
        return Err(Error::InvalidEnergy(energy));
    }
    let lo = energy.floor() as usize;
    let frac = energy - energy.floor();
    if frac == 0.0 {
        return kernel::element(lo, lo, xi);
    }
    let hi = lo + 1;
    Ok((1.0 - frac) * (1.0 - frac) * kernel::element(lo, lo, xi)?
        + 2.0 * frac * (1.0 - frac) * kernel::element(lo, hi, xi)?
        + frac * frac * kernel::element(hi, hi, xi)?)
}
