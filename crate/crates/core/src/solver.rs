//! Certified solver for the truncated quadratic program
//!
//! ```text
//! minimize    p^T G p
//! subject to  sum_n n p_n <= E,   p_n >= 0,   sum_n p_n = 1
//! ```
//!
//! over Fock levels `0..=M`. The objective is convex (the Hessian `2G` is
//! positive semi-definite), so any point satisfying the KKT conditions is a
//! global optimum. The solver runs a monotone accelerated projected-gradient
//! descent with step `1/L`, `L` the Lipschitz constant of the gradient
//! (twice the largest kernel eigenvalue, estimated by power iteration), and
//! periodically attempts an exact active-support refinement: the detected
//! support is refit by solving the equality-constrained KKT linear system,
//! the result is re-projected, and it is accepted only when the full KKT
//! certificate from [`crate::certify`] passes at the configured tolerance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certify::{self, CertStatus, KktCertificate};
use crate::error::{Error, Result};
use crate::kernel::{KernelMatrix, SpectrumVector};
use crate::math::solve_dense;

/// Problem instance: kernel, energy bound, and truncation.
#[derive(Clone, Debug)]
pub struct QpProblem {
    kernel: KernelMatrix,
    energy: f64,
    energy_vacuous: bool,
}

impl QpProblem {
    pub fn new(kernel: KernelMatrix, energy: f64) -> Result<Self> {
        if !energy.is_finite() || energy < 0.0 {
            return Err(Error::InvalidEnergy(energy));
        }
        // with sum p = 1 the lattice energy cannot exceed the truncation
        let energy_vacuous = energy >= kernel.trunc() as f64;
        Ok(Self {
            kernel,
            energy,
            energy_vacuous,
        })
    }

    pub fn build(xi: f64, energy: f64, trunc: usize) -> Result<Self> {
        Self::new(KernelMatrix::build(trunc, xi)?, energy)
    }

    /// Build from a noise model. A lossy parameterization converts through
    /// the bijection `xi = (1 - eta)/eta`.
    pub fn from_model(model: &crate::kernel::NoiseModel, trunc: usize) -> Result<Self> {
        let eta = model.transmissivity();
        let xi = match model.parameter() {
            crate::kernel::NoiseParameter::AdditiveVariance(xi) => xi,
            crate::kernel::NoiseParameter::Transmissivity(_) => (1.0 - eta) / eta,
        };
        Self::build(xi, model.energy(), trunc)
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn trunc(&self) -> usize {
        self.kernel.trunc()
    }

    pub fn xi(&self) -> f64 {
        self.kernel.xi()
    }

    /// True when the energy bound cannot bind given `sum p = 1`.
    pub fn energy_vacuous(&self) -> bool {
        self.energy_vacuous
    }
}

/// Solver tolerances and controls.
#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Outer iteration cap.
    pub max_iterations: usize,
    /// Full KKT residual a refined candidate must meet to be accepted.
    pub kkt_tolerance: f64,
    /// Support detection threshold.
    pub support_threshold: f64,
    /// Refinement is attempted every this many iterations.
    pub refine_interval: usize,
    /// Seed for the random restarts in [`solve_with_restarts`].
    pub seed: u64,
    /// Record the accepted objective value at every iteration.
    pub keep_trace: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200_000,
            kkt_tolerance: 1e-9,
            support_threshold: 1e-8,
            refine_interval: 250,
            seed: 0x0c5b_e11c,
            keep_trace: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    /// A KKT certificate at the requested tolerance was accepted.
    Certified,
    /// The iteration cap was reached; the best iterate is returned.
    MaxIterations,
    /// No feasible point exists (not reachable for validated problems; the
    /// vacuum state is always feasible).
    Infeasible,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Certified => write!(f, "certified"),
            SolveStatus::MaxIterations => write!(f, "max-iterations"),
            SolveStatus::Infeasible => write!(f, "infeasible"),
        }
    }
}

/// Solver output. `value` is the objective recomputed at `spectrum`.
#[derive(Clone, Debug)]
pub struct QpSolution {
    pub spectrum: SpectrumVector,
    pub value: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    pub certificate: Option<KktCertificate>,
    pub notes: Vec<String>,
    pub trace: Option<Vec<f64>>,
}

/// Euclidean projection onto `{p >= 0, sum p = 1}` (threshold method).
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = sorted[0] - 1.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (i as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn weighted_energy(p: &[f64]) -> f64 {
    crate::math::compensated_sum(p.iter().enumerate().map(|(n, &x)| n as f64 * x))
}

const ENERGY_BISECTION_TOLERANCE: f64 = 5e-13;

/// Euclidean projection onto the feasible set
/// `{p >= 0, sum p = 1, sum n p_n <= E}`.
///
/// Projects onto the simplex first; when the energy constraint is violated,
/// bisects on the constraint multiplier `tau` with inner simplex projections
/// of `v - tau * (0, 1, ..., M)` until the energy residual is below 5e-13.
pub fn project_feasible(v: &[f64], energy: f64) -> Result<SpectrumVector> {
    if v.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "projection input",
        });
    }
    if !energy.is_finite() || energy < 0.0 {
        return Err(Error::InvalidEnergy(energy));
    }

    let p = project_simplex(v);
    // rounding-level overshoot is feasible within the 1e-12 residual
    // contract; bisecting on it would push the point 5e-13 off saturation
    if weighted_energy(&p) <= energy + 1e-13 * (1.0 + energy) {
        return SpectrumVector::normalized(p);
    }

    let shifted = |tau: f64| -> Vec<f64> {
        let moved: Vec<f64> = v.iter().enumerate().map(|(n, &x)| x - tau * n as f64).collect();
        project_simplex(&moved)
    };

    let mut lo = 0.0;
    let mut hi = 1.0;
    while weighted_energy(&shifted(hi)) > energy {
        lo = hi;
        hi *= 2.0;
        assert!(hi < 1e18, "energy bisection failed to bracket");
    }

    let mut best = shifted(hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let candidate = shifted(mid);
        let e = weighted_energy(&candidate);
        if (e - energy).abs() <= ENERGY_BISECTION_TOLERANCE {
            best = candidate;
            break;
        }
        if e > energy {
            lo = mid;
        } else {
            hi = mid;
            best = candidate;
        }
    }
    SpectrumVector::normalized(best)
}

/// Lipschitz constant of the objective gradient: `2 * lambda_max(G)`,
/// estimated by power iteration and capped by the row-sum bound.
fn gradient_lipschitz(kernel: &KernelMatrix) -> f64 {
    let dim = kernel.dim();
    let mut v = vec![1.0 / (dim as f64).sqrt(); dim];
    let mut rayleigh = kernel.get(0, 0);
    let mut previous = 0.0;
    for _ in 0..500 {
        let w = kernel.matvec(&v).expect("power iteration dimensions");
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        rayleigh = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        if (rayleigh - previous).abs() <= 1e-13 * rayleigh.abs() {
            break;
        }
        previous = rayleigh;
    }
    2.0 * (rayleigh * (1.0 + 1e-6)).min(kernel.row_sum_bound())
}

/// Refit the candidate support exactly: solve the equality-constrained KKT
/// system on `support` (normalization row, energy row when active), dropping
/// the most negative index until the solution is nonnegative. Returns the
/// full-length point, or `None` when the system is rank-deficient.
fn refine_support(problem: &QpProblem, support: &[usize], energy_active: bool) -> Option<Vec<f64>> {
    let kernel = problem.kernel();
    let mut indices: Vec<usize> = support.to_vec();
    loop {
        if indices.is_empty() {
            return None;
        }
        let k = indices.len();
        let rows = k + 1 + usize::from(energy_active);
        let mut a = vec![vec![0.0; rows]; rows];
        let mut b = vec![0.0; rows];
        for (i, &n) in indices.iter().enumerate() {
            for (j, &m) in indices.iter().enumerate() {
                a[i][j] = 2.0 * kernel.get(n, m);
            }
            a[i][k] = 1.0;
            a[k][i] = 1.0;
            if energy_active {
                a[i][k + 1] = n as f64;
                a[k + 1][i] = n as f64;
            }
        }
        b[k] = 1.0;
        if energy_active {
            b[k + 1] = problem.energy();
        }
        let solution = solve_dense(a, b)?;
        let (worst, value) = indices
            .iter()
            .enumerate()
            .map(|(i, _)| (i, solution[i]))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        if value < -1e-12 {
            indices.remove(worst);
            continue;
        }
        let mut full = vec![0.0; kernel.dim()];
        for (i, &n) in indices.iter().enumerate() {
            full[n] = solution[i].max(0.0);
        }
        return Some(full);
    }
}

/// Try to certify `x`, first through support refinement (energy constraint
/// active or slack, most plausible case first), then as-is.
fn attempt_certification(
    problem: &QpProblem,
    x: &[f64],
    opts: &SolveOptions,
) -> Option<(SpectrumVector, KktCertificate)> {
    let raw = SpectrumVector::normalized(x.to_vec()).ok()?;
    let near_saturated =
        !problem.energy_vacuous() && raw.energy() >= problem.energy() - 1e-6 * (1.0 + problem.energy());
    let orders: &[bool] = if problem.energy_vacuous() {
        &[false]
    } else if near_saturated {
        &[true, false]
    } else {
        &[false, true]
    };
    let support = raw.support(opts.support_threshold);

    for &energy_active in orders {
        let Some(refined) = refine_support(problem, &support, energy_active) else {
            continue;
        };
        let Ok(candidate) = project_feasible(&refined, problem.energy()) else {
            continue;
        };
        if let Ok(cert) = certify::certify(problem, &candidate, opts.kkt_tolerance) {
            if cert.status != CertStatus::Rejected {
                return Some((candidate, cert));
            }
        }
    }

    // covers flat directions where the support system is singular but the
    // iterate itself already satisfies the KKT conditions (e.g. xi = 0)
    if let Ok(cert) = certify::certify(problem, &raw, opts.kkt_tolerance) {
        if cert.status != CertStatus::Rejected {
            return Some((raw, cert));
        }
    }
    None
}

fn standard_notes(problem: &QpProblem) -> Vec<String> {
    let mut notes = Vec::new();
    if problem.xi() == 0.0 {
        notes.push(
            "objective is identically 1 on the feasible set (zero noise); the optimal spectrum is not unique"
                .to_string(),
        );
    }
    if problem.energy_vacuous() {
        notes.push(format!(
            "energy bound {} is at least the truncation {}; the energy constraint cannot bind",
            problem.energy(),
            problem.trunc()
        ));
    }
    notes
}

/// Solve from the deterministic vacuum start.
pub fn solve(problem: &QpProblem, opts: &SolveOptions) -> Result<QpSolution> {
    solve_from(problem, &SpectrumVector::point_mass(0, problem.trunc()), opts)
}

/// Monotone accelerated projected-gradient descent from `start`.
pub fn solve_from(
    problem: &QpProblem,
    start: &SpectrumVector,
    opts: &SolveOptions,
) -> Result<QpSolution> {
    let kernel = problem.kernel();
    if start.trunc() != problem.trunc() {
        return Err(Error::DimensionMismatch {
            vector: start.trunc() + 1,
            kernel: kernel.dim(),
        });
    }
    let energy = problem.energy();
    let step = 1.0 / gradient_lipschitz(kernel);

    let mut x = project_feasible(start.probs(), energy)?.probs().to_vec();
    let mut fx = kernel.quadratic_form(&x)?;
    let mut y = x.clone();
    let mut t: f64 = 1.0;
    let mut trace = opts.keep_trace.then(Vec::new);
    let mut last_attempt = 0usize;

    for iteration in 1..=opts.max_iterations.max(1) {
        let grad = kernel.matvec(&y)?;
        let moved: Vec<f64> = y
            .iter()
            .zip(&grad)
            .map(|(yi, gi)| yi - step * 2.0 * gi)
            .collect();
        let z = project_feasible(&moved, energy)?.probs().to_vec();
        let fz = kernel.quadratic_form(&z)?;

        let x_old = std::mem::take(&mut x);
        let f_old = fx;
        // monotone acceptance: keep the better of the proposal and the
        // previous accepted iterate
        if fz <= f_old {
            x = z.clone();
            fx = fz;
        } else {
            x = x_old.clone();
        }

        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = (0..x.len())
            .map(|i| {
                x[i] + (t / t_next) * (z[i] - x[i]) + ((t - 1.0) / t_next) * (x[i] - x_old[i])
            })
            .collect();
        t = t_next;

        if let Some(tr) = trace.as_mut() {
            tr.push(fx);
        }

        let delta = x
            .iter()
            .zip(&x_old)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let stalled = delta <= 1e-11 && fz >= f_old - 1e-15;

        let due = iteration == 1
            || iteration % opts.refine_interval == 0
            || (stalled && iteration >= last_attempt + 100)
            || iteration == opts.max_iterations;
        if due {
            last_attempt = iteration;
            if let Some((spectrum, cert)) = attempt_certification(problem, &x, opts) {
                let value = kernel.quadratic_form(spectrum.probs())?;
                return Ok(QpSolution {
                    spectrum,
                    value,
                    iterations: iteration,
                    status: SolveStatus::Certified,
                    certificate: Some(cert),
                    notes: standard_notes(problem),
                    trace,
                });
            }
            if stalled {
                // restart the momentum; acceleration can oscillate around a
                // nearly flat optimum
                t = 1.0;
                y = x.clone();
            }
        }
    }

    let spectrum = SpectrumVector::normalized(x)?;
    let value = kernel.quadratic_form(spectrum.probs())?;
    let certificate = certify::certify(problem, &spectrum, opts.kkt_tolerance).ok();
    Ok(QpSolution {
        spectrum,
        value,
        iterations: opts.max_iterations.max(1),
        status: SolveStatus::MaxIterations,
        certificate,
        notes: standard_notes(problem),
        trace,
    })
}

/// The two-level state that saturates the energy bound (capped at the
/// truncation when `E >= M`).
fn saturating_seed(problem: &QpProblem) -> SpectrumVector {
    let trunc = problem.trunc();
    let energy = problem.energy();
    if energy >= trunc as f64 {
        return SpectrumVector::point_mass(trunc, trunc);
    }
    crate::kernel::adjacent_level_state(energy)
        .expect("validated energy")
        .padded(trunc)
}

fn random_feasible(problem: &QpProblem, rng: &mut ChaCha8Rng) -> Result<SpectrumVector> {
    let raw: Vec<f64> = (0..=problem.trunc())
        .map(|_| -rng.random_range(1e-12..1.0f64).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    let normalized: Vec<f64> = raw.iter().map(|x| x / total).collect();
    project_feasible(&normalized, problem.energy())
}

/// Run [`solve_from`] from the vacuum point, the energy-saturating
/// two-level state, and `seeds - 2` random feasible draws; return the best
/// certified solution (falling back to the best value when nothing
/// certifies). Convexity makes every certified value a global optimum, so
/// restarts only guard against slow convergence.
pub fn solve_with_restarts(
    problem: &QpProblem,
    seeds: usize,
    opts: &SolveOptions,
) -> Result<QpSolution> {
    if seeds == 0 {
        return Err(Error::NoRestarts);
    }
    let mut starts = vec![SpectrumVector::point_mass(0, problem.trunc())];
    if seeds >= 2 {
        starts.push(saturating_seed(problem));
    }
    if seeds >= 3 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 2..seeds {
            starts.push(random_feasible(problem, &mut rng)?);
        }
    }

    let mut best: Option<QpSolution> = None;
    let mut first_error: Option<Error> = None;
    for start in &starts {
        match solve_from(problem, start, opts) {
            Ok(candidate) => {
                let replace = match &best {
                    None => true,
                    Some(current) => {
                        let cand_cert = candidate.status == SolveStatus::Certified;
                        let curr_cert = current.status == SolveStatus::Certified;
                        (cand_cert && !curr_cert)
                            || (cand_cert == curr_cert && candidate.value < current.value)
                    }
                };
                if replace {
                    best = Some(candidate);
                }
            }
            Err(e) => {
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
        }
    }
    match best {
        Some(solution) => Ok(solution),
        None => Err(first_error.expect("at least one start attempted")),
    }
}
