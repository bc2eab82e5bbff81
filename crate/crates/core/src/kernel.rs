//! Fock-space fidelity kernel for the additive-noise channel.
//!
//! An additive-noise channel with variance `xi >= 0` factors into a pure-loss
//! channel of transmissivity `eta = 1/(1+xi)` followed by a quantum-limited
//! amplifier of gain `1/eta`. For a twin-Fock input with number-diagonal
//! spectrum `p`, the channel fidelity against the identity channel is the
//! quadratic form `f(p) = p^T G p` with kernel entries
//!
//! ```text
//! G(n, m, xi) = sum_{k=0}^{min(n,m)} C(n,k) C(m,k) xi^{2k} / (1+xi)^{n+m+1}
//! ```
//!
//! Every entry lies in (0, 1], the matrix is symmetric, and `2G` (the Hessian
//! of `f`) is positive semi-definite, so `f` is convex on the simplex.
//!
//! Two evaluation routes are used. For `n, m <= 60` the k-sum is accumulated
//! by the term recurrence
//!
//! ```text
//! t_{k+1} = t_k * (n-k)(m-k) xi^2 / (k+1)^2,   t_0 = (1+xi)^-(n+m+1)
//! ```
//!
//! which stays in range because every term is bounded by the entry itself.
//! For larger indices `t_0` can underflow, so the same recurrence runs on
//! the numerator terms under a tracked binary exponent (exact power-of-two
//! renormalization), folding the common `(1+xi)^-(n+m+1)` factor in once at
//! the end in log space. Both routes are cross-checked in the tests against
//! an independent terminating-hypergeometric series.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::{compensated_dot, compensated_sum, Accumulator, LogFactorials};

/// Largest truncation a kernel will be built for.
pub const TRUNCATION_CAP: usize = 2048;

/// Largest index pair handled by the direct term recurrence; beyond this
/// the exponent-tracked route is used.
const RECURRENCE_LIMIT: usize = 60;

fn check_noise(xi: f64) -> Result<()> {
    if !xi.is_finite() || xi < 0.0 {
        return Err(Error::InvalidNoise(xi));
    }
    Ok(())
}

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

/// The plain recurrence needs `t_0 = (1+xi)^-(n+m+1)` representable; past
/// this the exponent-tracked route takes over regardless of index size.
fn plain_route_safe(n: usize, m: usize, xi: f64) -> bool {
    n.max(m) <= RECURRENCE_LIMIT && (n + m + 1) as f64 * xi.ln_1p() < 700.0
}

/// Single kernel entry `G(n, m, xi)`.
pub fn element(n: usize, m: usize, xi: f64) -> Result<f64> {
    check_noise(xi)?;
    if plain_route_safe(n, m, xi) {
        Ok(element_recurrence(n, m, xi))
    } else {
        Ok(element_scaled_recurrence(n, m, xi))
    }
}

fn element_recurrence(n: usize, m: usize, xi: f64) -> f64 {
    let exponent = (n + m + 1) as i32;
    let mut term = (1.0 + xi).powi(-exponent);
    let xi2 = xi * xi;
    let mut acc = Accumulator::new();
    acc.add(term);
    for k in 0..n.min(m) {
        term *= (n - k) as f64 * (m - k) as f64 * xi2 / (((k + 1) * (k + 1)) as f64);
        if term == 0.0 {
            break;
        }
        acc.add(term);
    }
    acc.value()
}

/// Exponent-tracked evaluation for large indices, where the plain
/// recurrence would underflow at `t_0 = (1+xi)^-(n+m+1)` and the raw k-sum
/// would overflow. The numerator terms `u_0 = 1`,
/// `u_{k+1} = u_k (n-k)(m-k) xi^2 / (k+1)^2` are accumulated under a shared
/// binary exponent, renormalizing term and sum together by an exact power
/// of two whenever the running term grows past 1e100; the common factor
/// `(1+xi)^-(n+m+1)` is folded in once at the end, in log space. Once the
/// terms decay, the loop stops as soon as the entire remaining tail
/// (at most `count * term`, the terms being decreasing) cannot move the
/// sum at 1e-20 relative.
fn element_scaled_recurrence(n: usize, m: usize, xi: f64) -> f64 {
    let ln_denom = (n + m + 1) as f64 * xi.ln_1p();
    if xi == 0.0 {
        // only k = 0 survives; skip the log of zero
        return (-ln_denom).exp();
    }
    const RESCALE_AT: f64 = 1e100;
    // 2^-512, exact
    let scale_down = f64::from_bits(511u64 << 52);

    let xi2 = xi * xi;
    let kmax = n.min(m);
    if xi2 > 1e200 {
        // each term exceeds the previous by at least xi^2 / (k+1)^2; the
        // last one dominates the sum to far beyond f64 precision
        let lf = LogFactorials::up_to(n.max(m));
        let ln_top = lf.ln_binomial(n, kmax)
            + lf.ln_binomial(m, kmax)
            + 2.0 * kmax as f64 * xi.ln()
            - ln_denom;
        return ln_top.exp();
    }
    let mut term = 1.0f64;
    let mut exponent: i64 = 0;
    let mut acc = Accumulator::new();
    acc.add(term);
    for k in 0..kmax {
        let ratio = (n - k) as f64 * (m - k) as f64 * xi2 / (((k + 1) * (k + 1)) as f64);
        term *= ratio;
        while term >= RESCALE_AT {
            term *= scale_down;
            acc.scale(scale_down);
            exponent += 512;
        }
        if ratio < 1.0 && (kmax - k) as f64 * term <= acc.value() * 1e-20 {
            break;
        }
        acc.add(term);
    }
    let ln_value = acc.value().ln() + exponent as f64 * std::f64::consts::LN_2 - ln_denom;
    ln_value.exp()
}

/// Dense symmetric matrix of kernel entries for Fock levels `0..=trunc`.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    entries: Vec<f64>,
    dim: usize,
    xi: f64,
}

impl KernelMatrix {
    /// Build the `(trunc+1) x (trunc+1)` kernel. The upper triangle is
    /// computed and mirrored, so symmetry holds exactly.
    pub fn build(trunc: usize, xi: f64) -> Result<Self> {
        check_noise(xi)?;
        if trunc > TRUNCATION_CAP {
            return Err(Error::TruncationCap {
                requested: trunc,
                cap: TRUNCATION_CAP,
            });
        }
        let dim = trunc + 1;
        let mut entries = vec![0.0; dim * dim];
        for n in 0..dim {
            for m in n..dim {
                let value = if plain_route_safe(n, m, xi) {
                    element_recurrence(n, m, xi)
                } else {
                    element_scaled_recurrence(n, m, xi)
                };
                entries[n * dim + m] = value;
                entries[m * dim + n] = value;
            }
        }
        Ok(Self { entries, dim, xi })
    }

    pub fn trunc(&self) -> usize {
        self.dim - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn get(&self, n: usize, m: usize) -> f64 {
        self.entries[n * self.dim + m]
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.entries[n * self.dim..(n + 1) * self.dim]
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                vector: len,
                kernel: self.dim,
            });
        }
        Ok(())
    }

    /// `G x` with compensated row sums.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        Ok((0..self.dim)
            .map(|n| compensated_dot(self.row(n), x))
            .collect())
    }

    /// `x^T G x` with compensated summation at both levels.
    pub fn quadratic_form(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let mut acc = Accumulator::new();
        for n in 0..self.dim {
            acc.add(x[n] * compensated_dot(self.row(n), x));
        }
        Ok(acc.value())
    }

    /// Largest row sum; an upper bound on the spectral radius.
    pub(crate) fn row_sum_bound(&self) -> f64 {
        (0..self.dim)
            .map(|n| compensated_sum(self.row(n).iter().copied()))
            .fold(0.0, f64::max)
    }
}

/// Probability weights over Fock levels `0..=trunc`.
///
/// Entries must be nonnegative within `-1e-12`; construction through
/// [`SpectrumVector::normalized`] additionally requires the weights to sum
/// to 1 within `1e-10` and marks the vector as normalized.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SpectrumVector {
    probs: Vec<f64>,
    trunc: usize,
    normalized: bool,
}

pub(crate) const WEIGHT_TOLERANCE: f64 = 1e-12;
const NORMALIZATION_TOLERANCE: f64 = 1e-10;

impl SpectrumVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite { context: "spectrum" });
        }
        for (index, &value) in probs.iter().enumerate() {
            if value < -WEIGHT_TOLERANCE {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let trunc = probs.len() - 1;
        Ok(Self {
            probs,
            trunc,
            normalized: false,
        })
    }

    pub fn normalized(probs: Vec<f64>) -> Result<Self> {
        let mut s = Self::new(probs)?;
        let total = s.sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized(total));
        }
        s.normalized = true;
        Ok(s)
    }

    /// Unit mass on a single Fock level.
    pub fn point_mass(level: usize, trunc: usize) -> Self {
        assert!(level <= trunc, "level {level} beyond truncation {trunc}");
        let mut probs = vec![0.0; trunc + 1];
        probs[level] = 1.0;
        Self {
            probs,
            trunc,
            normalized: true,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs[n]
    }

    pub fn trunc(&self) -> usize {
        self.trunc
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn sum(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }

    /// Mean photon number `sum_n n p_n`.
    pub fn energy(&self) -> f64 {
        compensated_sum(
            self.probs
                .iter()
                .enumerate()
                .map(|(n, &p)| n as f64 * p),
        )
    }

    /// Indices with weight above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > threshold)
            .map(|(n, _)| n)
            .collect()
    }

    /// Zero-extend to a larger truncation.
    pub fn padded(&self, trunc: usize) -> Self {
        assert!(trunc >= self.trunc, "cannot pad to a smaller truncation");
        let mut probs = self.probs.clone();
        probs.resize(trunc + 1, 0.0);
        Self {
            probs,
            trunc,
            normalized: self.normalized,
        }
    }
}

/// Noise description for a benchmark instance: either the additive-noise
/// variance of a teleportation run or the transmissivity of a lossy
/// detector, together with the input energy budget.
#[derive(Clone, Copy, Debug, Serialize)]
pub enum NoiseParameter {
    /// Additive-noise variance `xi >= 0`.
    AdditiveVariance(f64),
    /// Pure-loss transmissivity `eta` in [0, 1].
    Transmissivity(f64),
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NoiseModel {
    parameter: NoiseParameter,
    energy: f64,
}

impl NoiseModel {
    pub fn additive(xi: f64, energy: f64) -> Result<Self> {
        check_noise(xi)?;
        check_energy(energy)?;
        Ok(Self {
            parameter: NoiseParameter::AdditiveVariance(xi),
            energy,
        })
    }

    pub fn lossy(eta: f64, energy: f64) -> Result<Self> {
        check_transmissivity(eta)?;
        check_energy(energy)?;
        Ok(Self {
            parameter: NoiseParameter::Transmissivity(eta),
            energy,
        })
    }

    pub fn parameter(&self) -> NoiseParameter {
        self.parameter
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// The transmissivity governing the loss stage: `eta` itself for a lossy
    /// detector, `1/(1+xi)` for an additive-noise channel. Lies in (0, 1]
    /// for every `xi >= 0`.
    pub fn transmissivity(&self) -> f64 {
        match self.parameter {
            NoiseParameter::AdditiveVariance(xi) => 1.0 / (1.0 + xi),
            NoiseParameter::Transmissivity(eta) => eta,
        }
    }
}

/// The two-level spectrum `(1 - {E})` on `floor(E)` and `{E}` on `ceil(E)`,
/// where `{E}` is the fractional part. At integer `E` this degenerates to a
/// single level. The state saturates the energy bound exactly.
pub(crate) fn adjacent_level_state(energy: f64) -> Result<SpectrumVector> {
    check_energy(energy)?;
    let floor = energy.floor();
    let frac = energy - floor;
    let lo = floor as usize;
    if frac == 0.0 {
        return Ok(SpectrumVector::point_mass(lo, lo));
    }
    let mut probs = vec![0.0; lo + 2];
    probs[lo] = 1.0 - frac;
    probs[lo + 1] = frac;
    SpectrumVector::normalized(probs)
}

/// Channel fidelity `f(p) = p^T G p` of the twin-Fock state with spectrum
/// `p` under the additive-noise channel encoded in `kernel`.
pub fn objective(p: &SpectrumVector, kernel: &KernelMatrix) -> Result<f64> {
    kernel.quadratic_form(p.probs())
}

/// Gradient `2 G p` of the objective.
pub fn gradient(p: &SpectrumVector, kernel: &KernelMatrix) -> Result<Vec<f64>> {
    let mut g = kernel.matvec(p.probs())?;
    for v in &mut g {
        *v *= 2.0;
    }
    Ok(g)
}

/// Action of a pure-loss channel with the given transmissivity on a
/// number-diagonal spectrum: each level `n` redistributes binomially onto
/// levels `k <= n` with keep probability `transmissivity`.
pub fn pure_loss_spectrum(p: &SpectrumVector, transmissivity: f64) -> Result<SpectrumVector> {
    check_transmissivity(transmissivity)?;
    let trunc = p.trunc();
    if transmissivity == 1.0 {
        return Ok(p.clone());
    }
    if transmissivity == 0.0 {
        let mut probs = vec![0.0; trunc + 1];
        probs[0] = p.sum();
        return SpectrumVector::new(probs);
    }
    let lf = LogFactorials::up_to(trunc.max(1));
    let ln_t = transmissivity.ln();
    let ln_keep = (-transmissivity).ln_1p();
    let mut out = vec![Accumulator::new(); trunc + 1];
    for (n, &weight) in p.probs().iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        for (k, acc) in out.iter_mut().enumerate().take(n + 1) {
            let ln_term =
                lf.ln_binomial(n, k) + k as f64 * ln_t + (n - k) as f64 * ln_keep;
            acc.add(weight * ln_term.exp());
        }
    }
    let probs: Vec<f64> = out.iter().map(Accumulator::value).collect();
    if p.is_normalized() {
        SpectrumVector::normalized(probs)
    } else {
        SpectrumVector::new(probs)
    }
}
