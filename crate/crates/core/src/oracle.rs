//! Independent brute-force verifiers: exhaustive lattice search for small
//! quadratic programs and finite-difference gradient checks.
//!
//! The grid search enumerates every composition of `1/resolution` mass units
//! over the Fock levels that satisfies the energy budget, so its minimum is
//! an upper bound on the true optimum that tightens with the resolution.
//! Branches are skipped only when a provable lower bound on every completion
//! (all kernel entries are positive, so dropping unassigned cross terms
//! never increases the value) already meets the incumbent, which leaves the
//! returned minimum exact over the lattice. The search shares nothing with
//! the solver beyond the kernel entries themselves, which are cross-checked
//! separately against closed forms.

use crate::error::{Error, Result};
use crate::kernel::{KernelMatrix, SpectrumVector};
use crate::math::Accumulator;
use crate::solver::QpProblem;

/// Largest truncation the enumeration accepts.
pub const GRID_MAX_TRUNC: usize = 8;

const RESOLUTIONS: [f64; 3] = [0.01, 0.005, 0.001];

#[derive(Clone, Debug)]
pub struct GridSearchResult {
    pub best_value: f64,
    pub best_point: SpectrumVector,
    pub resolution: f64,
    pub points_evaluated: u64,
}

struct Search<'a> {
    kernel: &'a KernelMatrix,
    resolution: f64,
    units: u64,
    /// min of the kernel over the leading block [0..=j]^2
    min_block: Vec<f64>,
    counts: Vec<u64>,
    best_value: f64,
    best_counts: Vec<u64>,
    points: u64,
}

impl Search<'_> {
    fn exact_value(&self) -> f64 {
        let mut acc = Accumulator::new();
        for (n, &cn) in self.counts.iter().enumerate() {
            if cn == 0 {
                continue;
            }
            let qn = cn as f64 / self.units as f64;
            for (m, &cm) in self.counts.iter().enumerate() {
                if cm == 0 {
                    continue;
                }
                acc.add(qn * (cm as f64 / self.units as f64) * self.kernel.get(n, m));
            }
        }
        acc.value()
    }

    fn record_leaf(&mut self, c0: u64, c1: u64, value: f64) {
        self.points += 1;
        if value < self.best_value {
            self.counts[0] = c0;
            if self.counts.len() > 1 {
                self.counts[1] = c1;
            }
            let exact = self.exact_value();
            if exact < self.best_value {
                self.best_value = exact;
                self.best_counts = self.counts.clone();
            }
            self.counts[0] = 0;
            if self.counts.len() > 1 {
                self.counts[1] = 0;
            }
        }
    }

    /// Exact integer minimum of the final line: the remaining mass splits
    /// between levels 0 and 1, where the objective is a one-dimensional
    /// quadratic in `c_1`. Its lattice minimum sits at the clamped vertex
    /// neighbours when the leading coefficient is positive and at the
    /// endpoints otherwise, so checking those points is exhaustive.
    fn final_line(&mut self, rem_units: u64, rem_energy: u64, partial: f64, h: &[f64]) {
        let g00 = self.kernel.get(0, 0);
        let g01 = self.kernel.get(0, 1);
        let g11 = self.kernel.get(1, 1);
        let resolution = self.resolution;
        let r = rem_units as f64 * resolution;
        let max_c1 = rem_units.min(rem_energy);
        let value_at = move |c1: u64| -> f64 {
            let q1 = c1 as f64 * resolution;
            let q0 = r - q1;
            partial
                + q1 * q1 * g11
                + 2.0 * q1 * h[1]
                + q0 * q0 * g00
                + 2.0 * q0 * h[0]
                + 2.0 * q0 * q1 * g01
        };

        let mut candidates = [0u64, max_c1, 0, 0];
        let mut len = 2;
        let curvature = g11 + g00 - 2.0 * g01;
        if curvature > 0.0 {
            let vertex = (h[0] - h[1] + r * (g00 - g01)) / curvature / self.resolution;
            let lo = vertex.floor().clamp(0.0, max_c1 as f64) as u64;
            candidates[2] = lo;
            candidates[3] = (lo + 1).min(max_c1);
            len = 4;
        }
        for i in 0..len {
            let c1 = candidates[i];
            if candidates[..i].contains(&c1) {
                continue;
            }
            self.record_leaf(rem_units - c1, c1, value_at(c1));
        }
    }

    /// `h[i]` carries `sum_{assigned m} q_m G(i, m)`; passed by value so
    /// sibling branches never see restore drift.
    fn descend(&mut self, level: usize, rem_units: u64, rem_energy: u64, partial: f64, h: &[f64]) {
        if level == 0 {
            let q0 = rem_units as f64 * self.resolution;
            let value = partial + q0 * q0 * self.kernel.get(0, 0) + 2.0 * q0 * h[0];
            self.record_leaf(rem_units, 0, value);
            return;
        }
        if level == 1 {
            self.final_line(rem_units, rem_energy, partial, h);
            return;
        }

        let max_count = rem_units.min(rem_energy / level as u64);
        let mut child_h = vec![0.0; level];
        for count in 0..=max_count {
            let q = count as f64 * self.resolution;
            let assigned = partial + q * q * self.kernel.get(level, level)
                + 2.0 * q * h[level];
            let mut min_h = f64::INFINITY;
            for i in 0..level {
                child_h[i] = h[i] + q * self.kernel.get(i, level);
                min_h = min_h.min(child_h[i]);
            }
            let rem_mass = (rem_units - count) as f64 * self.resolution;
            let bound =
                assigned + 2.0 * rem_mass * min_h + rem_mass * rem_mass * self.min_block[level - 1];
            if bound >= self.best_value {
                continue;
            }
            self.counts[level] = count;
            self.descend(
                level - 1,
                rem_units - count,
                rem_energy - count * level as u64,
                assigned,
                &child_h,
            );
            self.counts[level] = 0;
        }
    }
}

/// Exhaustive lattice minimization of the QP over compositions of
/// `1/resolution` into `trunc + 1` parts under the energy budget.
pub fn grid_search_qp(problem: &QpProblem, resolution: f64) -> Result<GridSearchResult> {
    let trunc = problem.trunc();
    if trunc > GRID_MAX_TRUNC {
        return Err(Error::GridTooLarge {
            requested: trunc,
            max: GRID_MAX_TRUNC,
        });
    }
    if !RESOLUTIONS.contains(&resolution) {
        return Err(Error::InvalidResolution(resolution));
    }
    let units = (1.0 / resolution).round() as u64;
    let max_lattice_energy = units * trunc as u64;
    let energy_units =
        ((problem.energy() * units as f64 + 1e-9).floor() as u64).min(max_lattice_energy);

    let kernel = problem.kernel();
    let dim = kernel.dim();
    let mut min_block = Vec::with_capacity(dim);
    let mut running = f64::INFINITY;
    for j in 0..dim {
        for i in 0..=j {
            running = running.min(kernel.get(i, j));
        }
        min_block.push(running);
    }

    let mut search = Search {
        kernel,
        resolution,
        units,
        min_block,
        counts: vec![0; dim],
        best_value: f64::INFINITY,
        best_counts: vec![0; dim],
        points: 0,
    };
    let h0 = vec![0.0; dim];
    search.descend(trunc, units, energy_units, 0.0, &h0);

    let mut best_counts = search.best_counts;
    if search.points == 0 {
        // cannot happen: the vacuum composition is always feasible
        best_counts[0] = units;
    }
    let probs: Vec<f64> = best_counts
        .iter()
        .map(|&c| c as f64 / units as f64)
        .collect();
    Ok(GridSearchResult {
        best_value: search.best_value,
        best_point: SpectrumVector::normalized(probs)?,
        resolution,
        points_evaluated: search.points,
    })
}

/// Central finite differences of the objective, probing each coordinate
/// without constraints.
pub fn finite_diff_gradient(
    p: &SpectrumVector,
    kernel: &KernelMatrix,
    step: f64,
) -> Result<Vec<f64>> {
    if !(1e-8..=1e-4).contains(&step) {
        return Err(Error::InvalidStep(step));
    }
    if p.trunc() + 1 != kernel.dim() {
        return Err(Error::DimensionMismatch {
            vector: p.trunc() + 1,
            kernel: kernel.dim(),
        });
    }
    let mut grad = Vec::with_capacity(kernel.dim());
    let mut probe = p.probs().to_vec();
    for n in 0..kernel.dim() {
        let original = probe[n];
        probe[n] = original + step;
        let plus = kernel.quadratic_form(&probe)?;
        probe[n] = original - step;
        let minus = kernel.quadratic_form(&probe)?;
        probe[n] = original;
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(grad)
}
