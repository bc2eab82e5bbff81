//! Shared numeric helpers: compensated summation, log-factorials for stable
//! binomial coefficients, and a small dense linear solver.

/// Neumaier-compensated accumulator. The running compensation keeps the
/// accumulated error at O(eps) instead of O(n*eps) for n-term sums.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Rescale the accumulated state; exact for powers of two.
    pub fn scale(&mut self, factor: f64) {
        self.sum *= factor;
        self.comp *= factor;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = Accumulator::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

/// Compensated dot product.
pub(crate) fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Table of ln(n!) for n in 0..=max, built by cumulative summation of ln(k).
/// The cumulative error is ~n*eps relative, far below the 1e-12 tolerances
/// this crate works to.
pub(crate) struct LogFactorials {
    table: Vec<f64>,
}

impl LogFactorials {
    pub fn up_to(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = Accumulator::new();
        table.push(0.0);
        for k in 1..=max {
            acc.add((k as f64).ln());
            table.push(acc.value());
        }
        Self { table }
    }

    pub fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        debug_assert!(k <= n && n < self.table.len());
        self.table[n] - self.table[k] - self.table[n - k]
    }
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting, for the
/// small dense systems that arise in active-set refinement and dual
/// reconstruction. Returns `None` when a pivot falls below `1e-12` times the
/// largest initial entry (rank-deficient for our purposes).
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), n);
    if n == 0 {
        return Some(Vec::new());
    }
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |m, &x| m.max(x.abs()))
        .max(1e-300);
    let tol = 1e-12 * scale;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if a[pivot_row][col].abs() <= tol {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            let (pivot_rows, rest) = a.split_at_mut(col + 1);
            let pivot = &pivot_rows[col];
            for (cell, p) in rest[row - col - 1][col..n].iter_mut().zip(&pivot[col..n]) {
                *cell -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = Accumulator::new();
        acc.add(b[col]);
        for k in col + 1..n {
            acc.add(-a[col][k] * x[k]);
        }
        x[col] = acc.value() / a[col][col];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_beats_naive_on_cancellation() {
        // 1 + 1e-16 repeated: naive summation loses the small terms.
        let terms: Vec<f64> = std::iter::once(1.0)
            .chain(std::iter::repeat_n(1e-16, 10_000))
            .collect();
        let compensated = compensated_sum(terms.iter().copied());
        assert!((compensated - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn ln_binomial_matches_exact_small_values() {
        let lf = LogFactorials::up_to(30);
        assert!((lf.ln_binomial(5, 2).exp() - 10.0).abs() < 1e-12);
        assert!((lf.ln_binomial(30, 15).exp() - 155117520.0).abs() < 1e-4);
        assert_eq!(lf.ln_binomial(7, 0), 0.0);
    }

    #[test]
    fn solve_dense_roundtrip() {
        let a = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 4.0],
        ];
        let x_true = [1.0, -2.0, 0.5];
        let b: Vec<f64> = a
            .iter()
            .map(|row| row.iter().zip(&x_true).map(|(c, x)| c * x).sum())
            .collect();
        let x = solve_dense(a, b).unwrap();
        for (got, want) in x.iter().zip(&x_true) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_dense_rejects_singular() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_dense(a, vec![1.0, 2.0]).is_none());
    }
}
