//! Table builders behind the CLI subcommands. Rows are computed in
//! parallel and emitted in input order, so output stays deterministic.

use rayon::prelude::*;

use cvbench_core::baselines;
use cvbench_core::bounds::{self, BoundedSolve};
use cvbench_core::detector;
use cvbench_core::{SolveOptions, SolveStatus};

use crate::table::{SweepTable, TableInvariant};

#[derive(Debug)]
pub enum RunError {
    Core(cvbench_core::Error),
    /// A sweep cell failed to certify within the iteration cap.
    NotCertified { xi: f64, energy: f64 },
}

impl From<cvbench_core::Error> for RunError {
    fn from(e: cvbench_core::Error) -> Self {
        RunError::Core(e)
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Core(e) => write!(f, "{e}"),
            RunError::NotCertified { xi, energy } => write!(
                f,
                "solve at xi={xi}, E={energy} hit the iteration cap without a certificate"
            ),
        }
    }
}

pub type RunResult<T> = Result<T, RunError>;

/// `steps` evenly spaced points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![min];
    }
    (0..steps)
        .map(|i| min + (max - min) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn certified_solve(xi: f64, energy: f64, trunc: usize, restarts: usize) -> RunResult<BoundedSolve> {
    let solved = bounds::solve_bounded(xi, energy, trunc, restarts, &SolveOptions::default())?;
    if solved.status != SolveStatus::Certified {
        return Err(RunError::NotCertified { xi, energy });
    }
    Ok(solved)
}

fn base_metadata(trunc: usize) -> Vec<(String, String)> {
    vec![
        ("tool".into(), format!("cvbench v{}", env!("CARGO_PKG_VERSION"))),
        ("trunc".into(), trunc.to_string()),
        ("kkt_tolerance".into(), format!("{}", SolveOptions::default().kkt_tolerance)),
    ]
}

fn range_metadata(name: &str, values: &[f64]) -> (String, String) {
    (
        format!("{name}_range"),
        format!(
            "[{}, {}] x {}",
            values.first().copied().unwrap_or(f64::NAN),
            values.last().copied().unwrap_or(f64::NAN),
            values.len()
        ),
    )
}

/// Worst-case teleportation fidelity over a noise grid, one column per
/// energy. Columns are non-increasing in the noise and ordered downward in
/// the energy.
pub fn teleport_sweep(
    xis: &[f64],
    energies: &[f64],
    trunc: usize,
    restarts: usize,
) -> RunResult<SweepTable> {
    let rows: Vec<Vec<f64>> = xis
        .par_iter()
        .map(|&xi| -> RunResult<Vec<f64>> {
            let mut row = vec![xi];
            for &energy in energies {
                row.push(certified_solve(xi, energy, trunc, restarts)?.result.value_truncated);
            }
            Ok(row)
        })
        .collect::<RunResult<_>>()?;

    let mut columns = vec!["xi".to_string()];
    columns.extend(energies.iter().map(|e| format!("F[E={e}]")));

    let mut invariants: Vec<TableInvariant> = (1..=energies.len())
        .map(TableInvariant::NonIncreasingColumn)
        .collect();
    let ascending = energies.windows(2).all(|w| w[0] <= w[1]);
    if ascending {
        // a larger energy budget can only lower the worst case
        for col in 1..energies.len() {
            invariants.push(TableInvariant::RowOrdering {
                lesser: col + 1,
                greater: col,
            });
        }
    }

    let mut metadata = base_metadata(trunc);
    metadata.push(range_metadata("xi", xis));
    metadata.push((
        "energies".into(),
        energies.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" "),
    ));
    Ok(SweepTable {
        metadata,
        columns,
        rows,
        invariants,
    })
}

/// Optimal versus the coherent and two-mode squeezed vacuum baselines at a
/// fixed energy. Every row satisfies `optimal <= tmsv <= coherent`.
pub fn teleport_compare(
    xis: &[f64],
    energy: f64,
    trunc: usize,
    restarts: usize,
) -> RunResult<SweepTable> {
    let rows: Vec<Vec<f64>> = xis
        .par_iter()
        .map(|&xi| -> RunResult<Vec<f64>> {
            let optimal = certified_solve(xi, energy, trunc, restarts)?.result.value_truncated;
            Ok(vec![
                xi,
                optimal,
                baselines::tmsv_fidelity(energy, xi)?,
                baselines::coherent_fidelity(xi)?,
            ])
        })
        .collect::<RunResult<_>>()?;

    let mut metadata = base_metadata(trunc);
    metadata.push(range_metadata("xi", xis));
    metadata.push(("energy".into(), energy.to_string()));
    Ok(SweepTable {
        metadata,
        columns: vec![
            "xi".into(),
            "optimal".into(),
            "tmsv".into(),
            "coherent".into(),
        ],
        rows,
        invariants: vec![
            TableInvariant::NonIncreasingColumn(1),
            TableInvariant::NonIncreasingColumn(2),
            TableInvariant::NonIncreasingColumn(3),
            TableInvariant::RowOrdering { lesser: 1, greater: 2 },
            TableInvariant::RowOrdering { lesser: 2, greater: 3 },
        ],
    })
}

/// Detector diamond distance over a transmissivity grid, one column per
/// energy. Distance falls with transmissivity and grows with energy.
pub fn detector_sweep(etas: &[f64], energies: &[f64]) -> RunResult<SweepTable> {
    let rows: Vec<Vec<f64>> = etas
        .iter()
        .map(|&eta| -> RunResult<Vec<f64>> {
            let mut row = vec![eta];
            for &energy in energies {
                row.push(detector::diamond_distance(eta, energy)?);
            }
            Ok(row)
        })
        .collect::<RunResult<_>>()?;

    let mut columns = vec!["eta".to_string()];
    columns.extend(energies.iter().map(|e| format!("dd[E={e}]")));

    let mut invariants: Vec<TableInvariant> = (1..=energies.len())
        .map(TableInvariant::NonIncreasingColumn)
        .collect();
    if energies.windows(2).all(|w| w[0] <= w[1]) {
        for col in 1..energies.len() {
            invariants.push(TableInvariant::RowOrdering {
                lesser: col,
                greater: col + 1,
            });
        }
    }

    let mut metadata = vec![(
        "tool".into(),
        format!("cvbench v{}", env!("CARGO_PKG_VERSION")),
    )];
    metadata.push(range_metadata("eta", etas));
    metadata.push((
        "energies".into(),
        energies.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" "),
    ));
    Ok(SweepTable {
        metadata,
        columns,
        rows,
        invariants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linspace_endpoints() {
        let xs = linspace(0.1, 0.5, 5);
        assert_eq!(xs.len(), 5);
        assert_eq!(xs[0], 0.1);
        assert_eq!(xs[4], 0.5);
        assert_eq!(linspace(0.3, 0.9, 1), vec![0.3]);
    }

    #[test]
    fn sweep_single_cell_reference_value() {
        let table = teleport_sweep(&[0.25], &[0.6], 50, 2).unwrap();
        assert_eq!(table.columns, vec!["xi", "F[E=0.6]"]);
        assert!((table.rows[0][1] - 0.6310).abs() < 5e-5);
        table.check_invariants().unwrap();
    }

    #[test]
    fn sweep_zero_noise_column_of_ones() {
        let table = teleport_sweep(&[0.0], &[0.5, 1.5], 20, 2).unwrap();
        assert!((table.rows[0][1] - 1.0).abs() < 1e-12);
        assert!((table.rows[0][2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compare_row_values_and_ordering() {
        let table = teleport_compare(&[0.0, 0.5], 1.9, 40, 2).unwrap();
        table.check_invariants().unwrap();
        // xi = 0 row is all ones
        for col in 1..4 {
            assert!((table.rows[0][col] - 1.0).abs() < 1e-12);
        }
        let row = &table.rows[1];
        assert!((row[2] - 0.29411764705882354).abs() < 1e-12);
        assert!((row[3] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn detector_sweep_monotone() {
        let etas = linspace(0.0, 1.0, 11);
        let table = detector_sweep(&etas, &[0.5, 1.5, 3.0]).unwrap();
        table.check_invariants().unwrap();
        // lossless detector row is exactly zero
        let last = table.rows.last().unwrap();
        assert_eq!(&last[1..], &[0.0, 0.0, 0.0]);
    }
}
