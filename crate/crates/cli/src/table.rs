//! Sweep tables with self-checked monotonicity/ordering invariants and
//! deterministic CSV serialization.
//!
//! CSV layout: leading `#` metadata lines, a header row, then numeric rows.
//! Floats are written with the shortest round-trip decimal, so identical
//! runs produce byte-identical files.

/// Tolerance for the declared invariants; solver values are certified to
/// 1e-9, so violations beyond this are real.
const INVARIANT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub enum TableInvariant {
    /// Values in the column never increase from one row to the next.
    NonIncreasingColumn(usize),
    /// In every row, `lesser` stays at or below `greater`.
    RowOrdering { lesser: usize, greater: usize },
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub invariants: Vec<TableInvariant>,
}

impl SweepTable {
    /// Check every declared invariant; the first violation is described.
    pub fn check_invariants(&self) -> Result<(), String> {
        for invariant in &self.invariants {
            match *invariant {
                TableInvariant::NonIncreasingColumn(col) => {
                    for (i, pair) in self.rows.windows(2).enumerate() {
                        if pair[1][col] > pair[0][col] + INVARIANT_SLACK {
                            return Err(format!(
                                "column '{}' increases between rows {} and {}: {} -> {}",
                                self.columns[col],
                                i,
                                i + 1,
                                pair[0][col],
                                pair[1][col]
                            ));
                        }
                    }
                }
                TableInvariant::RowOrdering { lesser, greater } => {
                    for (i, row) in self.rows.iter().enumerate() {
                        if row[lesser] > row[greater] + INVARIANT_SLACK {
                            return Err(format!(
                                "row {}: '{}' = {} exceeds '{}' = {}",
                                i,
                                self.columns[lesser],
                                row[lesser],
                                self.columns[greater],
                                row[greater]
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str(&format!("# {key}={value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<f64>>, invariants: Vec<TableInvariant>) -> SweepTable {
        SweepTable {
            metadata: vec![("tool".into(), "cvbench".into())],
            columns: vec!["a".into(), "b".into()],
            rows,
            invariants,
        }
    }

    #[test]
    fn csv_layout_and_determinism() {
        let t = table(vec![vec![0.5, 1.0], vec![0.25, 0.75]], vec![]);
        let csv = t.to_csv();
        assert_eq!(csv, "# tool=cvbench\na,b\n0.5,1\n0.25,0.75\n");
        assert_eq!(csv, t.to_csv());
    }

    #[test]
    fn invariant_checks() {
        let good = table(
            vec![vec![0.5, 1.0], vec![0.4, 0.9]],
            vec![
                TableInvariant::NonIncreasingColumn(0),
                TableInvariant::RowOrdering { lesser: 0, greater: 1 },
            ],
        );
        assert!(good.check_invariants().is_ok());

        let rising = table(
            vec![vec![0.5, 1.0], vec![0.6, 0.9]],
            vec![TableInvariant::NonIncreasingColumn(0)],
        );
        assert!(rising.check_invariants().is_err());

        let disordered = table(
            vec![vec![1.0, 0.5]],
            vec![TableInvariant::RowOrdering { lesser: 0, greater: 1 }],
        );
        assert!(disordered.check_invariants().is_err());
    }
}
