//! Property tests for the feasible-set geometry and the channel actions.

use proptest::prelude::*;

use cvbench_core::kernel::{self, KernelMatrix, SpectrumVector};
use cvbench_core::solver::project_feasible;

fn spectrum_strategy(max_trunc: usize) -> impl Strategy<Value = SpectrumVector> {
    prop::collection::vec(0.0f64..1.0, 1..=max_trunc + 1).prop_map(|raw| {
        let total: f64 = raw.iter().sum::<f64>().max(1e-9);
        SpectrumVector::normalized(raw.iter().map(|x| x / total).collect())
            .unwrap_or_else(|_| SpectrumVector::point_mass(0, raw.len() - 1))
    })
}

proptest! {
    #[test]
    fn projection_is_feasible_and_idempotent(
        v in prop::collection::vec(-5.0f64..5.0, 1..=12),
        energy in 0.0f64..4.0,
    ) {
        let p = project_feasible(&v, energy).unwrap();
        prop_assert!((p.sum() - 1.0).abs() <= 1e-12);
        prop_assert!(p.energy() <= energy + 1e-12);
        prop_assert!(p.probs().iter().all(|&x| x >= 0.0));

        let again = project_feasible(p.probs(), energy).unwrap();
        for (a, b) in again.probs().iter().zip(p.probs()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn pure_loss_conserves_mass_and_sheds_energy(
        p in spectrum_strategy(24),
        transmissivity in 0.0f64..=1.0,
    ) {
        let q = kernel::pure_loss_spectrum(&p, transmissivity).unwrap();
        prop_assert!((q.sum() - 1.0).abs() <= 1e-10);
        prop_assert!(q.energy() <= p.energy() + 1e-10);
        // mean energy scales by exactly the kept fraction
        prop_assert!((q.energy() - transmissivity * p.energy()).abs() <= 1e-9);
    }

    #[test]
    fn objective_bounded_and_symmetric(
        p in spectrum_strategy(10),
        xi in 0.0f64..3.0,
    ) {
        let kernel = KernelMatrix::build(p.trunc(), xi).unwrap();
        let f = kernel::objective(&p, &kernel).unwrap();
        prop_assert!(f > 0.0 && f <= 1.0 + 1e-12);
        for n in 0..kernel.dim() {
            for m in 0..kernel.dim() {
                prop_assert_eq!(kernel.get(n, m), kernel.get(m, n));
            }
        }
    }

    #[test]
    fn truncation_lower_bound_never_exceeds_the_value(
        f_trunc in 0.0f64..=1.0,
        energy in 0.0f64..6.0,
        trunc in 0usize..200,
    ) {
        let lb = cvbench_core::bounds::lower_bound(f_trunc, energy, trunc).unwrap();
        prop_assert!((0.0..=1.0).contains(&lb));
        prop_assert!(lb <= f_trunc + 1e-15);
    }
}
