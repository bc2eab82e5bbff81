//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `-- --nocapture` to see them all).

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cvbench_cli::runs;
use cvbench_core::bounds;
use cvbench_core::certify;
use cvbench_core::detector;
use cvbench_core::kernel::{self, KernelMatrix};
use cvbench_core::oracle;
use cvbench_core::solver;
use cvbench_core::{QpProblem, SolveOptions, SolveStatus};

fn report(id: u32, description: &str, pass: bool, detail: String) {
    println!(
        "[{}] criterion {id:>2}: {description} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {id} failed: {detail}");
}

fn opts() -> SolveOptions {
    SolveOptions::default()
}

#[test]
fn criterion_01_two_level_reference_regression() {
    let start = Instant::now();
    let problem = QpProblem::build(0.25, 0.6, 50).unwrap();
    let solution = solver::solve_with_restarts(&problem, 3, &opts()).unwrap();
    let elapsed = start.elapsed();

    let mut pass = solution.status == SolveStatus::Certified;
    pass &= (solution.value - 0.6310).abs() <= 5e-5;
    pass &= (solution.spectrum.get(0) - 0.4).abs() <= 1e-6;
    pass &= (solution.spectrum.get(1) - 0.6).abs() <= 1e-6;
    for n in 2..=50 {
        pass &= solution.spectrum.get(n).abs() <= 1e-6;
    }
    let cert = solution.certificate.as_ref().expect("certified solve");
    pass &= (cert.mu - 0.2432).abs() <= 5e-5;
    pass &= (cert.gamma - (-1.408)).abs() <= 5e-4;
    for (n, want) in [(2usize, 0.041), (3, 0.1160), (4, 0.2202), (5, 0.348)] {
        pass &= (cert.betas[n] - want).abs() <= 5e-4;
    }
    pass &= elapsed < Duration::from_secs(5);
    report(
        1,
        "two-level optimum, value and duals at (E=0.6, xi=0.25, M=50)",
        pass,
        format!(
            "f*={:.6}, mu={:.6}, gamma={:.5}, betas[2..=5]=[{:.4}, {:.4}, {:.4}, {:.4}], {:?}",
            solution.value,
            cert.mu,
            cert.gamma,
            cert.betas[2],
            cert.betas[3],
            cert.betas[4],
            cert.betas[5],
            elapsed
        ),
    );
}

#[test]
fn criterion_02_three_point_family() {
    let start = Instant::now();
    let (energy, xi) = (1.2, 2.0 / 3.0);
    let problem = QpProblem::build(xi, energy, 50).unwrap();
    let solution = solver::solve_with_restarts(&problem, 3, &opts()).unwrap();
    let analytic = certify::analytic_three_point(energy, xi, 50)
        .unwrap()
        .expect("inside the validity region");
    let elapsed = start.elapsed();

    let mut pass = solution.status == SolveStatus::Certified;
    pass &= (solution.value - analytic.value).abs() <= 1e-8;
    for n in 0..=2 {
        pass &= (solution.spectrum.get(n) - analytic.spectrum.get(n)).abs() <= 1e-8;
    }
    pass &= (solution.spectrum.sum() - 1.0).abs() <= 1e-12;
    pass &= (solution.spectrum.energy() - energy).abs() <= 1e-12;
    pass &= elapsed < Duration::from_secs(5);
    report(
        2,
        "three-level closed forms at (E=1.2, xi=2/3, M=50)",
        pass,
        format!(
            "p*=({:.9}, {:.9}, {:.9}), f*={:.9}, {:?}",
            solution.spectrum.get(0),
            solution.spectrum.get(1),
            solution.spectrum.get(2),
            solution.value,
            elapsed
        ),
    );
}

#[test]
fn criterion_03_kernel_cross_validation() {
    let start = Instant::now();
    let (energy, xi, trunc) = (1.9, 0.5, 200);
    let spectrum = cvbench_core::baselines::tmsv_spectrum(energy, trunc).unwrap();
    let matrix = KernelMatrix::build(trunc, xi).unwrap();
    let through_kernel = kernel::objective(&spectrum.spectrum, &matrix).unwrap();
    let closed_form = 1.0 / (1.0 + (2.0 * energy + 1.0) * xi);
    let elapsed = start.elapsed();

    let pass = (through_kernel - closed_form).abs() <= 1e-6 && elapsed < Duration::from_secs(10);
    report(
        3,
        "TMSV spectrum through the kernel at (E=1.9, xi=0.5, M=200)",
        pass,
        format!("kernel {through_kernel:.9} vs closed form {closed_form:.9}, {elapsed:?}"),
    );
}

#[test]
fn criterion_04_truncation_sandwich() {
    let solved = bounds::solve_bounded(0.25, 0.6, 50, 2, &opts()).unwrap();
    let mut pass = (solved.result.lower_bound - 0.32039).abs() <= 1e-4;
    pass &= solved.result.lower_bound <= solved.result.value_truncated;

    let mut ladder = Vec::new();
    let mut previous = -1.0;
    for &trunc in &[10usize, 20, 40, 80] {
        let rung = bounds::solve_bounded(0.25, 0.6, trunc, 2, &opts()).unwrap();
        pass &= rung.result.lower_bound >= previous - 1e-12;
        previous = rung.result.lower_bound;
        ladder.push(format!("M={trunc}:{:.5}", rung.result.lower_bound));
    }
    report(
        4,
        "sandwich bound at (E=0.6, xi=0.25, M=50) and non-decreasing ladder",
        pass,
        format!(
            "lower={:.5} value={:.5}; ladder {}",
            solved.result.lower_bound,
            solved.result.value_truncated,
            ladder.join(" ")
        ),
    );
}

#[test]
fn criterion_05_hessian_psd_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::INFINITY;
    for _ in 0..200 {
        let trunc = rng.random_range(0..=60);
        let xi = rng.random_range(0.0..=5.0);
        let matrix = KernelMatrix::build(trunc, xi).unwrap();
        let dim = matrix.dim();
        let dense = nalgebra::DMatrix::from_fn(dim, dim, |n, m| matrix.get(n, m));
        let min_eigenvalue = dense
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        worst = worst.min(min_eigenvalue);
    }
    let elapsed = start.elapsed();
    let pass = worst >= -1e-10 && elapsed < Duration::from_secs(30);
    report(
        5,
        "200 random kernels (M <= 60, xi in [0,5]) are positive semi-definite",
        pass,
        format!("worst minimum eigenvalue {worst:.3e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_06_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    let mut pass = true;
    let mut worst_gap = 0.0f64;
    for instance in 0..50 {
        let trunc = rng.random_range(1..=6);
        // energies on the 0.01 lattice so the grid can saturate the bound
        let energy = (rng.random_range(0..=300u32) as f64 / 100.0).min(trunc as f64);
        let xi = rng.random_range(0.0..=2.0);
        let problem = QpProblem::build(xi, energy, trunc).unwrap();
        let solution = solver::solve_with_restarts(&problem, 2, &opts()).unwrap();
        let grid = oracle::grid_search_qp(&problem, 0.01).unwrap();
        let below = solution.value <= grid.best_value + 1e-9;
        let close = grid.best_value - solution.value <= 1e-3;
        if !(below && close) {
            pass = false;
            eprintln!(
                "instance {instance} (M={trunc}, E={energy}, xi={xi}): \
                 certified {} vs grid {}",
                solution.value, grid.best_value
            );
        }
        worst_gap = worst_gap.max(grid.best_value - solution.value);
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(60);
    report(
        6,
        "50 random small QPs: certified value <= grid and within 1e-3",
        pass,
        format!("worst grid gap {worst_gap:.2e}, {elapsed:?}"),
    );
}

#[test]
fn criterion_07_detector_closed_form_vs_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut pass = true;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let eta: f64 = rng.random_range(0.0..=1.0);
        let energy: f64 = rng.random_range(0.0..=6.0);
        let closed = detector::diamond_distance(eta, energy).unwrap();
        let lp = detector::lp_oracle_diamond(eta, energy, energy.ceil() as usize + 8).unwrap();
        worst = worst.max((closed - lp).abs());
        pass &= (closed - lp).abs() <= 1e-10;
    }
    let spot = detector::diamond_distance(0.9, 1.5).unwrap();
    pass &= (spot - 0.145).abs() <= 1e-12;
    report(
        7,
        "detector closed form vs LP oracle (100 random) and spot value",
        pass,
        format!("worst |closed - lp| = {worst:.2e}, f(0.9, 1.5) = {spot}"),
    );
}

#[test]
fn criterion_08_baseline_ordering() {
    let xis = runs::linspace(0.05, 1.0, 20);
    let table = runs::teleport_compare(&xis, 1.9, 50, 2).unwrap();
    let mut pass = table.check_invariants().is_ok();
    let mut min_gap = f64::INFINITY;
    for row in &table.rows {
        let (optimal, tmsv, coherent) = (row[1], row[2], row[3]);
        pass &= optimal <= tmsv + 1e-9 && tmsv <= coherent + 1e-15;
        min_gap = min_gap.min(tmsv - optimal);
    }
    report(
        8,
        "optimal <= tmsv <= coherent on a 20-point grid at E=1.9",
        pass,
        format!("minimum tmsv-optimal gap {min_gap:.3e} (nonnegative)"),
    );
}

#[test]
fn criterion_09_small_noise_family() {
    let xi = 1e-4;
    let mut pass = true;
    let mut details = Vec::new();
    for &energy in &[0.3, 0.6, 1.9] {
        let problem = QpProblem::build(xi, energy, 50).unwrap();
        let solution = solver::solve_with_restarts(&problem, 3, &opts()).unwrap();
        let analytic = certify::small_xi_fidelity(energy, xi).unwrap();
        pass &= solution.status == SolveStatus::Certified;
        pass &= (analytic - solution.value).abs() <= 1e-6;
        let cert = solution.certificate.as_ref().expect("certified");
        let ratio = cert.mu / (2.0 * xi);
        pass &= (0.9..=1.1).contains(&ratio);
        details.push(format!("E={energy}: |df|={:.1e}, mu/(2xi)={ratio:.4}", (analytic - solution.value).abs()));
    }
    report(
        9,
        "two-level state is optimal at xi=1e-4 with mu ~ 2 xi",
        pass,
        details.join("; "),
    );
}

#[test]
fn criterion_10_monotonicity_suites() {
    let xis = runs::linspace(0.0, 1.5, 16);
    let teleport = runs::teleport_sweep(&xis, &[0.6, 1.2, 1.9], 40, 2).unwrap();
    let mut pass = teleport.check_invariants().is_ok();
    // explicit scans in addition to the declared invariants
    for col in 1..=3 {
        for pair in teleport.rows.windows(2) {
            pass &= pair[1][col] <= pair[0][col] + 1e-9;
        }
    }
    for row in &teleport.rows {
        pass &= row[3] <= row[2] + 1e-9 && row[2] <= row[1] + 1e-9;
    }

    let etas = runs::linspace(0.0, 1.0, 21);
    let det = runs::detector_sweep(&etas, &[0.5, 1.5, 3.0]).unwrap();
    pass &= det.check_invariants().is_ok();
    for col in 1..=3 {
        for pair in det.rows.windows(2) {
            pass &= pair[1][col] <= pair[0][col] + 1e-15;
        }
    }
    for row in &det.rows {
        pass &= row[1] <= row[2] + 1e-15 && row[2] <= row[3] + 1e-15;
    }
    report(
        10,
        "sweep tables monotone in xi, eta and E with zero violations",
        pass,
        format!(
            "teleport {}x{} and detector {}x{} rows clean",
            teleport.rows.len(),
            teleport.columns.len(),
            det.rows.len(),
            det.columns.len()
        ),
    );
}

#[test]
fn criterion_11_cli_determinism() {
    let binary = env!("CARGO_BIN_EXE_cvbench");
    let presets: [&[&str]; 3] = [
        &["teleport", "sweep", "--preset", "fig1"],
        &["teleport", "compare", "--preset", "fig2"],
        &["detector", "sweep", "--preset", "fig3"],
    ];
    let mut pass = true;
    let mut sizes = Vec::new();
    for args in presets {
        let first = Command::new(binary).args(args).output().unwrap();
        let second = Command::new(binary).args(args).output().unwrap();
        pass &= first.status.success() && second.status.success();
        pass &= first.stdout == second.stdout;
        sizes.push(format!("{} -> {} bytes", args.join(" "), first.stdout.len()));
    }
    report(
        11,
        "identical preset invocations emit byte-identical output",
        pass,
        sizes.join("; "),
    );
}
