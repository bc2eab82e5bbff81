//! `cvbench` — certified worst-case benchmarks for continuous-variable
//! teleportation and photon-number detectors.
//!
//! Exit codes: 0 success (certified), 2 solver hit its iteration cap,
//! 3 verification or table self-check failure, 64 malformed flags.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cvbench_cli::preset;
use cvbench_cli::runs::{self, linspace, RunError};
use cvbench_cli::table::SweepTable;
use cvbench_core::bounds::{self, TruncationStatus};
use cvbench_core::{certify, detector, oracle, solver};
use cvbench_core::{QpProblem, SolveOptions, SolveStatus};

const EXIT_OK: u8 = 0;
const EXIT_MAX_ITERATIONS: u8 = 2;
const EXIT_VERIFY: u8 = 3;
const EXIT_USAGE: u8 = 64;

const DEFAULT_TRUNC: usize = 50;
const DEFAULT_SEEDS: usize = 3;

#[derive(Parser)]
#[command(
    name = "cvbench",
    version,
    about = "Worst-case benchmarks for CV teleportation and photodetectors",
    long_about = "Worst-case benchmarks for CV teleportation and photodetectors.\n\n\
        Exit codes: 0 success (certified); 2 solver reached its iteration cap;\n\
        3 verification mismatch or table self-check failure; 64 malformed flags.\n\n\
        Configuration precedence: flags > environment (CVBENCH_TRUNC,\n\
        CVBENCH_SEEDS) > built-in defaults (trunc 50, seeds 3)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identity channel vs additive-noise channel (teleportation test)
    Teleport {
        #[command(subcommand)]
        command: TeleportCommand,
    },
    /// Ideal vs lossy photon-number detector
    Detector {
        #[command(subcommand)]
        command: DetectorCommand,
    },
}

#[derive(Subcommand)]
enum TeleportCommand {
    /// Certified worst-case fidelity at one (xi, E) point
    Fidelity(FidelityArgs),
    /// Fidelity table over a noise grid, one column per energy
    Sweep(TeleportSweepArgs),
    /// Optimal vs TMSV vs coherent baselines at fixed energy
    Compare(CompareArgs),
}

#[derive(Args)]
struct FidelityArgs {
    /// Additive-noise variance (>= 0)
    #[arg(long)]
    xi: f64,
    /// Mean photon-number budget (>= 0)
    #[arg(long)]
    energy: f64,
    /// Fock-space truncation (default: CVBENCH_TRUNC or 50)
    #[arg(long)]
    trunc: Option<usize>,
    /// Solver restarts (default: CVBENCH_SEEDS or 3)
    #[arg(long)]
    seeds: Option<usize>,
    /// Pick the truncation automatically for the given --gap-target
    #[arg(long)]
    auto_trunc: bool,
    /// Bracket-width target for --auto-trunc
    #[arg(long, default_value_t = 1e-3)]
    gap_target: f64,
    /// Truncation cap for --auto-trunc
    #[arg(long, default_value_t = bounds::DEFAULT_CHOICE_CAP)]
    trunc_cap: usize,
    /// Print the KKT certificate as JSON
    #[arg(long)]
    certificate: bool,
    /// Re-verify: independent certification, restart agreement, and (for
    /// trunc <= 8) the exhaustive grid oracle
    #[arg(long)]
    verify: bool,
    /// Output format
    #[arg(long, value_parser = ["text", "json", "csv"], default_value = "text")]
    format: String,
    /// Write output to a file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TeleportSweepArgs {
    #[arg(long, default_value_t = 0.05)]
    xi_min: f64,
    #[arg(long, default_value_t = 1.0)]
    xi_max: f64,
    #[arg(long, default_value_t = 20)]
    xi_steps: usize,
    /// Comma-separated energy budgets
    #[arg(long, value_delimiter = ',', default_value = "0.6,1.2,1.9")]
    energies: Vec<f64>,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    /// Use the baked-in figure grid (fig1)
    #[arg(long, value_parser = ["fig1"])]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value_t = 1.9)]
    energy: f64,
    #[arg(long, default_value_t = 0.05)]
    xi_min: f64,
    #[arg(long, default_value_t = 1.0)]
    xi_max: f64,
    #[arg(long, default_value_t = 20)]
    xi_steps: usize,
    #[arg(long)]
    trunc: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    /// Use the baked-in figure grid (fig2)
    #[arg(long, value_parser = ["fig2"])]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DetectorCommand {
    /// Half the energy-constrained diamond distance, ideal vs lossy
    Diamond(DiamondArgs),
    /// Diamond-distance table over a transmissivity grid
    Sweep(DetectorSweepArgs),
    /// Energy-constrained sine distance between two lossy detectors
    Sine(SineArgs),
}

#[derive(Args)]
struct DiamondArgs {
    /// Transmissivity in [0, 1]
    #[arg(long, conflicts_with = "eta_db")]
    eta: Option<f64>,
    /// Transmissivity as dB loss: eta = 10^(-dB/10)
    #[arg(long)]
    eta_db: Option<f64>,
    #[arg(long)]
    energy: f64,
    /// Check the closed form against the LP vertex oracle
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct DetectorSweepArgs {
    #[arg(long, default_value_t = 0.0)]
    eta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_max: f64,
    #[arg(long, default_value_t = 21)]
    eta_steps: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.5,3.0")]
    energies: Vec<f64>,
    /// Check every cell against the LP vertex oracle
    #[arg(long)]
    verify: bool,
    /// Use the baked-in figure grid (fig3)
    #[arg(long, value_parser = ["fig3"])]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SineArgs {
    #[arg(long)]
    eta1: f64,
    #[arg(long)]
    eta2: f64,
    #[arg(long)]
    energy: f64,
    /// Cross-check both transmissivities against the LP vertex oracle
    #[arg(long)]
    verify: bool,
}

fn env_usize(name: &str) -> Option<usize> {
    std::env::var(name).ok().and_then(|v| v.parse().ok())
}

fn resolve_trunc(flag: Option<usize>) -> usize {
    flag.or_else(|| env_usize("CVBENCH_TRUNC")).unwrap_or(DEFAULT_TRUNC)
}

fn resolve_seeds(flag: Option<usize>) -> usize {
    flag.or_else(|| env_usize("CVBENCH_SEEDS")).unwrap_or(DEFAULT_SEEDS)
}

fn emit(text: &str, out: &Option<PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn usage_error(message: impl std::fmt::Display) -> u8 {
    eprintln!("cvbench: {message}");
    EXIT_USAGE
}

fn verify_failure(message: impl std::fmt::Display) -> u8 {
    eprintln!("cvbench: verification failed: {message}");
    EXIT_VERIFY
}

fn emit_table(table: &SweepTable, out: &Option<PathBuf>) -> u8 {
    if let Err(violation) = table.check_invariants() {
        eprintln!("cvbench: table self-check failed: {violation}");
        return EXIT_VERIFY;
    }
    match emit(&table.to_csv(), out) {
        Ok(()) => EXIT_OK,
        Err(e) => usage_error(format!("cannot write output: {e}")),
    }
}

fn run_error(e: RunError) -> u8 {
    match e {
        RunError::NotCertified { .. } => {
            eprintln!("cvbench: {e}");
            EXIT_MAX_ITERATIONS
        }
        RunError::Core(e) => usage_error(e),
    }
}

fn teleport_fidelity(args: FidelityArgs) -> u8 {
    let seeds = resolve_seeds(args.seeds);
    let opts = SolveOptions::default();

    let solved = if args.auto_trunc {
        match bounds::choose_truncation(
            args.energy,
            args.xi,
            args.gap_target,
            args.trunc_cap,
            seeds,
            &opts,
        ) {
            Ok(choice) => {
                if let TruncationStatus::CapReached { best_gap } = choice.status {
                    eprintln!(
                        "cvbench: gap target {} unreachable below trunc {}; best achieved gap {best_gap}",
                        args.gap_target, args.trunc_cap
                    );
                }
                let mut solve = choice.solve;
                solve
                    .notes
                    .push(format!("truncation chosen automatically: {}", choice.trunc));
                solve
            }
            Err(e) => return usage_error(e),
        }
    } else {
        let trunc = resolve_trunc(args.trunc);
        match bounds::solve_bounded(args.xi, args.energy, trunc, seeds, &opts) {
            Ok(s) => s,
            Err(e) => return usage_error(e),
        }
    };

    let result = &solved.result;
    let mut output = String::new();
    match args.format.as_str() {
        "json" => {
            output = serde_json::to_string_pretty(result).expect("serializable result");
            output.push('\n');
        }
        "csv" => {
            output.push_str("value_truncated,lower_bound,upper_bound,trunc,energy,xi\n");
            output.push_str(&format!(
                "{},{},{},{},{},{}\n",
                result.value_truncated,
                result.lower_bound,
                result.upper_bound,
                result.trunc,
                result.energy,
                result.xi
            ));
        }
        _ => {
            output.push_str(&format!("value_truncated = {}\n", result.value_truncated));
            output.push_str(&format!(
                "lower_bound = {}{}\n",
                result.lower_bound,
                if result.lower_bound_vacuous { " (vacuous, clamped)" } else { "" }
            ));
            output.push_str(&format!("upper_bound = {}\n", result.upper_bound));
            output.push_str(&format!(
                "trunc = {}, energy = {}, xi = {}\n",
                result.trunc, result.energy, result.xi
            ));
            let support: Vec<String> = result
                .spectrum
                .support(1e-8)
                .into_iter()
                .map(|n| format!("{n}:{}", result.spectrum.get(n)))
                .collect();
            output.push_str(&format!("support = {}\n", support.join(" ")));
            let c = &result.certificate;
            output.push_str(&format!(
                "certificate: status={:?} mu={} gamma={} stationarity={} slackness={} gap={}\n",
                c.status, c.mu, c.gamma, c.residuals.stationarity, c.residuals.slackness, c.gap
            ));
            output.push_str(&format!("status = {}\n", solved.status));
            for note in &solved.notes {
                output.push_str(&format!("note: {note}\n"));
            }
        }
    }
    if args.certificate && args.format != "json" {
        output.push_str(&serde_json::to_string_pretty(&result.certificate).expect("serializable"));
        output.push('\n');
    }

    if args.verify {
        if let Err(message) = verify_teleport(result, seeds, &opts) {
            return verify_failure(message);
        }
    }

    if let Err(e) = emit(&output, &args.out) {
        return usage_error(format!("cannot write output: {e}"));
    }
    match solved.status {
        SolveStatus::Certified => EXIT_OK,
        _ => EXIT_MAX_ITERATIONS,
    }
}

/// Independent re-checks of a solved point: fresh certification, restart
/// agreement at 1e-9, and the exhaustive grid oracle when it is tractable.
fn verify_teleport(
    result: &bounds::FidelityResult,
    seeds: usize,
    opts: &SolveOptions,
) -> Result<(), String> {
    let problem =
        QpProblem::build(result.xi, result.energy, result.trunc).map_err(|e| e.to_string())?;
    let cert = certify::certify(&problem, &result.spectrum, opts.kkt_tolerance)
        .map_err(|e| e.to_string())?;
    if !cert.is_accepted() {
        return Err("independent certification rejected the spectrum".into());
    }
    let again =
        solver::solve_with_restarts(&problem, seeds.max(3), opts).map_err(|e| e.to_string())?;
    if (again.value - result.value_truncated).abs() > 1e-9 {
        return Err(format!(
            "restart disagreement: {} vs {}",
            again.value, result.value_truncated
        ));
    }
    if result.trunc <= oracle::GRID_MAX_TRUNC {
        let grid = oracle::grid_search_qp(&problem, 0.01).map_err(|e| e.to_string())?;
        if result.value_truncated > grid.best_value + 1e-9 {
            return Err(format!(
                "certified value {} exceeds the grid upper bound {}",
                result.value_truncated, grid.best_value
            ));
        }
    }
    Ok(())
}

fn teleport_sweep(args: TeleportSweepArgs) -> u8 {
    let table = if args.preset.is_some() {
        preset::fig1()
    } else {
        let xis = linspace(args.xi_min, args.xi_max, args.xi_steps);
        if xis.is_empty() || args.energies.is_empty() {
            return usage_error("empty sweep range");
        }
        runs::teleport_sweep(
            &xis,
            &args.energies,
            resolve_trunc(args.trunc),
            resolve_seeds(args.seeds),
        )
    };
    match table {
        Ok(t) => emit_table(&t, &args.out),
        Err(e) => run_error(e),
    }
}

fn teleport_compare(args: CompareArgs) -> u8 {
    let table = if args.preset.is_some() {
        preset::fig2()
    } else {
        let xis = linspace(args.xi_min, args.xi_max, args.xi_steps);
        if xis.is_empty() {
            return usage_error("empty sweep range");
        }
        runs::teleport_compare(
            &xis,
            args.energy,
            resolve_trunc(args.trunc),
            resolve_seeds(args.seeds),
        )
    };
    match table {
        Ok(t) => emit_table(&t, &args.out),
        Err(e) => run_error(e),
    }
}

fn resolve_eta(eta: Option<f64>, eta_db: Option<f64>) -> Result<f64, String> {
    match (eta, eta_db) {
        (Some(e), None) => Ok(e),
        (None, Some(db)) => {
            if !db.is_finite() || db < 0.0 {
                return Err(format!("dB loss must be finite and nonnegative, got {db}"));
            }
            Ok(10f64.powf(-db / 10.0))
        }
        _ => Err("exactly one of --eta / --eta-db is required".into()),
    }
}

fn verify_diamond(eta: f64, energy: f64) -> Result<(), String> {
    let trunc = energy.ceil() as usize + 8;
    let oracle_value =
        detector::lp_oracle_diamond(eta, energy, trunc).map_err(|e| e.to_string())?;
    let closed = detector::diamond_distance(eta, energy).map_err(|e| e.to_string())?;
    if (oracle_value - closed).abs() > 1e-10 {
        return Err(format!(
            "closed form {closed} vs LP oracle {oracle_value} at eta={eta}, E={energy}"
        ));
    }
    Ok(())
}

fn detector_diamond(args: DiamondArgs) -> u8 {
    let eta = match resolve_eta(args.eta, args.eta_db) {
        Ok(e) => e,
        Err(m) => return usage_error(m),
    };
    let value = match detector::diamond_distance(eta, args.energy) {
        Ok(v) => v,
        Err(e) => return usage_error(e),
    };
    if args.verify {
        if let Err(m) = verify_diamond(eta, args.energy) {
            return verify_failure(m);
        }
    }
    println!("{value}");
    EXIT_OK
}

fn detector_sweep(args: DetectorSweepArgs) -> u8 {
    let (etas, energies) = if args.preset.is_some() {
        (linspace(0.0, 1.0, 21), vec![0.5, 1.5, 3.0])
    } else {
        (
            linspace(args.eta_min, args.eta_max, args.eta_steps),
            args.energies.clone(),
        )
    };
    if etas.is_empty() || energies.is_empty() {
        return usage_error("empty sweep range");
    }
    if args.verify {
        for &eta in &etas {
            for &energy in &energies {
                if let Err(m) = verify_diamond(eta, energy) {
                    return verify_failure(m);
                }
            }
        }
    }
    let table = if args.preset.is_some() {
        preset::fig3()
    } else {
        runs::detector_sweep(&etas, &energies)
    };
    match table {
        Ok(t) => emit_table(&t, &args.out),
        Err(e) => run_error(e),
    }
}

fn detector_sine(args: SineArgs) -> u8 {
    let pair = match detector::DetectorPair::new(args.eta1, args.eta2, args.energy) {
        Ok(p) => p,
        Err(e) => return usage_error(e),
    };
    if args.verify {
        for eta in [args.eta1, args.eta2] {
            if let Err(m) = verify_diamond(eta, args.energy) {
                return verify_failure(m);
            }
        }
    }
    println!("{}", detector::sine_distance(&pair));
    EXIT_OK
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Teleport { command } => match command {
            TeleportCommand::Fidelity(args) => teleport_fidelity(args),
            TeleportCommand::Sweep(args) => teleport_sweep(args),
            TeleportCommand::Compare(args) => teleport_compare(args),
        },
        Command::Detector { command } => match command {
            DetectorCommand::Diamond(args) => detector_diamond(args),
            DetectorCommand::Sweep(args) => detector_sweep(args),
            DetectorCommand::Sine(args) => detector_sine(args),
        },
    };
    ExitCode::from(code)
}
