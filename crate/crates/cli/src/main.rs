//! CLI driver: `hessenv <command> --config path [--threads k] [--out dir]`.
//!
//! Exit codes: 0 success, 2 validation/config error, 3 solver
//! non-convergence (partial artifacts still written), 1 anything else.

use clap::{Args, Parser, Subcommand};
use hessenv::config::{CommandKind, RunConfig};
use hessenv::runner::run_to_dir;
use hessenv::verify::SuiteKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hessenv", version, about = "Fully non-linear elliptic eigenvalue equations and subharmonic envelopes on flat complex tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's output_dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cap the worker thread count.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the non-degenerate equation f(λ(θ+i∂∂̄u)) = h + b.
    Solve(CommonArgs),
    /// Run the penalization ε-schedule and extract the envelope P and contact set.
    Envelope(CommonArgs),
    /// Solve the degenerate eigenvalue pair (u, c) by ε-continuation.
    Eigenpair(CommonArgs),
    /// Certify a C-subsolution and report σ₀.
    Subcheck(CommonArgs),
    /// Run a property suite with a fixed seed.
    Verify {
        /// Suite name: eigenops | cones | fields | solver | envelope.
        #[arg(long)]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn init_threads(threads: Option<usize>) {
    if let Some(k) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k.max(1)).build_global();
    }
}

fn expect_command(config: &RunConfig, expected: CommandKind) -> Result<(), String> {
    if config.command != expected {
        return Err(format!(
            "config command {:?} does not match the CLI subcommand",
            config.command
        ));
    }
    Ok(())
}

fn run_common(args: &CommonArgs, expected: CommandKind) -> ExitCode {
    init_threads(args.threads);
    let config = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = expect_command(&config, expected) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match run_to_dir(&config, args.out.as_deref()) {
        Ok(outcome) => {
            if let Some(err) = &outcome.report.error {
                eprintln!("solver error: {err}");
            } else {
                print_summary(&outcome.report);
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_summary(report: &hessenv::runner::RunReport) {
    if let Some(cert) = &report.certificate {
        println!(
            "subsolution: accepted = {}, sigma_0 = {}, worst_margin = {:?}",
            cert.accepted, cert.sigma_0, cert.worst_margin
        );
    }
    if let Some(s) = &report.solve_report {
        println!(
            "solve: {} Newton iterations, residual {:.3e}, constant {:.12e}",
            s.iterations, s.final_residual, s.constant
        );
    }
    if let Some(e) = &report.eigenpair {
        println!("eigenpair: c = {:.12e} over schedule {:?}", e.c, e.eps_schedule);
    }
    if let Some(env) = &report.envelope_result {
        for r in &env.rungs {
            println!(
                "rung eps={:.3e}: overshoot/eps = {:.4}, off-K = {:.3e}, on-K = {:.3e}, contact = {:.1}%",
                r.eps,
                r.overshoot_ratio,
                r.residual_off_k,
                r.residual_on_k,
                100.0 * r.contact_fraction
            );
        }
        if let Some(t) = &report.trend {
            println!(
                "trend: hessian variation factor {:.3}, overshoot ratio range [{:.3}, {:.3}]",
                t.hessian_variation_factor, t.overshoot_ratio_range.0, t.overshoot_ratio_range.1
            );
        }
    }
}

fn run_verify(
    suite: &str,
    seed: Option<u64>,
    config: Option<&PathBuf>,
    out: Option<&PathBuf>,
    threads: Option<usize>,
) -> ExitCode {
    init_threads(threads);
    let kind = match SuiteKind::parse(suite) {
        Some(k) => k,
        None => {
            eprintln!("error: unknown suite {suite:?} (eigenops|cones|fields|solver|envelope)");
            return ExitCode::from(2);
        }
    };
    let mut run_config = match config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => RunConfig {
            command: CommandKind::Verify,
            grid: None,
            operator: None,
            theta: None,
            h: None,
            subsolution: None,
            schedule: None,
            solver: None,
            diagnostics_a: None,
            seed: None,
            suite: None,
            output_dir: None,
        },
    };
    run_config.command = CommandKind::Verify;
    run_config.suite = Some(kind);
    if seed.is_some() {
        run_config.seed = seed;
    }
    match run_to_dir(&run_config, out.map(|p| p.as_path())) {
        Ok(outcome) => {
            if let Some(v) = &outcome.report.verify {
                for c in &v.checks {
                    println!(
                        "[{}] {} ({} samples){}",
                        if c.passed { "pass" } else { "FAIL" },
                        c.name,
                        c.samples,
                        c.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default()
                    );
                }
                println!(
                    "suite {:?}: {}",
                    v.suite,
                    if v.passed { "all checks passed" } else { "FAILED" }
                );
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve(a) => run_common(a, CommandKind::Solve),
        Command::Envelope(a) => run_common(a, CommandKind::Envelope),
        Command::Eigenpair(a) => run_common(a, CommandKind::Eigenpair),
        Command::Subcheck(a) => run_common(a, CommandKind::Subcheck),
        Command::Verify { suite, seed, config, out, threads } => {
            run_verify(suite, *seed, config.as_ref(), out.as_ref(), *threads)
        }
    }
}
