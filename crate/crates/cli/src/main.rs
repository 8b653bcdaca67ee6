use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use parahyp::selftest;
use parahyp::{cmd_converge, cmd_scan, cmd_solve, cmd_verify, thread_count, with_threads, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "parahyp", version, about = "Spectral solver and verifier for a mixed parabolic-hyperbolic problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write fields.csv and solution_meta.json.
    Solve(Common),
    /// Solve, run every check and write verification_report.json.
    Verify(Common),
    /// Truncation study: convergence.csv and convergence_summary.json.
    Converge(Common),
    /// Degeneracy scan: degeneracy.csv and degeneracy_summary.json.
    Scan(Common),
    /// Run the bundled acceptance suite.
    Selftest(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; overrides PARAHYP_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<(RunConfig, PathBuf), CliError> {
        let path = self.config.as_deref().ok_or_else(|| CliError::Config("--config is required".into()))?;
        let mut config = RunConfig::load(path)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        let out = self
            .out
            .clone()
            .or_else(|| config.output_dir.clone())
            .ok_or_else(|| CliError::Config("--out is required (or set output_dir in the config)".into()))?;
        Ok((config, out))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(c) => {
            let (config, out) = c.load()?;
            let s = with_threads(thread_count(c.threads)?, || cmd_solve(&config, &out))??;
            println!(
                "solved with N = {}, tail bound {:.3e} ({}), output in {}",
                s.n_modes,
                s.tail_bound,
                if s.certified { "certified" } else { "not certified" },
                out.display()
            );
        }
        Command::Verify(c) => {
            let (config, out) = c.load()?;
            let report = with_threads(thread_count(c.threads)?, || cmd_verify(&config, &out))??;
            for check in &report.checks {
                let tol = check.tol.map(|t| format!(" <= {t:.1e}")).unwrap_or_default();
                let status = match (check.tol, check.pass) {
                    (None, _) => "info",
                    (_, true) => "pass",
                    _ => "FAIL",
                };
                println!("{status:>4}  {:<30} {:.3e}{tol}", check.name, check.value);
            }
            if !report.pass {
                let failed: Vec<&str> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                return Err(CliError::VerificationFailed(failed.join(", ")));
            }
        }
        Command::Converge(c) => {
            let (config, out) = c.load()?;
            let study = with_threads(thread_count(c.threads)?, || cmd_converge(&config, &out))??;
            let s = &study.slopes;
            println!("error slopes: u {:?}, u_t {:?}, u_tt {:?}, u_xx {:?}", s.u, s.u_t, s.u_tt, s.u_xx);
        }
        Command::Scan(c) => {
            let (config, out) = c.load()?;
            let scan = cmd_scan(&config, &out)?;
            println!("min |cos(lambda T) + lambda sin(lambda T)| = {:.6e} at n = {}", scan.min_abs, scan.argmin);
        }
        Command::Selftest(c) => {
            let report = with_threads(thread_count(c.threads)?, || selftest::run_all(|r| println!("{}", r.line())))?;
            println!(
                "selftest {} in {:.2} s (budget {:.0} s)",
                if report.pass { "passed" } else { "FAILED" },
                report.seconds,
                selftest::TOTAL_BUDGET
            );
            if let Some(out) = c.out.as_deref() {
                write_selftest(out, &report)?;
            }
            if !report.pass {
                return Err(CliError::VerificationFailed("selftest".into()));
            }
        }
    }
    Ok(())
}

fn write_selftest(out: &Path, report: &selftest::SelfTestReport) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    std::fs::write(out.join("selftest.json"), text)?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("parahyp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
