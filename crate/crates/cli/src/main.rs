//! `ringmag`: batch front-end for coupling sweeps, oracle checks, phase
//! scans and spectra of ring-trap spin ladders.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure, 3 a check ran and failed.

mod commands;
mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::anyhow;
use clap::{Parser, Subcommand, ValueEnum};
use ringmag::io::write_atomic;
use ringmag::{CrossTermPolicy, EdOptions};

use commands::{Failure, Report, RunSettings};
use config::{cross_term_name, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(name = "ringmag", version, about = "Spin-1/2 ladders from OAM bosons in ring traps")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides run.out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for every randomized start vector; overrides solver.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Coefficient of the s^x s^y + s^y s^x term on phased links; overrides couplings.cross_term.
    #[arg(long, global = true, value_enum)]
    cross_term: Option<CrossTerm>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Tunnelling amplitudes against ring separation.
    Couplings,
    /// Numeric second-order reduction against the analytic spin model (N <= 4).
    OracleCheck,
    /// Finite-size gap and correlation scan over a separation range.
    PhaseScan,
    /// Lowest eigenvalues of one configured chain.
    Spectrum,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Couplings => "couplings",
            Command::OracleCheck => "oracle-check",
            Command::PhaseScan => "phase-scan",
            Command::Spectrum => "spectrum",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum CrossTerm {
    Printed,
    Oracle,
}

impl From<CrossTerm> for CrossTermPolicy {
    fn from(c: CrossTerm) -> Self {
        match c {
            CrossTerm::Printed => CrossTermPolicy::Printed,
            CrossTerm::Oracle => CrossTermPolicy::Oracle,
        }
    }
}

fn manifest(cli: &Cli, cfg: &ExperimentConfig, run: &RunSettings, rep: &Report, code: u8, secs: f64) -> String {
    let mut s = String::new();
    let args: Vec<String> = std::env::args().collect();
    writeln!(s, "command = {}", cli.command.name()).unwrap();
    writeln!(s, "argv = {}", args.join(" ")).unwrap();
    writeln!(s, "ringmag-cli = {}", env!("CARGO_PKG_VERSION")).unwrap();
    writeln!(s, "ringmag-core = {}", ringmag::VERSION).unwrap();
    writeln!(s, "seed = {}", run.seed).unwrap();
    writeln!(s, "cross_term = {}", cross_term_name(run.cross_term)).unwrap();
    writeln!(s, "threads = {}", rayon::current_num_threads()).unwrap();
    writeln!(s, "exit_code = {code}").unwrap();
    writeln!(s, "elapsed_s = {secs:.3}").unwrap();
    for f in &rep.files {
        writeln!(s, "output = {}", f.file_name().unwrap_or_default().to_string_lossy()).unwrap();
    }
    s.push_str("\n# effective configuration\n");
    s.push_str(&cfg.echo());
    s
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config(anyhow!("--config <path> is required")))?;
    let mut cfg = ExperimentConfig::load(path).map_err(Failure::Config)?;
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure::Config(anyhow!("--jobs must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Config(anyhow!("thread pool: {e}")))?;
    }
    // Command-line overrides go into the config so the manifest echo reproduces the run.
    if let Some(out) = &cli.out {
        cfg.run.out = out.clone();
    }
    if let Some(c) = cli.cross_term {
        cfg.couplings.cross_term = c.into();
    }
    if let Some(seed) = cli.seed {
        cfg.solver.seed = seed;
    }
    let settings = RunSettings {
        out: cfg.run.out.clone(),
        cross_term: cfg.couplings.cross_term,
        seed: cfg.solver.seed,
    };
    let ed = EdOptions {
        tol: cfg.solver.ed_tol,
        seed: settings.seed,
        method: cfg.solver.ed_method,
        ..EdOptions::default()
    };

    let start = Instant::now();
    let mut rep = match cli.command {
        Command::Couplings => commands::cmd_couplings(&cfg, &settings),
        Command::OracleCheck => commands::cmd_oracle_check(&cfg, &settings),
        Command::PhaseScan => commands::cmd_phase_scan(&cfg, &settings, &ed),
        Command::Spectrum => commands::cmd_spectrum(&cfg, &settings, &ed),
    }?;
    print!("{}", rep.summary);
    let failure = rep.failure.take();
    let code = failure.as_ref().map_or(0, Failure::exit_code);
    let text = manifest(cli, &cfg, &settings, &rep, code, start.elapsed().as_secs_f64());
    write_atomic(&settings.out.join("manifest.txt"), &text)
        .map_err(|e| Failure::Numerical(anyhow!("writing manifest: {e}")))?;
    match failure {
        Some(f) => Err(f),
        None => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("ringmag: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
