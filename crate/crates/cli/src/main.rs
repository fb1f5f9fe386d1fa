//! `bhdrive`: sweeps and ramps for the driven two-component Bose-Hubbard
//! chain, written as CSV.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical
//! failure (a grid point or the ramp did not converge).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bh_drive::experiment::{self, ConfigError, SweepConfig, SweepError, SweepKind, SweepTable};
use bh_drive::Boundary;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bhdrive", version, about = "Exact diagonalization of a laser-driven two-component Bose-Hubbard chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state occupation of the driven site versus drive strength
    Occupation(Common),
    /// Two-site parity correlations C(d) versus drive strength
    Parity(Common),
    /// Entanglement entropy of the last l sites versus drive strength
    Entropy(Common),
    /// Gap between the two lowest levels versus drive strength
    Gap(Common),
    /// Driven-site occupation of the lowest eigenstates
    Excited(Common),
    /// Time evolution under a linear drive ramp Omega(t) = v t
    Ramp(Common),
    /// Analytic transport thresholds Omega*_n
    Thresholds(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Number of lattice sites M
    #[arg(long)]
    sites: Option<usize>,
    /// Number of atoms N (defaults to M)
    #[arg(long)]
    atoms: Option<usize>,
    /// Hopping J for both components
    #[arg(long)]
    hopping: Option<f64>,
    /// On-site and inter-component interaction U
    #[arg(long)]
    interaction: Option<f64>,
    /// Detuning Delta
    #[arg(long)]
    detuning: Option<f64>,
    /// Harmonic trap strength eps, site energies (i - c)^2 eps
    #[arg(long)]
    trap: Option<f64>,
    #[arg(long)]
    omega_min: Option<f64>,
    #[arg(long)]
    omega_max: Option<f64>,
    #[arg(long)]
    omega_step: Option<f64>,
    /// Sites in the right part of the bipartition (entropy)
    #[arg(long)]
    cut: Option<usize>,
    /// Distance d from the driven site (parity)
    #[arg(long)]
    distance: Option<usize>,
    /// Number of eigenstates to follow (excited)
    #[arg(long)]
    eigenstates: Option<usize>,
    /// Ramp rate v
    #[arg(long)]
    ramp_rate: Option<f64>,
    /// Ramp end time in units of 1/J
    #[arg(long)]
    t_final: Option<f64>,
    /// Largest propagation step
    #[arg(long)]
    dt_max: Option<f64>,
    /// Spacing of ramp samples
    #[arg(long)]
    sample_interval: Option<f64>,
    /// Drive used below |Omega| < lift to select a ground state of the
    /// degenerate undriven level
    #[arg(long)]
    lift: Option<f64>,
    /// Eigenpair residual tolerance
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key-value configuration file; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_parser = parse_boundary)]
    boundary: Option<Boundary>,
}

fn parse_boundary(s: &str) -> Result<Boundary, String> {
    s.parse()
}

impl Common {
    fn into_config(self, kind: Option<SweepKind>) -> Result<SweepConfig, ConfigError> {
        let base = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                experiment::parse_config(&text)?
            }
            None => SweepConfig::default(),
        };
        let flags = SweepConfig {
            kind,
            sites: self.sites,
            atoms: self.atoms,
            hopping: self.hopping,
            interaction: self.interaction,
            detuning: self.detuning,
            trap: self.trap,
            boundary: self.boundary,
            omega_min: self.omega_min,
            omega_max: self.omega_max,
            omega_step: self.omega_step,
            cut: self.cut,
            distance: self.distance,
            eigenstates: self.eigenstates,
            ramp_rate: self.ramp_rate,
            t_final: self.t_final,
            dt_max: self.dt_max,
            sample_interval: self.sample_interval,
            lift: self.lift,
            tol: self.tol,
            seed: self.seed,
            threads: self.threads,
            out: self.out,
        };
        Ok(base.overlay(flags))
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
}

fn emit(table: &SweepTable, out: Option<&PathBuf>) -> Result<(), Failure> {
    let io_err = |e: io::Error| Failure::Usage(format!("cannot write output: {e}"));
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
            experiment::write_table(table, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            experiment::write_table(table, &mut w).map_err(io_err)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let usage = |e: ConfigError| Failure::Usage(e.to_string());
    let (kind, common) = match cli.command {
        Command::Occupation(c) => (SweepKind::Occupation, c),
        Command::Parity(c) => (SweepKind::Parity, c),
        Command::Entropy(c) => (SweepKind::Entropy, c),
        Command::Gap(c) => (SweepKind::Gap, c),
        Command::Excited(c) => (SweepKind::Excited, c),
        Command::Ramp(c) => (SweepKind::Ramp, c),
        Command::Thresholds(c) => {
            let spec = c.into_config(Some(SweepKind::Occupation)).map_err(usage)?.resolve().map_err(usage)?;
            let table = experiment::threshold_table(spec.atoms, spec.interaction, spec.detuning)
                .map_err(|e| Failure::Usage(e.to_string()))?;
            return emit(&table, spec.out.as_ref());
        }
    };
    let spec = common.into_config(Some(kind)).map_err(usage)?.resolve().map_err(usage)?;
    let table = experiment::run_sweep(&spec).map_err(|e| match e {
        SweepError::Dynamics(_) => Failure::Numerical(e.to_string()),
        other => Failure::Usage(other.to_string()),
    })?;
    emit(&table, spec.out.as_ref())?;
    match table.failures() {
        0 => Ok(()),
        n => Err(Failure::Numerical(format!("{n} of {} grid points failed", table.rows.len()))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
