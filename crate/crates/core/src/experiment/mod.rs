//! Parameter sweeps over the drive strength (ground-state occupations,
//! parity correlations, entanglement entropy, spectral gaps, excited-state
//! occupations) and drive ramps.
//!
//! Grid points are independent and run on a worker pool; rows come back in
//! grid order and every point uses the same Lanczos seed, so the output does
//! not depend on the thread count.

mod config;
mod csv;

use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

pub use config::{load_config, parse_config, ConfigError, SweepConfig};
pub use csv::{format_value, write_table};

use crate::analytic::{omega_star, ThresholdSet};
use crate::basis::{BasisError, BasisTable};
use crate::dynamics::{self, Observable, RampSchedule};
use crate::eigensolver::{lowest_eigenpairs_with, LanczosOptions};
use crate::hamiltonian::{build_hamiltonian, Boundary, ModelParams};
use crate::observables::{self as obs, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Occupation,
    Parity,
    Entropy,
    Gap,
    Excited,
    Ramp,
}

impl SweepKind {
    pub const ALL: [SweepKind; 6] = [Self::Occupation, Self::Parity, Self::Entropy, Self::Gap, Self::Excited, Self::Ramp];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Occupation => "occupation",
            Self::Parity => "parity",
            Self::Entropy => "entropy",
            Self::Gap => "gap",
            Self::Excited => "excited",
            Self::Ramp => "ramp",
        }
    }
}

impl std::str::FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().trim_end_matches("-sweep");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown experiment kind '{s}'"))
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error("{0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Drive values in units of `J`; non-empty and strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Grid {
    /// `min, min + step, ...` up to and including `max` (within rounding).
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

/// Validated description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub sites: usize,
    pub atoms: usize,
    pub hopping: f64,
    pub interaction: f64,
    pub detuning: f64,
    /// Harmonic trap strength `eps` in `(i - c)^2 eps`.
    pub trap: f64,
    pub boundary: Boundary,
    pub grid: Grid,
    pub cut: Option<usize>,
    pub distance: Option<usize>,
    pub eigenstates: usize,
    pub ramp_rate: f64,
    pub t_final: Option<f64>,
    pub dt_max: f64,
    pub sample_interval: f64,
    /// Drive used in place of `|Omega| < lift` to pick a ground state out
    /// of the degenerate undriven level.
    pub lift: f64,
    pub tol: f64,
    pub seed: u64,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl SweepSpec {
    /// Template with every documented default for `N = M = atoms`.
    pub fn new(kind: SweepKind, sites: usize, atoms: usize) -> Self {
        let interaction = 20.0;
        Self {
            kind,
            sites,
            atoms,
            hopping: 1.0,
            interaction,
            detuning: 0.0,
            trap: 0.0,
            boundary: Boundary::Open,
            grid: default_grid(atoms, interaction),
            cut: None,
            distance: None,
            eigenstates: 5,
            ramp_rate: 1.0,
            t_final: None,
            dt_max: 0.05,
            sample_interval: 0.1,
            lift: 1e-4,
            tol: 1e-9,
            seed: LanczosOptions::default().seed,
            threads: 1,
            out: None,
        }
    }

    pub fn params(&self) -> ModelParams<f64> {
        ModelParams::symmetric(self.sites, self.hopping, self.interaction)
            .with_detuning(self.detuning)
            .with_harmonic_trap(self.trap)
    }

    pub fn thresholds(&self) -> Option<ThresholdSet<f64>> {
        ThresholdSet::new(self.atoms, self.interaction, self.detuning).ok()
    }

    /// Ramp end time: explicit, or when the drive reaches `1.2 Omega*_{N-1}`.
    pub fn ramp_end(&self) -> f64 {
        self.t_final.unwrap_or_else(|| {
            let last = omega_star(self.atoms.max(2) - 1, self.interaction, self.detuning).unwrap_or(self.interaction);
            1.2 * last / self.ramp_rate
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = [
            ("hopping", self.hopping),
            ("interaction", self.interaction),
            ("detuning", self.detuning),
            ("trap", self.trap),
            ("omega-min", self.grid.min),
            ("omega-max", self.grid.max),
            ("omega-step", self.grid.step),
            ("ramp-rate", self.ramp_rate),
            ("dt-max", self.dt_max),
            ("sample-interval", self.sample_interval),
            ("lift", self.lift),
            ("tol", self.tol),
        ];
        if let Some((name, _)) = finite.iter().find(|(_, v)| !v.is_finite()) {
            return Err(format!("{name} must be finite"));
        }
        if self.sites == 0 {
            return Err("sites must be at least 1".into());
        }
        if self.atoms == 0 {
            return Err("atoms must be at least 1".into());
        }
        if self.interaction <= 0.0 {
            return Err(format!("interaction must be positive (got {})", self.interaction));
        }
        if self.hopping < 0.0 {
            return Err(format!("hopping must be non-negative (got {})", self.hopping));
        }
        if self.trap < 0.0 {
            return Err(format!("trap must be non-negative (got {})", self.trap));
        }
        if self.grid.step <= 0.0 {
            return Err("omega-step must be positive (grid must be strictly increasing)".into());
        }
        if self.grid.max < self.grid.min {
            return Err("omega-max must not be below omega-min (grid must be non-empty)".into());
        }
        if matches!(self.kind, SweepKind::Parity | SweepKind::Entropy) && self.sites < 2 {
            return Err(format!("{} sweeps need at least two sites", self.kind.name()));
        }
        if let Some(l) = self.cut {
            if l == 0 || l >= self.sites {
                return Err(format!("cut must lie in 1..={} (got {l})", self.sites.saturating_sub(1)));
            }
        }
        if let Some(d) = self.distance {
            if d == 0 || d >= self.sites {
                return Err(format!("distance must lie in 1..={} (got {d})", self.sites.saturating_sub(1)));
            }
        }
        if self.eigenstates == 0 {
            return Err("eigenstates must be at least 1".into());
        }
        if self.kind == SweepKind::Ramp {
            if self.ramp_rate <= 0.0 {
                return Err(format!("ramp-rate must be positive (got {})", self.ramp_rate));
            }
            if let Some(t) = self.t_final {
                if !(t > 0.0) {
                    return Err("t-final must be positive".into());
                }
            }
            if self.dt_max <= 0.0 || self.sample_interval <= 0.0 {
                return Err("dt-max and sample-interval must be positive".into());
            }
        }
        if self.lift < 0.0 {
            return Err("lift must be non-negative".into());
        }
        if self.tol <= 0.0 {
            return Err("tol must be positive".into());
        }
        if self.threads == 0 {
            return Err("threads must be at least 1".into());
        }
        Ok(())
    }
}

/// `[0, 1.2 U (N - 1)]` in steps of `0.25 J`; `[0, 1.2 U]` for one atom.
pub fn default_grid(atoms: usize, interaction: f64) -> Grid {
    Grid { min: 0.0, max: 1.2 * interaction * atoms.saturating_sub(1).max(1) as f64, step: 0.25 }
}

/// One output row. `error` is set when the point failed; its values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub values: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub kind: SweepKind,
    /// `(key, value)` pairs for the `#` header block.
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().map(|r| r.values[c]).collect())
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }
}

fn header(spec: &SweepSpec) -> Vec<(String, String)> {
    let p = spec.params();
    let list = |v: &[f64]| v.iter().map(|x| format_value(*x)).collect::<Vec<_>>().join(" ");
    let mut h = vec![
        ("experiment".to_string(), spec.kind.name().to_string()),
        ("sites".into(), spec.sites.to_string()),
        ("atoms".into(), spec.atoms.to_string()),
        ("hop_e".into(), format_value(p.hop_e)),
        ("hop_g".into(), format_value(p.hop_g)),
        ("u_e".into(), format_value(p.u_e)),
        ("u_g".into(), format_value(p.u_g)),
        ("u_eg".into(), format_value(p.u_eg)),
        ("detuning".into(), format_value(p.detuning)),
        ("trap".into(), format_value(spec.trap)),
        ("eps_e".into(), list(&p.eps_e)),
        ("eps_g".into(), list(&p.eps_g)),
        ("drive_site".into(), spec.sites.to_string()),
        ("boundary".into(), spec.boundary.to_string()),
        ("lift".into(), format_value(spec.lift)),
        ("tol".into(), format_value(spec.tol)),
        ("seed".into(), spec.seed.to_string()),
    ];
    if spec.kind == SweepKind::Ramp {
        h.push(("ramp_rate".into(), format_value(spec.ramp_rate)));
        h.push(("t_final".into(), format_value(spec.ramp_end())));
        h.push(("dt_max".into(), format_value(spec.dt_max)));
    } else {
        h.push(("omega_min".into(), format_value(spec.grid.min)));
        h.push(("omega_max".into(), format_value(spec.grid.max)));
        h.push(("omega_step".into(), format_value(spec.grid.step)));
    }
    if let Some(t) = spec.thresholds() {
        for (i, w) in t.thresholds.iter().enumerate() {
            h.push((format!("omega_star_{}", i + 1), format_value(*w)));
        }
    }
    h
}

fn selected(range_end: usize, pick: Option<usize>) -> Vec<usize> {
    match pick {
        Some(x) => vec![x],
        None => (1..range_end).collect(),
    }
}

fn columns(spec: &SweepSpec) -> Vec<String> {
    let m = spec.sites;
    let mut c = vec!["omega".to_string()];
    match spec.kind {
        SweepKind::Occupation => {
            c.extend([format!("n_{m}"), format!("n_e_{m}"), format!("n_g_{m}"), "energy".into(), "branch".into()]);
        }
        SweepKind::Parity => {
            c.push(format!("n_{m}"));
            c.extend(selected(m, spec.distance).into_iter().map(|d| format!("C_{d}")));
        }
        SweepKind::Entropy => {
            c.push(format!("n_{m}"));
            c.extend(selected(m, spec.cut).into_iter().map(|l| format!("S_{l}")));
        }
        SweepKind::Gap => c.extend(["E_0", "E_1", "gap", "log_gap"].map(String::from)),
        SweepKind::Excited => {
            for k in 0..spec.eigenstates {
                c.push(format!("E_{k}"));
                c.push(format!("n_{m}_{k}"));
            }
        }
        SweepKind::Ramp => {
            c = vec!["t".into(), "omega".into(), format!("n_{m}"), format!("n_e_{m}"), format!("n_g_{m}"), "energy".into(), "norm".into()];
        }
    }
    c
}

fn static_point(spec: &SweepSpec, basis: &Arc<BasisTable>, omega: f64) -> Result<Vec<f64>, String> {
    let m = spec.sites;
    let drive = if omega.abs() < spec.lift { spec.lift } else { omega };
    let params = spec.params().with_end_drive(drive);
    let h = build_hamiltonian(&params, basis, spec.boundary).map_err(|e| e.to_string())?;
    let k = match spec.kind {
        SweepKind::Gap => 2,
        SweepKind::Excited => spec.eigenstates,
        _ => 1,
    }
    .min(basis.dim());
    let opts = LanczosOptions { seed: spec.seed, ..Default::default() };
    let sol = lowest_eigenpairs_with(&h, k, spec.tol, &opts).map_err(|e| e.to_string())?;
    let state = |i: usize| StateVector::from_real(basis.clone(), &sol.vectors[i]).map_err(|e| e.to_string());
    let n_m = |psi: &StateVector<f64>| obs::site_occupation(psi, m).map_err(|e| e.to_string());

    let mut row = vec![omega];
    match spec.kind {
        SweepKind::Occupation => {
            let psi = state(0)?;
            let o = n_m(&psi)?;
            let branch = crate::analytic::lowest_branch(spec.atoms, spec.interaction, spec.detuning, omega).0;
            row.extend([o.total, o.excited, o.ground, sol.energies[0], branch as f64]);
        }
        SweepKind::Parity => {
            let psi = state(0)?;
            row.push(n_m(&psi)?.total);
            for d in selected(m, spec.distance) {
                row.push(obs::parity_correlation(&psi, d).map_err(|e| e.to_string())?);
            }
        }
        SweepKind::Entropy => {
            let psi = state(0)?;
            row.push(n_m(&psi)?.total);
            for l in selected(m, spec.cut) {
                let s = obs::schmidt_spectrum(&psi, l).map_err(|e| e.to_string())?;
                row.push(obs::entanglement_entropy(&s));
            }
        }
        SweepKind::Gap => {
            let gap = obs::energy_gap(&sol).map_err(|e| e.to_string())?;
            row.extend([sol.energies[0], sol.energies[1], gap, gap.ln()]);
        }
        SweepKind::Excited => {
            for i in 0..spec.eigenstates {
                if i < sol.len() {
                    row.push(sol.energies[i]);
                    row.push(n_m(&state(i)?)?.total);
                } else {
                    row.extend([f64::NAN, f64::NAN]);
                }
            }
        }
        SweepKind::Ramp => unreachable!("ramps are not grid sweeps"),
    }
    Ok(row)
}

fn run_ramp(spec: &SweepSpec, basis: &Arc<BasisTable>) -> Result<Vec<Row>, SweepError> {
    let m = spec.sites;
    let params = spec.params();
    let psi0 = dynamics::initial_ground_state(&params, basis, spec.boundary, spec.lift, spec.tol.min(1e-10))?;
    let ramp = RampSchedule::new(spec.ramp_rate, spec.ramp_end(), spec.dt_max)?.with_samples(spec.sample_interval);
    let record = [
        Observable::Occupation(m),
        Observable::OccupationExcited(m),
        Observable::OccupationGround(m),
        Observable::Energy,
        Observable::Norm,
    ];
    let ts = dynamics::evolve(&params, basis, spec.boundary, &ramp, &psi0, &record)?;
    Ok(ts
        .times
        .iter()
        .zip(&ts.drive)
        .zip(&ts.values)
        .map(|((&t, &w), v)| {
            let mut values = vec![t, w];
            values.extend_from_slice(v);
            Row { values, error: None }
        })
        .collect())
}

/// Runs the sweep. Failed grid points become flagged rows; only setup
/// errors abort the whole run.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable, SweepError> {
    spec.validate().map_err(SweepError::Invalid)?;
    let basis = Arc::new(BasisTable::enumerate(spec.sites, spec.atoms)?);
    let columns = columns(spec);
    let width = columns.len();

    let rows = if spec.kind == SweepKind::Ramp {
        run_ramp(spec, &basis)?
    } else {
        let grid = spec.grid.points();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| SweepError::Pool(e.to_string()))?;
        pool.install(|| {
            grid.par_iter()
                .map(|&omega| match static_point(spec, &basis, omega) {
                    Ok(values) => Row { values, error: None },
                    Err(e) => {
                        let mut values = vec![f64::NAN; width];
                        values[0] = omega;
                        Row { values, error: Some(e) }
                    }
                })
                .collect()
        })
    };

    Ok(SweepTable { kind: spec.kind, header: header(spec), columns, rows })
}

/// Analytic thresholds `Omega*_n` for `n = 1..N-1` as a table with columns
/// `n, omega_star`.
pub fn threshold_table(atoms: usize, interaction: f64, detuning: f64) -> Result<SweepTable, SweepError> {
    let set = ThresholdSet::new(atoms, interaction, detuning).map_err(|e| SweepError::Invalid(e.to_string()))?;
    let rows = set
        .thresholds
        .iter()
        .enumerate()
        .map(|(i, &w)| Row { values: vec![(i + 1) as f64, w], error: None })
        .collect();
    Ok(SweepTable {
        kind: SweepKind::Occupation,
        header: vec![
            ("experiment".into(), "thresholds".into()),
            ("atoms".into(), atoms.to_string()),
            ("interaction".into(), format_value(interaction)),
            ("detuning".into(), format_value(detuning)),
        ],
        columns: vec!["n".into(), "omega_star".into()],
        rows,
    })
}
