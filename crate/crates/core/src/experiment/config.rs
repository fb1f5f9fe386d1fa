//! Flat `key = value` configuration files.
//!
//! Keys mirror the command-line flags (`omega-step` and `omega_step` are the
//! same key). `#` starts a comment. Unknown keys are rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use super::{default_grid, SweepKind, SweepSpec};
use crate::hamiltonian::Boundary;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
    #[error("no experiment kind given")]
    MissingKind,
    #[error("invalid configuration: {0}")]
    Validation(String),
}

/// Partially specified sweep; `None` fields fall back to defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepConfig {
    pub kind: Option<SweepKind>,
    pub sites: Option<usize>,
    pub atoms: Option<usize>,
    pub hopping: Option<f64>,
    pub interaction: Option<f64>,
    pub detuning: Option<f64>,
    pub trap: Option<f64>,
    pub boundary: Option<Boundary>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_step: Option<f64>,
    pub cut: Option<usize>,
    pub distance: Option<usize>,
    pub eigenstates: Option<usize>,
    pub ramp_rate: Option<f64>,
    pub t_final: Option<f64>,
    pub dt_max: Option<f64>,
    pub sample_interval: Option<f64>,
    pub lift: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::Value { line, key: key.to_string(), message: e.to_string() })
}

impl SweepConfig {
    /// Sets one field from its textual form. `line` is only used in errors.
    pub fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        let norm = key.trim().replace('-', "_");
        let v = value.trim();
        match norm.as_str() {
            "kind" | "experiment" => {
                self.kind = Some(v.parse().map_err(|message| ConfigError::Value { line, key: norm.clone(), message })?)
            }
            "sites" => self.sites = Some(parse(line, &norm, v)?),
            "atoms" => self.atoms = Some(parse(line, &norm, v)?),
            "hopping" => self.hopping = Some(parse(line, &norm, v)?),
            "interaction" => self.interaction = Some(parse(line, &norm, v)?),
            "detuning" => self.detuning = Some(parse(line, &norm, v)?),
            "trap" => self.trap = Some(parse(line, &norm, v)?),
            "boundary" => {
                self.boundary = Some(v.parse().map_err(|message| ConfigError::Value { line, key: norm.clone(), message })?)
            }
            "omega_min" => self.omega_min = Some(parse(line, &norm, v)?),
            "omega_max" => self.omega_max = Some(parse(line, &norm, v)?),
            "omega_step" => self.omega_step = Some(parse(line, &norm, v)?),
            "cut" => self.cut = Some(parse(line, &norm, v)?),
            "distance" => self.distance = Some(parse(line, &norm, v)?),
            "eigenstates" => self.eigenstates = Some(parse(line, &norm, v)?),
            "ramp_rate" => self.ramp_rate = Some(parse(line, &norm, v)?),
            "t_final" => self.t_final = Some(parse(line, &norm, v)?),
            "dt_max" => self.dt_max = Some(parse(line, &norm, v)?),
            "sample_interval" => self.sample_interval = Some(parse(line, &norm, v)?),
            "lift" => self.lift = Some(parse(line, &norm, v)?),
            "tol" => self.tol = Some(parse(line, &norm, v)?),
            "seed" => self.seed = Some(parse(line, &norm, v)?),
            "threads" => self.threads = Some(parse(line, &norm, v)?),
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(ConfigError::UnknownKey { line, key: key.trim().to_string() }),
        }
        Ok(())
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: SweepConfig) -> SweepConfig {
        macro_rules! pick {
            ($($f:ident),*) => { SweepConfig { $($f: top.$f.or(self.$f)),* } };
        }
        pick!(
            kind, sites, atoms, hopping, interaction, detuning, trap, boundary, omega_min, omega_max, omega_step, cut,
            distance, eigenstates, ramp_rate, t_final, dt_max, sample_interval, lift, tol, seed, threads, out
        )
    }

    /// Fills defaults and validates. `N = M` unless one of them is given
    /// alone, in which case the other follows it.
    pub fn resolve(self) -> Result<SweepSpec, ConfigError> {
        let kind = self.kind.ok_or(ConfigError::MissingKind)?;
        let (sites, atoms) = match (self.sites, self.atoms) {
            (Some(m), Some(n)) => (m, n),
            (Some(m), None) => (m, m),
            (None, Some(n)) => (n, n),
            (None, None) => (5, 5),
        };
        let mut spec = SweepSpec::new(kind, sites, atoms);
        macro_rules! take {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { spec.$f = v; })* };
        }
        take!(hopping, interaction, detuning, trap, boundary, eigenstates, ramp_rate, dt_max, sample_interval, lift, tol, seed, threads);
        spec.cut = self.cut;
        spec.distance = self.distance;
        spec.t_final = self.t_final;
        spec.out = self.out;

        let grid = default_grid(atoms, spec.interaction.max(f64::MIN_POSITIVE));
        spec.grid.min = self.omega_min.unwrap_or(grid.min);
        spec.grid.max = self.omega_max.unwrap_or(grid.max);
        spec.grid.step = self.omega_step.unwrap_or(grid.step);

        spec.validate().map_err(ConfigError::Validation)?;
        Ok(spec)
    }
}

/// Parses configuration text without resolving defaults.
pub fn parse_config(text: &str) -> Result<SweepConfig, ConfigError> {
    let mut cfg = SweepConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
        if key.trim().is_empty() {
            return Err(ConfigError::Syntax { line });
        }
        cfg.set(line, key, value)?;
    }
    Ok(cfg)
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: &Path) -> Result<SweepSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    parse_config(&text)?.resolve()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let spec = parse_config("kind = occupation\n").unwrap().resolve().unwrap();
        assert_eq!((spec.sites, spec.atoms), (5, 5));
        assert_eq!(spec.interaction, 20.0);
        assert_eq!((spec.grid.min, spec.grid.max, spec.grid.step), (0.0, 96.0, 0.25));
        assert_eq!(spec.boundary, Boundary::Open);
    }

    #[test]
    fn overrides_are_reflected() {
        let text = "# transport\nkind = entropy\ninteraction = 12.5  # weaker\natoms = 3\nomega-step = 0.5\n";
        let spec = parse_config(text).unwrap().resolve().unwrap();
        assert_eq!(spec.interaction, 12.5);
        assert_eq!((spec.sites, spec.atoms), (3, 3));
        assert_eq!(spec.grid.step, 0.5);
        assert_eq!(spec.grid.max, 1.2 * 12.5 * 2.0);
    }

    #[test]
    fn negative_interaction_is_rejected() {
        let err = parse_config("kind = gap\ninteraction = -3\n").unwrap().resolve().unwrap_err();
        match err {
            ConfigError::Validation(msg) => assert!(msg.contains("interaction")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagnostics_carry_line_and_field() {
        match parse_config("kind = gap\nsites = five\n") {
            Err(ConfigError::Value { line: 2, key, .. }) => assert_eq!(key, "sites"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_config("kind = gap\ncolour = red\n"), Err(ConfigError::UnknownKey { line: 2, .. })));
        assert!(matches!(parse_config("just words\n"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(parse_config("sites = 3\n").unwrap().resolve(), Err(ConfigError::MissingKind)));
    }

    #[test]
    fn overlay_prefers_top_layer() {
        let file = parse_config("kind = gap\nsites = 4\ninteraction = 10\n").unwrap();
        let flags = SweepConfig { interaction: Some(30.0), ..Default::default() };
        let spec = file.overlay(flags).resolve().unwrap();
        assert_eq!(spec.interaction, 30.0);
        assert_eq!(spec.sites, 4);
    }
}
