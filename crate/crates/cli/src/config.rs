//! Config document: a flat TOML table whose keys are the long flag names.
//! A flag given on the command line always wins over the document.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::output::Format;
use crate::CliError;

pub const SEED_ENV: &str = "WEAKHARDY_SEED";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SHOTS: u64 = 4000;
pub const DEFAULT_GRID: &str = "0.05:0.95:10";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trials {
    #[default]
    Coincidence,
    Emitted,
}

/// One amplitude: a bare real or `[re, im]`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Amplitude> for Complex64 {
    fn from(a: Amplitude) -> Self {
        match a {
            Amplitude::Real(r) => Complex64::new(r, 0.0),
            Amplitude::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Two-qubit signal states in basis order `NO1NO2, NO1O2, O1NO2, O1O2`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSelection {
    pub pre: Vec<Amplitude>,
    pub post: Vec<Amplitude>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub scenario: Option<String>,
    pub strength: Option<f64>,
    pub mode: Option<Mode>,
    pub kind: Option<Kind>,
    pub grid: Option<String>,
    pub arm: Option<String>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub shards: Option<u32>,
    pub trials: Option<Trials>,
    pub sequential: Option<bool>,
    pub records: Option<PathBuf>,
    pub hom_visibility: Option<f64>,
    pub misalignment: Option<f64>,
    pub single_photon_visibility: Option<f64>,
    pub custom: Option<CustomSelection>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(FileConfig::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Flag, then config document, then `WEAKHARDY_SEED`, then the built-in default.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v} is not a u64"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// `start:stop:count`, endpoints included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("grid `{spec}` is not start:stop:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let start: f64 = a.trim().parse().map_err(|_| bad())?;
    let stop: f64 = b.trim().parse().map_err(|_| bad())?;
    let count: usize = n.trim().parse().map_err(|_| bad())?;
    if !(start.is_finite() && stop.is_finite()) || count == 0 {
        return Err(bad());
    }
    weakhardy::experiment::linear_grid(start, stop, count).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints() {
        let g = parse_grid("0.05:0.95:10").unwrap();
        assert_eq!(g.len(), 10);
        assert_eq!(g[0], 0.05);
        assert!((g[9] - 0.95).abs() < 1e-15);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
    }

    #[test]
    fn malformed_grids_are_usage_errors() {
        for g in ["0.1:0.9", "a:b:3", "0.1:0.9:0", "0.1:0.9:-2", "0.1:0.9:3:4"] {
            assert!(matches!(parse_grid(g), Err(CliError::Usage(_))), "{g}");
        }
    }

    #[test]
    fn document_keys_mirror_flags() {
        let c: FileConfig = toml::from_str(
            "strength = 0.3\nmode = \"mc\"\nhom-visibility = 0.9\n[custom]\npre = [1, 0, [0, 1], 0]\npost = [1, 0, 0, 0]\n",
        )
        .unwrap();
        assert_eq!(c.strength, Some(0.3));
        assert_eq!(c.mode, Some(Mode::Mc));
        assert_eq!(c.hom_visibility, Some(0.9));
        let pre: Vec<Complex64> = c.custom.unwrap().pre.into_iter().map(Into::into).collect();
        assert_eq!(pre[2], Complex64::new(0.0, 1.0));
        assert!(toml::from_str::<FileConfig>("strenght = 0.3").is_err());
    }
}
