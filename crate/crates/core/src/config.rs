//! Run configuration for the batch front end.
//!
//! A config is one strictly validated JSON object. Only `dim` and `truth` are
//! required:
//!
//! ```json
//! {
//!   "dim": 4,
//!   "truth": "hadamard4",
//!   "protocol": "compound",
//!   "phase_grid": { "count": 24, "span": 6.283185307179586 },
//!   "scale": 0.5,
//!   "coherence": 1.0,
//!   "noise": { "kind": "poisson", "expected_counts_per_sample": 1e6, "master_seed": 7 },
//!   "phase_mode": "absolute",
//!   "output_dir": "out",
//!   "tolerances": { "modulus": 1e-6, "argument": 1e-6, "visibility": 0.05 }
//! }
//! ```
//!
//! `truth` is a gate name, `{"gate": name}`, `{"file": path}` or
//! `{"haar_seed": n}`. Relative paths resolve against the config's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{PhaseGridSpec, Protocol};
use crate::interferometer::{NoiseConfig, DEFAULT_SCALE};
use crate::io::{read_json, read_matrix};
use crate::matrix::{haar_random, Gate, UnitaryMatrix, DEFAULT_UNITARITY_TOL};
use crate::reconstruction::{PhaseMode, DEFAULT_VISIBILITY_TOL};

#[derive(Clone, Debug, PartialEq)]
pub enum TruthSource {
    Gate(Gate),
    File(PathBuf),
    Haar { seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub modulus: f64,
    pub argument: f64,
    pub visibility: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            modulus: 1e-6,
            argument: 1e-6,
            visibility: DEFAULT_VISIBILITY_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub truth: TruthSource,
    pub protocol: Protocol,
    pub phase_grid: PhaseGridSpec,
    pub scale: f64,
    pub coherence: f64,
    pub noise: NoiseConfig,
    pub phase_mode: PhaseMode,
    pub output_dir: PathBuf,
    pub tolerances: Tolerances,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TruthRepr {
    Name(String),
    Table(TruthTable),
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum TruthTable {
    Gate(String),
    File(PathBuf),
    HaarSeed(u64),
}

fn default_protocol() -> Protocol {
    Protocol::Compound
}

fn default_scale() -> f64 {
    DEFAULT_SCALE
}

fn default_coherence() -> f64 {
    1.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dim: usize,
    truth: TruthRepr,
    #[serde(default = "default_protocol")]
    protocol: Protocol,
    #[serde(default)]
    phase_grid: PhaseGridSpec,
    #[serde(default = "default_scale")]
    scale: f64,
    #[serde(default = "default_coherence")]
    coherence: f64,
    #[serde(default)]
    noise: NoiseConfig,
    #[serde(default)]
    phase_mode: PhaseMode,
    #[serde(default = "default_output_dir")]
    output_dir: PathBuf,
    #[serde(default)]
    tolerances: Tolerances,
}

/// Reads, defaults and validates a config file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let raw: RawConfig = read_json(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

    let truth = match raw.truth {
        TruthRepr::Name(name) | TruthRepr::Table(TruthTable::Gate(name)) => TruthSource::Gate(
            name.parse()
                .map_err(|e: Error| Error::config("truth", e.to_string()))?,
        ),
        TruthRepr::Table(TruthTable::File(p)) => TruthSource::File(resolve(p)),
        TruthRepr::Table(TruthTable::HaarSeed(seed)) => TruthSource::Haar { seed },
    };
    let config = RunConfig {
        dim: raw.dim,
        truth,
        protocol: raw.protocol,
        phase_grid: raw.phase_grid,
        scale: raw.scale,
        coherence: raw.coherence,
        noise: raw.noise,
        phase_mode: raw.phase_mode,
        output_dir: resolve(raw.output_dir),
        tolerances: raw.tolerances,
    };
    config.validate()?;
    Ok(config)
}

impl RunConfig {
    /// Minimal config with every default applied.
    pub fn new(dim: usize, truth: TruthSource) -> Self {
        Self {
            dim,
            truth,
            protocol: default_protocol(),
            phase_grid: PhaseGridSpec::default(),
            scale: DEFAULT_SCALE,
            coherence: 1.0,
            noise: NoiseConfig::default(),
            phase_mode: PhaseMode::Absolute,
            output_dir: default_output_dir(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::config("dim", format!("{} is below the minimum of 2", self.dim)));
        }
        self.phase_grid.grid()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config("scale", format!("{} must be positive", self.scale)));
        }
        if !(0.0..=1.0).contains(&self.coherence) {
            return Err(Error::config(
                "coherence",
                format!("{} must lie in [0, 1]", self.coherence),
            ));
        }
        self.noise.validate()?;
        for (field, value) in [
            ("tolerances.modulus", self.tolerances.modulus),
            ("tolerances.argument", self.tolerances.argument),
            ("tolerances.visibility", self.tolerances.visibility),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config(field, format!("{value} must be non-negative")));
            }
        }
        match &self.truth {
            TruthSource::File(p) if !p.is_file() => {
                return Err(Error::config("truth.file", format!("{} does not exist", p.display())));
            }
            _ => {}
        }
        // Builds the truth once so dimension problems surface at validation.
        self.truth_matrix()?;
        Ok(())
    }

    pub fn truth_matrix(&self) -> Result<UnitaryMatrix> {
        match &self.truth {
            TruthSource::Gate(g) => g.matrix(self.dim),
            TruthSource::Haar { seed } => haar_random(self.dim, *seed),
            TruthSource::File(path) => {
                let m = read_matrix(path)?;
                if m.dim() != self.dim {
                    return Err(Error::Dimension(format!(
                        "truth file {} is {}x{} but config dim is {}",
                        path.display(),
                        m.dim(),
                        m.dim(),
                        self.dim
                    )));
                }
                UnitaryMatrix::new(m, DEFAULT_UNITARITY_TOL)
            }
        }
    }

    pub fn haar_seed(&self) -> Option<u64> {
        match self.truth {
            TruthSource::Haar { seed } => Some(seed),
            _ => None,
        }
    }
}
