//! File formats and atomic writes.
//!
//! Layout of a run directory:
//!
//! ```text
//! plan.json
//! patterns/plan.json
//! patterns/setting_NNNN.csv    phi_rad,value
//! patterns/setting_NNNN.json   sidecar metadata
//! fits/setting_NNNN.json
//! plots/setting_NNNN.csv       phi_rad,sample,fitted
//! report.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{MeasurementPlan, Setting};
use crate::fringe::FringeFit;
use crate::interferometer::{InterferencePattern, NoiseConfig, ValueKind};
use crate::matrix::{ComplexMatrix, MatrixFile};
use crate::reconstruction::{Measurement, PatternSource, Seeds};

pub const SIDECAR_SCHEMA_VERSION: u32 = 1;

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        source: e,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    let file: MatrixFile = read_json(path)?;
    ComplexMatrix::from_file(&file).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    write_json(path, &m.to_file())
}

pub fn setting_stem(id: usize) -> String {
    format!("setting_{id:04}")
}

/// Metadata stored next to each pattern CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSidecar {
    pub schema_version: u32,
    pub dim: usize,
    pub setting: Setting,
    pub value_kind: ValueKind,
    pub scale: f64,
    pub coherence: f64,
    pub noise: NoiseConfig,
    pub seeds: Seeds,
}

/// Writes `setting_NNNN.csv` and its sidecar into `dir`. A hidden phase
/// offset is never written out.
pub fn write_pattern(
    dir: &Path,
    dim: usize,
    pattern: &InterferencePattern,
    noise: &NoiseConfig,
    seeds: Seeds,
) -> Result<()> {
    let setting = pattern.setting.clone().ok_or_else(|| {
        Error::InvalidPattern("only plan patterns can be written to a run directory".into())
    })?;
    let stem = setting_stem(setting.id);
    let mut noise = *noise;
    noise.hidden_offset = None;
    let sidecar = PatternSidecar {
        schema_version: SIDECAR_SCHEMA_VERSION,
        dim,
        setting,
        value_kind: pattern.value_kind,
        scale: pattern.scale,
        coherence: pattern.coherence,
        noise,
        seeds,
    };
    write_atomic(&dir.join(format!("{stem}.csv")), pattern.to_csv().as_bytes())?;
    write_json(&dir.join(format!("{stem}.json")), &sidecar)
}

pub fn read_pattern(dir: &Path, id: usize) -> Result<(InterferencePattern, PatternSidecar)> {
    let stem = setting_stem(id);
    let sidecar: PatternSidecar = read_json(&dir.join(format!("{stem}.json")))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let text = fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let samples = InterferencePattern::samples_from_csv(&text).map_err(|reason| Error::Format {
        path: csv_path.clone(),
        reason,
    })?;
    let pattern = InterferencePattern {
        mode: sidecar.setting.projection_mode,
        setting: Some(sidecar.setting.clone()),
        samples,
        value_kind: sidecar.value_kind,
        scale: sidecar.scale,
        coherence: sidecar.coherence,
    };
    Ok((pattern, sidecar))
}

/// Serves measured (or previously simulated) patterns from a directory.
#[derive(Clone, Debug)]
pub struct DirectorySource {
    dir: PathBuf,
    dim: usize,
}

impl DirectorySource {
    pub fn new(dir: impl Into<PathBuf>, dim: usize) -> Self {
        Self {
            dir: dir.into(),
            dim,
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Loads the plan stored alongside the patterns.
    pub fn plan(&self) -> Result<MeasurementPlan> {
        read_json(&self.dir.join("plan.json"))
    }
}

impl PatternSource for DirectorySource {
    fn pattern(&self, setting: &Setting) -> Result<InterferencePattern> {
        let (pattern, sidecar) = read_pattern(&self.dir, setting.id)?;
        let path = self.dir.join(format!("{}.json", setting_stem(setting.id)));
        if sidecar.dim != self.dim {
            return Err(Error::Format {
                path,
                reason: format!("pattern is for dim {} but plan has dim {}", sidecar.dim, self.dim),
            });
        }
        let s = &sidecar.setting;
        if s.pairs != setting.pairs
            || s.theta != setting.theta
            || s.projection_mode != setting.projection_mode
        {
            return Err(Error::Format {
                path,
                reason: format!("sidecar describes a different setting than plan entry {}", setting.id),
            });
        }
        Ok(pattern)
    }

    fn seeds(&self) -> Seeds {
        read_pattern(&self.dir, 0)
            .map(|(_, sidecar)| sidecar.seeds)
            .unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub setting_id: usize,
    pub setting: Setting,
    pub fit: FringeFit,
}

/// Samples next to the fitted curve, for external plotting.
pub fn plot_csv(measurement: &Measurement) -> String {
    let mut out = String::from("phi_rad,sample,fitted\n");
    for s in &measurement.pattern.samples {
        out.push_str(&format!("{},{},{}\n", s.phi, s.value, measurement.fit.evaluate(s.phi)));
    }
    out
}
