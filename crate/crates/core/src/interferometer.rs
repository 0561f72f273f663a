//! Forward models of the two-source interferometer.
//!
//! Two independent routes produce the detected single-photon rate for mode
//! `l` as a function of the combined phase `phi`:
//!
//! * [`closed_form_pattern`] evaluates the summed-sinusoid rate
//!   `1 + sum_k |O_lk||U_kl| sin(phi + arg U_kl - arg O_lk)` directly.
//! * [`statevector_pattern`] builds the joint idler/signal state explicitly,
//!   applies the detector field operator and takes the squared norm.
//!
//! Only the combined phase is modelled; the idler, pump and signal path
//! phases are never exposed separately.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::Setting;
use crate::matrix::UnitaryMatrix;

/// Default proportionality constant; keeps ideal probabilities in `[0, 1]`.
pub const DEFAULT_SCALE: f64 = 0.5;

/// Slack allowed when checking that probabilities lie in `[0, 1]`.
const PROBABILITY_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Probability,
    ExpectedCounts,
    PoissonCounts,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub phi: f64,
    pub value: f64,
}

/// A sampled fringe for one projection mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterferencePattern {
    /// Absent for patterns generated outside a plan.
    pub setting: Option<Setting>,
    pub mode: usize,
    pub samples: Vec<Sample>,
    pub value_kind: ValueKind,
    /// Multiplies the bracketed rate; counts patterns fold the expected
    /// counts per sample into it.
    pub scale: f64,
    /// Multiplier on the interference term, 1 for ideal path identity.
    pub coherence: f64,
}

impl InterferencePattern {
    pub fn phis(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.phi)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }

    pub fn with_setting(mut self, setting: Setting) -> Self {
        self.setting = Some(setting);
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale *= factor;
        for s in &mut out.samples {
            s.value *= factor;
        }
        out
    }

    /// Writes `phi_rad,value` rows with round-trip precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phi_rad,value\n");
        for s in &self.samples {
            out.push_str(&format!("{},{}\n", s.phi, s.value));
        }
        out
    }

    /// Parses the `phi_rad,value` table back into samples.
    pub fn samples_from_csv(text: &str) -> std::result::Result<Vec<Sample>, String> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("phi_rad,value") => {}
            other => return Err(format!("expected header `phi_rad,value`, got {other:?}")),
        }
        let mut samples = Vec::new();
        for (idx, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (phi, value) = line
                .split_once(',')
                .ok_or_else(|| format!("line {}: expected two columns", idx + 2))?;
            let phi: f64 = phi
                .trim()
                .parse()
                .map_err(|e| format!("line {}: {e}", idx + 2))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| format!("line {}: {e}", idx + 2))?;
            samples.push(Sample { phi, value });
        }
        Ok(samples)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    None,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseOffsetMode {
    #[default]
    Known,
    /// One fixed unknown offset is added to every generating phase.
    Hidden,
}

fn default_expected_counts() -> f64 {
    1e6
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub kind: NoiseKind,
    #[serde(default = "default_expected_counts")]
    pub expected_counts_per_sample: f64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub phase_offset_mode: PhaseOffsetMode,
    /// Drawn from `master_seed` when hidden mode leaves it unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_offset: Option<f64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            kind: NoiseKind::None,
            expected_counts_per_sample: default_expected_counts(),
            master_seed: 0,
            phase_offset_mode: PhaseOffsetMode::Known,
            hidden_offset: None,
        }
    }
}

impl NoiseConfig {
    pub fn poisson(expected_counts_per_sample: f64, master_seed: u64) -> Self {
        Self {
            kind: NoiseKind::Poisson,
            expected_counts_per_sample,
            master_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.expected_counts_per_sample;
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::config(
                "noise.expected_counts_per_sample",
                format!("{c} must be positive and finite"),
            ));
        }
        if self.kind == NoiseKind::Poisson && c < 1.0 {
            return Err(Error::config(
                "noise.expected_counts_per_sample",
                format!("{c} must be at least 1 for poisson noise"),
            ));
        }
        if let Some(h) = self.hidden_offset {
            if !h.is_finite() {
                return Err(Error::config("noise.hidden_offset", "must be finite"));
            }
        }
        Ok(())
    }

    /// Offset added to every generating phase: zero in known mode, otherwise
    /// the configured value or one drawn uniformly from `[-pi, pi)` on a
    /// stream reserved for it.
    pub fn resolved_offset(&self) -> f64 {
        match self.phase_offset_mode {
            PhaseOffsetMode::Known => 0.0,
            PhaseOffsetMode::Hidden => self.hidden_offset.unwrap_or_else(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
                rng.set_stream(u64::MAX);
                rng.random_range(-PI..PI)
            }),
        }
    }
}

fn validate_inputs(
    u: &UnitaryMatrix,
    o: &UnitaryMatrix,
    mode: usize,
    grid: &[f64],
    scale: f64,
) -> Result<()> {
    if u.dim() != o.dim() {
        return Err(Error::Dimension(format!(
            "unknown is {0}x{0} but known transformation is {1}x{1}",
            u.dim(),
            o.dim()
        )));
    }
    if mode >= u.dim() {
        return Err(Error::Dimension(format!(
            "projection mode {mode} out of range for dim {}",
            u.dim()
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidPattern("phase grid is empty".into()));
    }
    if grid.iter().any(|p| !p.is_finite()) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPattern(
            "phase grid must be finite, sorted and distinct".into(),
        ));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidPattern(format!("scale {scale} must be positive")));
    }
    Ok(())
}

/// Detected rate from the closed-form sum of sinusoids.
///
/// `value(phi) = scale * [1 + coherence * sum_k |O_lk| |U_kl| sin(phi + arg U_kl - arg O_lk)]`
pub fn closed_form_pattern(
    u: &UnitaryMatrix,
    o: &UnitaryMatrix,
    mode: usize,
    grid: &[f64],
    scale: f64,
    coherence: f64,
) -> Result<InterferencePattern> {
    validate_inputs(u, o, mode, grid, scale)?;
    if !(0.0..=1.0).contains(&coherence) {
        return Err(Error::InvalidPattern(format!(
            "coherence {coherence} must lie in [0, 1]"
        )));
    }
    let terms: Vec<(f64, f64)> = (0..u.dim())
        .map(|k| {
            let uk = u.get(k, mode);
            let ok = o.get(mode, k);
            (ok.norm() * uk.norm(), uk.arg() - ok.arg())
        })
        .filter(|&(amp, _)| amp != 0.0)
        .collect();
    let samples = grid
        .iter()
        .map(|&phi| {
            let interference: f64 = terms.iter().map(|&(amp, shift)| amp * (phi + shift).sin()).sum();
            Sample {
                phi,
                value: scale * (1.0 + coherence * interference),
            }
        })
        .collect();
    Ok(InterferencePattern {
        setting: None,
        mode,
        samples,
        value_kind: ValueKind::Probability,
        scale,
        coherence,
    })
}

/// Detected rate computed from the two-source state.
///
/// Basis of the joint state: idler mode `m` (after path identity only the
/// first source's idler modes remain) times signal path `j` in {1, 2} times
/// signal mode `s`. With the combined phase carried on the second source's
/// term,
///
/// ```text
/// psi[m; S1, s] = delta_{m s} / sqrt(2N)
/// psi[m; S2, s] = e^{-i phi} conj(U_{s m}) / sqrt(2N)
/// ```
///
/// The detector field for mode `l` is `a_{l,S1} + i sum_k O_lk a_{k,S2}`;
/// applying it leaves an idler-only vector whose squared norm is the
/// detection probability. That probability has non-interfering level `1/N`,
/// so it is rescaled by `scale * N` to share the closed form's
/// normalization.
pub fn statevector_pattern(
    u: &UnitaryMatrix,
    o: &UnitaryMatrix,
    mode: usize,
    grid: &[f64],
    scale: f64,
) -> Result<InterferencePattern> {
    validate_inputs(u, o, mode, grid, scale)?;
    let n = u.dim();
    let norm = 1.0 / ((2 * n) as f64).sqrt();
    let i = Complex64::new(0.0, 1.0);

    let samples = grid
        .iter()
        .map(|&phi| {
            let source_phase = Complex64::from_polar(1.0, -phi);
            // psi indexed as [idler mode][signal mode] for each signal path.
            let path1 = |m: usize, s: usize| {
                if m == s {
                    Complex64::new(norm, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            };
            let path2 = |m: usize, s: usize| source_phase * u.get(s, m).conj() * norm;

            let idler = DVector::from_fn(n, |m, _| {
                let mut amp = path1(m, mode);
                for k in 0..n {
                    amp += i * o.get(mode, k) * path2(m, k);
                }
                amp
            });
            let probability = idler.norm_squared();
            Sample {
                phi,
                value: probability * scale * n as f64,
            }
        })
        .collect();
    Ok(InterferencePattern {
        setting: None,
        mode,
        samples,
        value_kind: ValueKind::Probability,
        scale,
        coherence: 1.0,
    })
}

/// Applies shot noise to a probability pattern.
///
/// Each setting draws from its own ChaCha stream keyed by
/// `(master_seed, setting_id)`, so results do not depend on the order in
/// which settings are simulated.
pub fn apply_noise(
    pattern: &InterferencePattern,
    noise: &NoiseConfig,
    setting_id: usize,
) -> Result<InterferencePattern> {
    if noise.kind == NoiseKind::None {
        return Ok(pattern.clone());
    }
    noise.validate()?;
    if pattern.value_kind != ValueKind::Probability {
        return Err(Error::InvalidPattern(format!(
            "noise needs a probability pattern, got {:?}",
            pattern.value_kind
        )));
    }
    if let Some(bad) = pattern
        .values()
        .find(|v| !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(v))
    {
        return Err(Error::InvalidPattern(format!(
            "probability {bad} lies outside [0, 1]"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(noise.master_seed);
    rng.set_stream(setting_id as u64);
    let c = noise.expected_counts_per_sample;
    let mut out = pattern.clone();
    for s in &mut out.samples {
        let mean = c * s.value.clamp(0.0, 1.0);
        s.value = if mean > 0.0 {
            let dist = Poisson::new(mean)
                .map_err(|e| Error::InvalidPattern(format!("poisson mean {mean}: {e}")))?;
            dist.sample(&mut rng)
        } else {
            0.0
        };
    }
    out.value_kind = ValueKind::PoissonCounts;
    out.scale *= c;
    Ok(out)
}

/// Forward-model simulator wrapping a hidden unitary.
#[derive(Clone, Debug)]
pub struct Simulator {
    truth: UnitaryMatrix,
    scale: f64,
    coherence: f64,
    noise: NoiseConfig,
    offset: f64,
}

impl Simulator {
    pub fn new(truth: UnitaryMatrix, scale: f64, coherence: f64, noise: NoiseConfig) -> Result<Self> {
        noise.validate()?;
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::config("scale", format!("{scale} must be positive")));
        }
        if !(0.0..=1.0).contains(&coherence) {
            return Err(Error::config("coherence", format!("{coherence} must lie in [0, 1]")));
        }
        let offset = noise.resolved_offset();
        Ok(Self {
            truth,
            scale,
            coherence,
            noise,
            offset,
        })
    }

    pub fn ideal(truth: UnitaryMatrix) -> Self {
        Self::new(truth, DEFAULT_SCALE, 1.0, NoiseConfig::default()).expect("defaults are valid")
    }

    pub fn truth(&self) -> &UnitaryMatrix {
        &self.truth
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn coherence(&self) -> f64 {
        self.coherence
    }

    /// Offset between the labelled and the generating phase.
    pub fn hidden_offset(&self) -> f64 {
        self.offset
    }

    /// Simulates one plan setting. Samples are labelled with the setting's
    /// grid while the rate is generated at `grid + hidden_offset`.
    pub fn simulate(&self, setting: &Setting) -> Result<InterferencePattern> {
        let form = setting.form(self.truth.dim())?;
        let o = form.matrix();
        let shifted: Vec<f64> = setting.phase_grid.iter().map(|p| p + self.offset).collect();
        let mut pattern = closed_form_pattern(
            &self.truth,
            &o,
            setting.projection_mode,
            &shifted,
            self.scale,
            self.coherence,
        )?;
        for (sample, &phi) in pattern.samples.iter_mut().zip(&setting.phase_grid) {
            sample.phi = phi;
        }
        let pattern = apply_noise(&pattern, &self.noise, setting.id)?;
        Ok(pattern.with_setting(setting.clone()))
    }
}
