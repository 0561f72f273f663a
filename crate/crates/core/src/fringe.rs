//! Visibility and phase extraction from sampled fringes.
//!
//! The fringe frequency in the scanned phase is exactly one, so the model
//! `a0 + a1 sin(phi) + a2 cos(phi)` is linear in its coefficients and is
//! solved by ordinary least squares.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interferometer::InterferencePattern;

/// Amplitudes at or below this fraction of the mean level count as zero, and
/// the phase is reported as 0.
pub const ZERO_AMPLITUDE_REL: f64 = 1e-13;

/// Ratio of smallest to largest singular value below which the design matrix
/// is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub mean_level: f64,
    pub amplitude: f64,
    /// In `(-pi, pi]`; the model is `mean + amplitude * sin(phi + phase)`.
    pub phase: f64,
    /// `amplitude / mean_level`.
    pub visibility: f64,
    pub residual_rms: f64,
}

impl FringeFit {
    pub fn evaluate(&self, phi: f64) -> f64 {
        self.mean_level + self.amplitude * (phi + self.phase).sin()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_phase(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Shortest signed angular distance `a - b`, in `(-pi, pi]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_phase(a - b)
}

pub fn fit_fringe(pattern: &InterferencePattern) -> Result<FringeFit> {
    let n = pattern.samples.len();
    if n < 3 {
        return Err(Error::Fit(format!("need at least 3 samples, got {n}")));
    }
    let design = DMatrix::from_fn(n, 3, |row, col| {
        let phi = pattern.samples[row].phi;
        match col {
            0 => 1.0,
            1 => phi.sin(),
            _ => phi.cos(),
        }
    });
    let rhs = DVector::from_iterator(n, pattern.values());

    let svd = design.clone().svd(true, true);
    let sv = &svd.singular_values;
    let largest = sv.max();
    let smallest = sv.min();
    if !(largest > 0.0) || smallest / largest < RANK_TOL {
        return Err(Error::Fit(
            "phase grid does not determine mean, sine and cosine terms (rank deficient)".into(),
        ));
    }
    let coeffs = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Fit(format!("least squares failed: {e}")))?;
    let (a0, a1, a2) = (coeffs[0], coeffs[1], coeffs[2]);
    if !(a0 > 0.0) {
        return Err(Error::Fit(format!(
            "mean level {a0} is not positive (nonphysical pattern)"
        )));
    }

    let residual = &design * &coeffs - &rhs;
    let residual_rms = (residual.norm_squared() / n as f64).sqrt();

    let mut amplitude = a1.hypot(a2);
    let mut phase = wrap_phase(a2.atan2(a1));
    if amplitude <= ZERO_AMPLITUDE_REL * a0 {
        amplitude = 0.0;
        phase = 0.0;
    }
    Ok(FringeFit {
        mean_level: a0,
        amplitude,
        phase,
        visibility: amplitude / a0,
        residual_rms,
    })
}

/// `(max - min) / (max + min)` over the samples.
pub fn visibility_minmax(pattern: &InterferencePattern) -> Result<f64> {
    if pattern.samples.len() < 2 {
        return Err(Error::Fit("min/max visibility needs at least 2 samples".into()));
    }
    let max = pattern.values().fold(f64::NEG_INFINITY, f64::max);
    let min = pattern.values().fold(f64::INFINITY, f64::min);
    if max + min == 0.0 {
        return Err(Error::Fit("pattern is identically zero".into()));
    }
    Ok((max - min) / (max + min))
}
