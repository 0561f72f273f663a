//! Protocol driver: measure every setting, fit the fringes, turn visibilities
//! and phases into matrix elements, and assemble the reconstructed unitary.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{CompoundForm, MeasurementPlan, OffsetRule, Protocol, Setting, ThetaChoice};
use crate::fringe::{angle_diff, fit_fringe, wrap_phase, FringeFit};
use crate::interferometer::{InterferencePattern, NoiseKind, PhaseOffsetMode, Simulator};
use crate::matrix::{fidelity, nearest_unitary, ComplexMatrix, UnitaryMatrix};

/// Visibilities may exceed 1 by this much (shot noise) before the data is
/// rejected as nonphysical.
pub const DEFAULT_VISIBILITY_TOL: f64 = 0.05;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Supplies one pattern per plan setting. Implementations must tolerate
/// concurrent calls for distinct settings.
pub trait PatternSource: Sync {
    fn pattern(&self, setting: &Setting) -> Result<InterferencePattern>;

    fn seeds(&self) -> Seeds {
        Seeds::default()
    }
}

impl PatternSource for Simulator {
    fn pattern(&self, setting: &Setting) -> Result<InterferencePattern> {
        self.simulate(setting)
    }

    fn seeds(&self) -> Seeds {
        let noise = self.noise();
        let seeded =
            noise.kind != NoiseKind::None || noise.phase_offset_mode == PhaseOffsetMode::Hidden;
        Seeds {
            master_seed: seeded.then_some(noise.master_seed),
            haar_seed: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master_seed: Option<u64>,
    pub haar_seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    /// Fitted phases are used as-is; valid when the scanned phase is known.
    #[default]
    Absolute,
    /// Arguments are taken relative to the best-visibility fringe, so the
    /// result is defined up to one global phase.
    Relative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PhaseConvention {
    Absolute,
    Relative {
        reference_setting: usize,
        row: usize,
        col: usize,
        /// Argument removed from every element.
        removed_phase: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingFit {
    pub setting_id: usize,
    pub fit: FringeFit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementEstimate {
    pub row: usize,
    pub col: usize,
    pub modulus: f64,
    /// In `(-pi, pi]`.
    pub argument: f64,
    pub source_setting: usize,
    pub offset_rule: OffsetRule,
}

impl ElementEstimate {
    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.modulus, self.argument)
    }
}

fn estimate(
    row: usize,
    col: usize,
    fit: &SettingFit,
    rule: OffsetRule,
    visibility_tol: f64,
) -> Result<ElementEstimate> {
    let v = fit.fit.visibility;
    if !(v <= 1.0 + visibility_tol) {
        return Err(Error::NonphysicalVisibility {
            setting_id: fit.setting_id,
            visibility: v,
            tol: visibility_tol,
        });
    }
    // A vanishing fringe has no phase; report argument 0.
    let argument = if v == 0.0 {
        0.0
    } else {
        wrap_phase(fit.fit.phase + rule.offset())
    };
    Ok(ElementEstimate {
        row,
        col,
        modulus: v,
        argument,
        source_setting: fit.setting_id,
        offset_rule: rule,
    })
}

/// Reads off matrix elements from the fits of one form.
///
/// For each rotated pair `(q, r)`:
/// `U_qq` and `U_rr` from the unrotated fringes of modes `q` and `r`,
/// `U_rq` from mode `q` at a quarter turn (fitted phase + pi),
/// `U_qr` from mode `r` at a quarter turn.
/// Unrotated fringes of modes outside every pair give their diagonal element.
pub fn extract_elements(
    form: &CompoundForm,
    fits: &HashMap<(ThetaChoice, usize), SettingFit>,
    visibility_tol: f64,
) -> Result<Vec<ElementEstimate>> {
    let lookup = |theta: ThetaChoice, mode: usize| {
        fits.get(&(theta, mode)).ok_or_else(|| {
            Error::Reconstruction(format!(
                "missing fit for theta {theta:?}, mode {mode} of form {:?}",
                form.pairs()
            ))
        })
    };
    let mut out = Vec::with_capacity(4 * form.pairs().len());
    for &(q, r) in form.pairs() {
        out.push(estimate(q, q, lookup(ThetaChoice::Zero, q)?, OffsetRule::Direct, visibility_tol)?);
        out.push(estimate(r, r, lookup(ThetaChoice::Zero, r)?, OffsetRule::Direct, visibility_tol)?);
        out.push(estimate(r, q, lookup(ThetaChoice::HalfPi, q)?, OffsetRule::MinusPi, visibility_tol)?);
        out.push(estimate(q, r, lookup(ThetaChoice::HalfPi, r)?, OffsetRule::Direct, visibility_tol)?);
    }
    let mut unrotated: Vec<(&(ThetaChoice, usize), &SettingFit)> = fits
        .iter()
        .filter(|((theta, mode), _)| *theta == ThetaChoice::Zero && form.pair_of(*mode).is_none())
        .collect();
    unrotated.sort_by_key(|((_, mode), _)| *mode);
    for ((_, mode), fit) in unrotated {
        out.push(estimate(*mode, *mode, fit, OffsetRule::Direct, visibility_tol)?);
    }
    Ok(out)
}

/// One measured setting: its raw pattern and the fit.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub setting_id: usize,
    pub pattern: InterferencePattern,
    pub fit: FringeFit,
}

/// Runs every setting of `plan` through `source` and fits it, in parallel.
/// Results come back in setting order.
pub fn measure(source: &dyn PatternSource, plan: &MeasurementPlan) -> Result<Vec<Measurement>> {
    plan.settings
        .par_iter()
        .map(|setting| {
            let pattern = source.pattern(setting)?;
            let fit = fit_fringe(&pattern).map_err(|e| {
                Error::Reconstruction(format!("setting {} could not be fitted: {e}", setting.id))
            })?;
            Ok(Measurement {
                setting_id: setting.id,
                pattern,
                fit,
            })
        })
        .collect()
}

/// Extracts every element estimate the plan's forms provide from completed
/// fits. Works on partial plans too.
pub fn estimates_from_fits(
    plan: &MeasurementPlan,
    fits: &[SettingFit],
    visibility_tol: f64,
) -> Result<Vec<ElementEstimate>> {
    let by_id: HashMap<usize, &SettingFit> = fits.iter().map(|f| (f.setting_id, f)).collect();
    let mut per_form: BTreeMap<usize, HashMap<(ThetaChoice, usize), SettingFit>> = BTreeMap::new();
    for setting in &plan.settings {
        let fit = by_id.get(&setting.id).ok_or_else(|| {
            Error::Reconstruction(format!("no fit for setting {}", setting.id))
        })?;
        per_form
            .entry(setting.form_index)
            .or_default()
            .insert((setting.theta, setting.projection_mode), **fit);
    }
    let mut estimates = Vec::new();
    for (form_index, fits) in &per_form {
        let form = plan.form(*form_index, ThetaChoice::Zero)?;
        estimates.extend(extract_elements(&form, fits, visibility_tol)?);
    }

    // Cross-check against the plan's element map.
    for target in &plan.element_map {
        let found = estimates.iter().any(|e| {
            e.source_setting == target.setting_id
                && e.row == target.row
                && e.col == target.col
                && e.offset_rule == target.rule
        });
        if !found {
            return Err(Error::Reconstruction(format!(
                "element map expects U[{}][{}] from setting {} but extraction did not produce it",
                target.row, target.col, target.setting_id
            )));
        }
    }
    Ok(estimates)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructOptions {
    pub phase_mode: PhaseMode,
    pub visibility_tol: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            phase_mode: PhaseMode::Absolute,
            visibility_tol: DEFAULT_VISIBILITY_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub tool_version: String,
    pub dim: usize,
    pub protocol: Protocol,
    /// Assembled estimate, not necessarily unitary.
    pub estimate: ComplexMatrix,
    /// Nearest unitary to the estimate; absent if the estimate is singular.
    pub projected: Option<UnitaryMatrix>,
    /// Max-entry-norm of `E^dagger E - I` for the raw estimate.
    pub unitarity_deviation: f64,
    pub projected_unitarity_deviation: Option<f64>,
    pub fidelity_vs_truth: Option<f64>,
    pub per_element_abs_error: Option<Vec<Vec<f64>>>,
    pub truth: Option<ComplexMatrix>,
    pub phase_convention: PhaseConvention,
    pub settings_used: usize,
    pub seeds: Seeds,
    pub fits: Vec<SettingFit>,
    pub elements: Vec<ElementEstimate>,
}

pub fn reconstruct(
    source: &dyn PatternSource,
    plan: &MeasurementPlan,
    phase_mode: PhaseMode,
    truth: Option<&UnitaryMatrix>,
) -> Result<ReconstructionReport> {
    let options = ReconstructOptions {
        phase_mode,
        ..ReconstructOptions::default()
    };
    reconstruct_with(source, plan, &options, truth).map(|(report, _)| report)
}

/// Full pipeline; also hands back the raw measurements for plotting.
pub fn reconstruct_with(
    source: &dyn PatternSource,
    plan: &MeasurementPlan,
    options: &ReconstructOptions,
    truth: Option<&UnitaryMatrix>,
) -> Result<(ReconstructionReport, Vec<Measurement>)> {
    plan.validate()?;
    let measurements = measure(source, plan)?;
    let fits: Vec<SettingFit> = measurements
        .iter()
        .map(|m| SettingFit {
            setting_id: m.setting_id,
            fit: m.fit,
        })
        .collect();
    let report = assemble(plan, fits, options, truth, source.seeds())?;
    Ok((report, measurements))
}

/// Builds the report from completed fits.
pub fn assemble(
    plan: &MeasurementPlan,
    fits: Vec<SettingFit>,
    options: &ReconstructOptions,
    truth: Option<&UnitaryMatrix>,
    seeds: Seeds,
) -> Result<ReconstructionReport> {
    plan.validate()?;
    let n = plan.dim;
    if let Some(t) = truth {
        if t.dim() != n {
            return Err(Error::Dimension(format!(
                "truth is {0}x{0} but plan is for dim {n}",
                t.dim()
            )));
        }
    }
    let mut elements = estimates_from_fits(plan, &fits, options.visibility_tol)?;

    let phase_convention = match options.phase_mode {
        PhaseMode::Absolute => PhaseConvention::Absolute,
        PhaseMode::Relative => {
            // Largest visibility wins; ties go to the lowest setting id.
            let reference = fits
                .iter()
                .fold(None::<&SettingFit>, |best, f| match best {
                    Some(b) if b.fit.visibility >= f.fit.visibility => Some(b),
                    _ => Some(f),
                })
                .ok_or_else(|| Error::Reconstruction("no fits to reference".into()))?;
            let element = elements
                .iter()
                .find(|e| e.source_setting == reference.setting_id)
                .copied()
                .ok_or_else(|| {
                    Error::Reconstruction(format!(
                        "reference setting {} produced no element",
                        reference.setting_id
                    ))
                })?;
            for e in &mut elements {
                if e.modulus != 0.0 {
                    e.argument = wrap_phase(e.argument - element.argument);
                }
            }
            PhaseConvention::Relative {
                reference_setting: reference.setting_id,
                row: element.row,
                col: element.col,
                removed_phase: element.argument,
            }
        }
    };

    // Repeat measurements (diagonals) are averaged in the complex plane.
    let mut sums = vec![(Complex64::new(0.0, 0.0), 0usize); n * n];
    for e in &elements {
        let slot = &mut sums[e.row * n + e.col];
        slot.0 += e.value();
        slot.1 += 1;
    }
    if let Some(idx) = sums.iter().position(|&(_, count)| count == 0) {
        return Err(Error::Reconstruction(format!(
            "U[{}][{}] was not measured",
            idx / n,
            idx % n
        )));
    }
    let estimate = ComplexMatrix::from_fn(n, |r, c| {
        let (sum, count) = sums[r * n + c];
        sum / count as f64
    })?;

    let unitarity_deviation = estimate.unitarity(0.0).deviation;
    let projected = nearest_unitary(&estimate).ok();
    let projected_unitarity_deviation = projected.as_ref().map(|p| p.unitarity(0.0).deviation);

    let (fidelity_vs_truth, per_element_abs_error) = match (truth, &projected) {
        (Some(t), proj) => {
            let fid = match proj {
                Some(p) => Some(fidelity(t, p)?),
                None => None,
            };
            let aligned = align_global_phase(&estimate, t, options.phase_mode);
            let errors = (0..n)
                .map(|r| (0..n).map(|c| (aligned.get(r, c) - t.get(r, c)).norm()).collect())
                .collect();
            (fid, Some(errors))
        }
        (None, _) => (None, None),
    };

    Ok(ReconstructionReport {
        tool_version: TOOL_VERSION.to_string(),
        dim: n,
        protocol: plan.protocol,
        estimate,
        projected,
        unitarity_deviation,
        projected_unitarity_deviation,
        fidelity_vs_truth,
        per_element_abs_error,
        truth: truth.map(|t| t.matrix().clone()),
        phase_convention,
        settings_used: plan.settings.len(),
        seeds,
        fits,
        elements,
    })
}

/// In relative mode, multiplies the estimate by the unit scalar that best
/// aligns it with `truth`; absolute estimates are returned unchanged.
fn align_global_phase(estimate: &ComplexMatrix, truth: &ComplexMatrix, mode: PhaseMode) -> ComplexMatrix {
    match mode {
        PhaseMode::Absolute => estimate.clone(),
        PhaseMode::Relative => {
            let n = estimate.dim();
            let overlap: Complex64 = (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .map(|(r, c)| estimate.get(r, c).conj() * truth.get(r, c))
                .sum();
            if overlap.norm() == 0.0 {
                estimate.clone()
            } else {
                estimate.scale(overlap / overlap.norm())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mismatch {
    Modulus,
    Argument,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementCheck {
    pub row: usize,
    pub col: usize,
    pub expected_modulus: f64,
    pub modulus: f64,
    pub expected_argument: f64,
    pub argument: f64,
    pub modulus_error: f64,
    /// `None` when the element is too small for its argument to be checked.
    pub argument_error: Option<f64>,
    pub failed: Option<Mismatch>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    pub passed: bool,
    pub truth_available: bool,
    pub tol_modulus: f64,
    pub tol_argument: f64,
    pub checks: Vec<ElementCheck>,
}

impl VerifySummary {
    pub fn failures(&self) -> impl Iterator<Item = &ElementCheck> {
        self.checks.iter().filter(|c| c.failed.is_some())
    }
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.truth_available {
            return writeln!(f, "FAIL: report carries no ground truth to verify against");
        }
        writeln!(
            f,
            "{:>3} {:>3} {:>10} {:>10} {:>10} {:>10}  status",
            "row", "col", "|U|", "|U^|", "arg U", "arg U^"
        )?;
        for c in &self.checks {
            let status = match c.failed {
                None => "ok".to_string(),
                Some(Mismatch::Modulus) => format!("FAIL modulus ({:.3e})", c.modulus_error),
                Some(Mismatch::Argument) => {
                    format!("FAIL argument ({:.3e})", c.argument_error.unwrap_or(f64::NAN))
                }
            };
            writeln!(
                f,
                "{:>3} {:>3} {:>10.6} {:>10.6} {:>10.6} {:>10.6}  {status}",
                c.row, c.col, c.expected_modulus, c.modulus, c.expected_argument, c.argument
            )?;
        }
        let failed = self.failures().count();
        writeln!(
            f,
            "{}: {} of {} elements within tolerance (modulus {:e}, argument {:e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.checks.len() - failed,
            self.checks.len(),
            self.tol_modulus,
            self.tol_argument
        )
    }
}

/// Compares a report's estimate with the truth it carries.
///
/// Arguments of elements whose true modulus is below `10 * tol_mod` are not
/// checked. In relative mode the estimate is first aligned to the truth by a
/// global phase.
pub fn verify_report(report: &ReconstructionReport, tol_mod: f64, tol_arg: f64) -> VerifySummary {
    let Some(truth) = &report.truth else {
        return VerifySummary {
            passed: false,
            truth_available: false,
            tol_modulus: tol_mod,
            tol_argument: tol_arg,
            checks: Vec::new(),
        };
    };
    let mode = match report.phase_convention {
        PhaseConvention::Absolute => PhaseMode::Absolute,
        PhaseConvention::Relative { .. } => PhaseMode::Relative,
    };
    let n = report.dim.min(truth.dim()).min(report.estimate.dim());
    let aligned = align_global_phase(&report.estimate, truth, mode);
    let mut checks = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let want = truth.get(row, col);
            let got = aligned.get(row, col);
            let modulus_error = (got.norm() - want.norm()).abs();
            let argument_error = (want.norm() >= 10.0 * tol_mod)
                .then(|| angle_diff(got.arg(), want.arg()).abs());
            let failed = if !(modulus_error <= tol_mod) {
                Some(Mismatch::Modulus)
            } else if argument_error.is_some_and(|e| !(e <= tol_arg)) {
                Some(Mismatch::Argument)
            } else {
                None
            };
            checks.push(ElementCheck {
                row,
                col,
                expected_modulus: want.norm(),
                modulus: got.norm(),
                expected_argument: want.arg(),
                argument: got.arg(),
                modulus_error,
                argument_error,
                failed,
            });
        }
    }
    let passed = report.estimate.dim() == truth.dim() && checks.iter().all(|c| c.failed.is_none());
    VerifySummary {
        passed,
        truth_available: true,
        tol_modulus: tol_mod,
        tol_argument: tol_arg,
        checks,
    }
}
