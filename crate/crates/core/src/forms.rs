//! Known transformations applied to the detected photon, and the measurement
//! schedules built from them.
//!
//! A basic form rotates one pair of modes `(q, r)` by `theta`; a compound form
//! rotates several disjoint pairs at once. The compound schedule is a
//! round-robin 1-factorization of the complete graph on the modes (circle
//! method), so every unordered pair is rotated in exactly one form.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, UnitaryMatrix};

/// Current version of the plan file layout.
pub const PLAN_SCHEMA_VERSION: u32 = 1;

/// Default number of phase samples per setting.
pub const DEFAULT_GRID_COUNT: usize = 24;

/// Two-mode rotation embedded in the identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasicForm {
    q: usize,
    r: usize,
    theta: f64,
    dim: usize,
}

impl BasicForm {
    pub fn new(q: usize, r: usize, theta: f64, dim: usize) -> Result<Self> {
        validate_pair(q, r, dim)?;
        Ok(Self { q, r, theta, dim })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Identity except `O_qq = O_rr = cos(theta)`, `O_qr = -sin(theta)`,
    /// `O_rq = sin(theta)`.
    pub fn matrix(&self) -> UnitaryMatrix {
        let (s, c) = rotation_sin_cos(self.theta);
        let mut m = ComplexMatrix::identity(self.dim)
            .expect("dim validated")
            .into_matrix();
        m[(self.q, self.q)] = Complex64::new(c, 0.0);
        m[(self.r, self.r)] = Complex64::new(c, 0.0);
        m[(self.q, self.r)] = Complex64::new(-s, 0.0);
        m[(self.r, self.q)] = Complex64::new(s, 0.0);
        let m = ComplexMatrix::from_matrix(m).expect("square");
        UnitaryMatrix::new(m, 1e-12).expect("rotation is unitary")
    }
}

/// `sin` and `cos` that are exact at the two angles used by the protocol.
fn rotation_sin_cos(theta: f64) -> (f64, f64) {
    if theta == 0.0 {
        (0.0, 1.0)
    } else if theta == FRAC_PI_2 {
        (1.0, 0.0)
    } else {
        theta.sin_cos()
    }
}

fn validate_pair(q: usize, r: usize, dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidForm(format!("dim {dim} is below 2")));
    }
    if q >= r {
        return Err(Error::InvalidForm(format!("pair ({q}, {r}) needs q < r")));
    }
    if r >= dim {
        return Err(Error::InvalidForm(format!(
            "pair ({q}, {r}) out of range for dim {dim}"
        )));
    }
    Ok(())
}

/// Product of basic forms acting on mutually disjoint mode pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct CompoundForm {
    pairs: Vec<(usize, usize)>,
    theta: f64,
    dim: usize,
}

impl CompoundForm {
    pub fn new(pairs: Vec<(usize, usize)>, theta: f64, dim: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidForm("compound form needs at least one pair".into()));
        }
        let mut seen = vec![false; dim];
        for &(q, r) in &pairs {
            validate_pair(q, r, dim)?;
            for mode in [q, r] {
                if seen[mode] {
                    return Err(Error::Composition(format!(
                        "mode {mode} is rotated by more than one pair in {pairs:?}"
                    )));
                }
                seen[mode] = true;
            }
        }
        // Disjointness already forces this; kept as an explicit invariant.
        debug_assert!(pairs.len() <= dim / 2);
        Ok(Self { pairs, theta, dim })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self {
            pairs: self.pairs.clone(),
            theta,
            dim: self.dim,
        }
    }

    pub fn basic_forms(&self) -> Vec<BasicForm> {
        self.pairs
            .iter()
            .map(|&(q, r)| BasicForm {
                q,
                r,
                theta: self.theta,
                dim: self.dim,
            })
            .collect()
    }

    /// The pair containing `mode`, if any.
    pub fn pair_of(&self, mode: usize) -> Option<(usize, usize)> {
        self.pairs
            .iter()
            .copied()
            .find(|&(q, r)| q == mode || r == mode)
    }

    pub fn modes(&self) -> Vec<usize> {
        let mut modes: Vec<usize> = self.pairs.iter().flat_map(|&(q, r)| [q, r]).collect();
        modes.sort_unstable();
        modes
    }

    pub fn matrix(&self) -> UnitaryMatrix {
        let mut acc = UnitaryMatrix::identity(self.dim).expect("dim validated");
        for basic in self.basic_forms() {
            acc = acc.compose(&basic.matrix()).expect("same dim");
        }
        acc
    }
}

pub fn basic_form_matrix(form: &BasicForm) -> UnitaryMatrix {
    form.matrix()
}

pub fn compound_form_matrix(form: &CompoundForm) -> UnitaryMatrix {
    form.matrix()
}

/// The two rotation angles a plan ever uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ThetaChoice {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "pi/2")]
    HalfPi,
}

impl ThetaChoice {
    pub fn radians(self) -> f64 {
        match self {
            ThetaChoice::Zero => 0.0,
            ThetaChoice::HalfPi => FRAC_PI_2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Basic,
    Compound,
}

/// How a fitted fringe phase maps to the element's argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetRule {
    /// argument = fitted phase
    Direct,
    /// The fringe carries an extra `-pi`; argument = fitted phase + pi.
    MinusPi,
}

impl OffsetRule {
    pub fn offset(self) -> f64 {
        match self {
            OffsetRule::Direct => 0.0,
            OffsetRule::MinusPi => PI,
        }
    }
}

/// One configuration of the interferometer: form, angle, projected mode, and
/// the phase values to scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub id: usize,
    pub form_index: usize,
    pub pairs: Vec<(usize, usize)>,
    pub theta: ThetaChoice,
    pub projection_mode: usize,
    pub phase_grid: Vec<f64>,
}

impl Setting {
    pub fn form(&self, dim: usize) -> Result<CompoundForm> {
        CompoundForm::new(self.pairs.clone(), self.theta.radians(), dim)
    }
}

/// Maps one setting's fringe to one element of the unknown matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElementTarget {
    pub setting_id: usize,
    pub form_index: usize,
    pub theta: ThetaChoice,
    pub mode: usize,
    pub row: usize,
    pub col: usize,
    pub rule: OffsetRule,
    /// False for repeat measurements of an element another entry already
    /// covers (diagonal elements are re-measured by every form).
    pub primary: bool,
}

/// How the phase grid is laid out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseGridSpec {
    pub count: usize,
    /// Samples are uniform over `[0, span)`.
    pub span: f64,
}

impl Default for PhaseGridSpec {
    fn default() -> Self {
        Self {
            count: DEFAULT_GRID_COUNT,
            span: 2.0 * PI,
        }
    }
}

impl PhaseGridSpec {
    pub fn grid(&self) -> Result<Vec<f64>> {
        if self.count < 3 {
            return Err(Error::config(
                "phase_grid.count",
                format!("{} is below the minimum of 3", self.count),
            ));
        }
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(Error::config("phase_grid.span", "must be positive and finite"));
        }
        let step = self.span / self.count as f64;
        Ok((0..self.count).map(|k| k as f64 * step).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementPlan {
    pub schema_version: u32,
    pub dim: usize,
    pub protocol: Protocol,
    pub thetas: Vec<ThetaChoice>,
    pub phase_grid: Vec<f64>,
    /// Mode pairs of each form, canonically ordered.
    pub forms: Vec<Vec<(usize, usize)>>,
    pub settings: Vec<Setting>,
    pub element_map: Vec<ElementTarget>,
}

impl MeasurementPlan {
    pub fn form(&self, index: usize, theta: ThetaChoice) -> Result<CompoundForm> {
        let pairs = self.forms.get(index).ok_or_else(|| {
            Error::Reconstruction(format!("plan has no form {index}"))
        })?;
        CompoundForm::new(pairs.clone(), theta.radians(), self.dim)
    }

    pub fn setting(&self, id: usize) -> Option<&Setting> {
        self.settings.iter().find(|s| s.id == id)
    }

    /// Sub-plan keeping only the listed forms (in plan order). Settings keep
    /// their ids so patterns stay addressable; the result need not cover the
    /// whole matrix.
    pub fn restrict_to_forms(&self, keep: &[usize]) -> MeasurementPlan {
        let mut plan = self.clone();
        plan.settings.retain(|s| keep.contains(&s.form_index));
        plan.element_map.retain(|t| keep.contains(&t.form_index));
        plan
    }

    /// Checks the structural invariants: every element targeted, every
    /// unordered pair rotated exactly once, and forms disjoint.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim;
        if n < 2 {
            return Err(Error::Dimension(format!("plan dim {n} is below 2")));
        }
        let mut pair_count = vec![0usize; n * n];
        for pairs in &self.forms {
            CompoundForm::new(pairs.clone(), 0.0, n)?;
            for &(q, r) in pairs {
                pair_count[q * n + r] += 1;
            }
        }
        for q in 0..n {
            for r in q + 1..n {
                let count = pair_count[q * n + r];
                if count != 1 {
                    return Err(Error::Reconstruction(format!(
                        "pair ({q}, {r}) is rotated {count} times in the plan"
                    )));
                }
            }
        }
        let mut primary = vec![0usize; n * n];
        for t in &self.element_map {
            if t.row >= n || t.col >= n {
                return Err(Error::Reconstruction(format!(
                    "element map targets ({}, {}) outside dim {n}",
                    t.row, t.col
                )));
            }
            if self.setting(t.setting_id).is_none() {
                return Err(Error::Reconstruction(format!(
                    "element map references missing setting {}",
                    t.setting_id
                )));
            }
            if t.primary {
                primary[t.row * n + t.col] += 1;
            }
        }
        if let Some(idx) = primary.iter().position(|&c| c != 1) {
            return Err(Error::Reconstruction(format!(
                "element map incomplete: U[{}][{}] has {} primary entries",
                idx / n,
                idx % n,
                primary[idx]
            )));
        }
        Ok(())
    }
}

/// Circle-method round robin over modes `0..dim`.
///
/// For even `dim`, mode `dim - 1` is the fixed pivot and `dim - 1` rounds of
/// `dim / 2` pairs result. For odd `dim` a virtual mode `dim` is added and
/// pairs touching it are dropped, leaving one idle mode per round and `dim`
/// rounds of `(dim - 1) / 2` pairs. Rounds come back canonically sorted.
pub fn round_robin(dim: usize) -> Vec<Vec<(usize, usize)>> {
    if dim < 2 {
        return Vec::new();
    }
    let players = if dim % 2 == 0 { dim } else { dim + 1 };
    let pivot = players - 1;
    let ring = players - 1;
    let mut rounds: Vec<Vec<(usize, usize)>> = (0..ring)
        .map(|k| {
            let mut round = vec![(k, pivot)];
            for i in 1..players / 2 {
                round.push(((k + i) % ring, (k + ring - i) % ring));
            }
            let mut pairs: Vec<(usize, usize)> = round
                .into_iter()
                .filter(|&(a, b)| a < dim && b < dim)
                .map(|(a, b)| (a.min(b), a.max(b)))
                .collect();
            pairs.sort_unstable();
            pairs
        })
        .collect();
    rounds.sort();
    rounds
}

/// Builds the full measurement plan for `dim` modes.
///
/// Every form is measured at `theta = 0` and `theta = pi/2`. For each pair
/// `(q, r)` of a form the four fringes map as
///
/// | theta | mode | element  | rule     |
/// |-------|------|----------|----------|
/// | 0     | q    | `U_qq`   | direct   |
/// | 0     | r    | `U_rr`   | direct   |
/// | pi/2  | q    | `U_rq`   | minus pi |
/// | pi/2  | r    | `U_qr`   | direct   |
///
/// The basic protocol additionally projects onto every unrotated mode `l`
/// at `theta = 0`, which yields `U_ll` directly.
pub fn plan_schedule(dim: usize, protocol: Protocol, grid: &PhaseGridSpec) -> Result<MeasurementPlan> {
    if dim < 2 {
        return Err(Error::Dimension(format!("plan needs dim >= 2, got {dim}")));
    }
    let phase_grid = grid.grid()?;
    let forms: Vec<Vec<(usize, usize)>> = match protocol {
        Protocol::Basic => (0..dim)
            .flat_map(|q| (q + 1..dim).map(move |r| vec![(q, r)]))
            .collect(),
        Protocol::Compound => round_robin(dim),
    };

    let mut settings = Vec::new();
    let mut element_map = Vec::new();
    let mut covered = vec![false; dim * dim];
    let mut push = |settings: &mut Vec<Setting>,
                    form_index: usize,
                    pairs: &[(usize, usize)],
                    theta: ThetaChoice,
                    mode: usize,
                    target: (usize, usize),
                    rule: OffsetRule| {
        let id = settings.len();
        settings.push(Setting {
            id,
            form_index,
            pairs: pairs.to_vec(),
            theta,
            projection_mode: mode,
            phase_grid: phase_grid.clone(),
        });
        let (row, col) = target;
        let primary = !covered[row * dim + col];
        covered[row * dim + col] = true;
        element_map.push(ElementTarget {
            setting_id: id,
            form_index,
            theta,
            mode,
            row,
            col,
            rule,
            primary,
        });
    };

    for (form_index, pairs) in forms.iter().enumerate() {
        let rotated: Vec<usize> = pairs.iter().flat_map(|&(q, r)| [q, r]).collect();
        for &(q, r) in pairs {
            push(&mut settings, form_index, pairs, ThetaChoice::Zero, q, (q, q), OffsetRule::Direct);
            push(&mut settings, form_index, pairs, ThetaChoice::Zero, r, (r, r), OffsetRule::Direct);
        }
        if protocol == Protocol::Basic {
            for l in (0..dim).filter(|l| !rotated.contains(l)) {
                push(&mut settings, form_index, pairs, ThetaChoice::Zero, l, (l, l), OffsetRule::Direct);
            }
        }
        for &(q, r) in pairs {
            push(&mut settings, form_index, pairs, ThetaChoice::HalfPi, q, (r, q), OffsetRule::MinusPi);
            push(&mut settings, form_index, pairs, ThetaChoice::HalfPi, r, (q, r), OffsetRule::Direct);
        }
    }

    let plan = MeasurementPlan {
        schema_version: PLAN_SCHEMA_VERSION,
        dim,
        protocol,
        thetas: vec![ThetaChoice::Zero, ThetaChoice::HalfPi],
        phase_grid,
        forms,
        settings,
        element_map,
    };
    plan.validate()?;
    Ok(plan)
}
