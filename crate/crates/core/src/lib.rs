//! Reconstruction of an unknown qudit unitary from single-photon fringes of
//! the *detected* photon in a two-source, path-identity interferometer.
//!
//! The unknown transformation acts on the undetected idler photon; a known
//! rotation applied to the signal photon selects which matrix elements show
//! up in each fringe. Scanning the interferometer phase and fitting the
//! resulting sinusoid yields an element's modulus (visibility) and argument
//! (fringe phase).
//!
//! Modules, bottom up:
//!
//! * [`matrix`]: complex matrices, unitarity checks, gate library, Haar
//!   sampling, fidelity and nearest-unitary projection.
//! * [`forms`]: basic and compound rotation forms and measurement plans.
//! * [`interferometer`]: closed-form and state-vector forward models, noise.
//! * [`fringe`]: least-squares fringe fitting.
//! * [`reconstruction`]: protocol driver, reports and verification.
//! * [`config`], [`io`], [`cli`]: batch front end and file formats.

pub mod cli;
pub mod config;
pub mod error;
pub mod forms;
pub mod fringe;
pub mod interferometer;
pub mod io;
pub mod matrix;
pub mod reconstruction;

pub use error::{Error, Result};
pub use forms::{
    basic_form_matrix, compound_form_matrix, plan_schedule, BasicForm, CompoundForm,
    MeasurementPlan, PhaseGridSpec, Protocol, Setting, ThetaChoice,
};
pub use fringe::{fit_fringe, visibility_minmax, FringeFit};
pub use interferometer::{
    apply_noise, closed_form_pattern, statevector_pattern, InterferencePattern, NoiseConfig,
    NoiseKind, PhaseOffsetMode, Simulator,
};
pub use matrix::{
    check_unitarity, fidelity, haar_random, named_gate, nearest_unitary, ComplexMatrix, Gate,
    UnitaryMatrix,
};
pub use reconstruction::{
    extract_elements, reconstruct, verify_report, PatternSource, PhaseMode,
    ReconstructionReport, VerifySummary,
};
