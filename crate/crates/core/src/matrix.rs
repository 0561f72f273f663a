//! Dense complex matrices over the OAM mode basis.
//!
//! Index convention, used throughout the crate: entry `(row, col)` is the
//! amplitude for input mode `col` landing in output mode `row`, so the unknown
//! transformation's element `U_{l l'}` lives at `(l, l')`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for certifying constructed gates as unitary.
pub const DEFAULT_UNITARITY_TOL: f64 = 1e-10;

/// Singular values below this make a matrix unprojectable.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

/// Square complex matrix with `dim >= 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct ComplexMatrix {
    data: DMatrix<Complex64>,
}

impl ComplexMatrix {
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::Dimension(format!(
                "matrix is {}x{}, expected square",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.nrows() < 2 {
            return Err(Error::Dimension(format!(
                "dimension {} is below the minimum of 2",
                data.nrows()
            )));
        }
        Ok(Self { data })
    }

    /// Builds a matrix from `dim * dim` row-major entries.
    pub fn from_row_major(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "expected {} entries for dim {dim}, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn mul(&self, rhs: &ComplexMatrix) -> Result<Self> {
        ensure_same_dim(self.dim(), rhs.dim())?;
        Ok(Self {
            data: &self.data * &rhs.data,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            data: self.data.map(|z| z * factor),
        }
    }

    /// Row-major copy of the entries.
    pub fn row_major(&self) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .flat_map(|r| (0..n).map(move |c| (r, c)))
            .map(|(r, c)| self.data[(r, c)])
            .collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        ensure_same_dim(self.dim(), other.dim())?;
        Ok(max_entry_norm(&(&self.data - &other.data)))
    }

    pub fn unitarity(&self, tol: f64) -> UnitarityCheck {
        unitarity_of(&self.data, tol)
    }

    pub fn to_file(&self) -> MatrixFile {
        MatrixFile {
            dim: self.dim(),
            entries: self.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_file(file: &MatrixFile) -> Result<Self> {
        let entries: Vec<Complex64> = file
            .entries
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        Self::from_row_major(file.dim, &entries)
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|c| {
                    let z = self.get(r, c);
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join("  "))?;
        }
        Ok(())
    }
}

/// On-disk matrix layout: row-major `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixFile> for ComplexMatrix {
    type Error = Error;

    fn try_from(file: MatrixFile) -> Result<Self> {
        Self::from_file(&file)
    }
}

impl From<ComplexMatrix> for MatrixFile {
    fn from(m: ComplexMatrix) -> Self {
        m.to_file()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitarityCheck {
    /// Max-entry-norm of `M^dagger M - I`.
    pub deviation: f64,
    pub ok: bool,
}

/// Checks how far a square matrix is from unitary.
pub fn check_unitarity(m: &DMatrix<Complex64>, tol: f64) -> Result<UnitarityCheck> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "unitarity check needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(unitarity_of(m, tol))
}

fn unitarity_of(m: &DMatrix<Complex64>, tol: f64) -> UnitarityCheck {
    let n = m.nrows();
    let gram = m.adjoint() * m - DMatrix::<Complex64>::identity(n, n);
    let deviation = max_entry_norm(&gram);
    UnitarityCheck {
        deviation,
        ok: deviation <= tol,
    }
}

fn max_entry_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn ensure_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

/// A matrix certified unitary at construction time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "UnitaryFile", into = "UnitaryFile")]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
    certified_tol: f64,
}

impl UnitaryMatrix {
    /// Certifies `matrix` against `tol`. Both `M^dagger M` and `M M^dagger`
    /// must be within `tol` of the identity, so every row and column is
    /// normalized to the same bound.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let n = matrix.dim();
        let cols = matrix.unitarity(tol).deviation;
        let rows = max_entry_norm(
            &(matrix.as_matrix() * matrix.as_matrix().adjoint()
                - DMatrix::<Complex64>::identity(n, n)),
        );
        let deviation = cols.max(rows);
        if deviation > tol {
            return Err(Error::NotUnitary { deviation, tol });
        }
        Ok(Self {
            matrix,
            certified_tol: tol,
        })
    }

    pub fn certify(matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix, DEFAULT_UNITARITY_TOL)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(dim)?, 0.0)
    }

    pub fn certified_tol(&self) -> f64 {
        self.certified_tol
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.matrix
    }

    /// Product of two unitaries, re-certified at the looser of the two bounds
    /// plus rounding headroom.
    pub fn compose(&self, rhs: &UnitaryMatrix) -> Result<Self> {
        let tol = self.certified_tol.max(rhs.certified_tol).max(1e-12) * 2.0;
        Self::new(self.matrix.mul(&rhs.matrix)?, tol)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitaryFile {
    dim: usize,
    entries: Vec<[f64; 2]>,
    certified_tol: f64,
}

impl TryFrom<UnitaryFile> for UnitaryMatrix {
    type Error = Error;

    fn try_from(file: UnitaryFile) -> Result<Self> {
        let matrix = ComplexMatrix::from_file(&MatrixFile {
            dim: file.dim,
            entries: file.entries,
        })?;
        UnitaryMatrix::new(matrix, file.certified_tol)
    }
}

impl From<UnitaryMatrix> for UnitaryFile {
    fn from(u: UnitaryMatrix) -> Self {
        let MatrixFile { dim, entries } = u.matrix.to_file();
        UnitaryFile {
            dim,
            entries,
            certified_tol: u.certified_tol,
        }
    }
}

impl Deref for UnitaryMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Library of exactly-known gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Identity,
    Hadamard4,
    Fourier,
}

impl Gate {
    pub const ALL: [Gate; 3] = [Gate::Identity, Gate::Hadamard4, Gate::Fourier];

    pub fn name(self) -> &'static str {
        match self {
            Gate::Identity => "identity",
            Gate::Hadamard4 => "hadamard4",
            Gate::Fourier => "fourier",
        }
    }

    pub fn matrix(self, dim: usize) -> Result<UnitaryMatrix> {
        let m = match self {
            Gate::Identity => ComplexMatrix::identity(dim)?,
            Gate::Hadamard4 => {
                if dim != 4 {
                    return Err(Error::Dimension(format!(
                        "hadamard4 is only defined for dim 4, got {dim}"
                    )));
                }
                hadamard4()
            }
            Gate::Fourier => {
                let norm = 1.0 / (dim as f64).sqrt();
                ComplexMatrix::from_fn(dim, |l, m| {
                    // Reduce l*m mod dim first so the angle stays small and exact.
                    let k = (l * m) % dim;
                    Complex64::from_polar(norm, 2.0 * PI * k as f64 / dim as f64)
                })?
            }
        };
        UnitaryMatrix::certify(m)
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Gate::Identity),
            "hadamard4" => Ok(Gate::Hadamard4),
            "fourier" => Ok(Gate::Fourier),
            other => Err(Error::UnknownGate(other.to_string())),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The four-dimensional Hadamard gate, entry by entry.
fn hadamard4() -> ComplexMatrix {
    let o = Complex64::new(0.5, 0.0);
    let i = Complex64::new(0.0, 0.5);
    #[rustfmt::skip]
    let entries = [
        o,  o,  o,  o,
        o,  i, -o, -i,
        o, -o,  o, -o,
        o, -i, -o,  i,
    ];
    ComplexMatrix::from_row_major(4, &entries).expect("4x4 literal")
}

/// Looks a gate up by name and builds it at `dim`.
pub fn named_gate(name: &str, dim: usize) -> Result<UnitaryMatrix> {
    name.parse::<Gate>()?.matrix(dim)
}

/// Haar-distributed unitary, deterministic in `(dim, seed)`.
///
/// QR of a matrix of i.i.d. standard complex Gaussians, with each column of
/// Q rotated by the phase of the matching diagonal entry of R so the
/// decomposition is unique and the measure is exactly Haar.
pub fn haar_random(dim: usize, seed: u64) -> Result<UnitaryMatrix> {
    if dim < 2 {
        return Err(Error::Dimension(format!(
            "haar sampling needs dim >= 2, got {dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let gauss = DMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = gauss.qr();
    let r = qr.r();
    let mut q = qr.q();
    for c in 0..dim {
        let d = r[(c, c)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for row in 0..dim {
            q[(row, c)] *= phase;
        }
    }
    UnitaryMatrix::new(ComplexMatrix::from_matrix(q)?, 1e-12)
}

/// Global-phase-invariant overlap `|tr(A^dagger B)| / N`, clamped to `[0, 1]`.
pub fn fidelity(a: &UnitaryMatrix, b: &UnitaryMatrix) -> Result<f64> {
    Ok(trace_overlap(a, b)?.min(1.0))
}

/// `|tr(A^dagger B)| / N` for arbitrary square matrices of equal size.
pub fn trace_overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    ensure_same_dim(a.dim(), b.dim())?;
    let n = a.dim();
    let tr: Complex64 = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .map(|(r, c)| a.get(r, c).conj() * b.get(r, c))
        .sum();
    Ok(tr.norm() / n as f64)
}

/// Unitary factor `W` of the polar decomposition `M = W P`.
pub fn nearest_unitary(m: &ComplexMatrix) -> Result<UnitaryMatrix> {
    let svd = m.as_matrix().clone().svd(true, true);
    let smallest = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if !(smallest >= SINGULAR_THRESHOLD) {
        return Err(Error::Projection(smallest));
    }
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::Projection(smallest)),
    };
    UnitaryMatrix::new(ComplexMatrix::from_matrix(u * v_t)?, 1e-12)
}
