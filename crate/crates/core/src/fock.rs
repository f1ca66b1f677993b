//! Truncated Fock-space linear algebra.
//!
//! States and operators live on the photon-number basis `|0>, .., |n_max>`.
//! The probe-atom operators are the Jaynes-Cummings branch amplitudes for an
//! atom entering in its upper level:
//!
//! ```text
//! A = cos(theta * sqrt(n + 1))                      (atom stays in |e>)
//! D = -i a^dag sin(theta * sqrt(n + 1)) / sqrt(n + 1)  (atom leaves in |g>)
//! ```

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::steady_state::PhotonStatistics;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Highest retained photon number. Matrices have `n_max + 1` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::Config(format!(
                "Fock truncation n_max must be >= 1, got {n_max}"
            )));
        }
        Ok(FockDim(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    /// Matrix dimension, `n_max + 1`.
    pub fn size(self) -> usize {
        self.0 + 1
    }
}

impl fmt::Display for FockDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n_max={}", self.0)
    }
}

fn check_dims(what: &str, a: FockDim, b: FockDim) -> Result<()> {
    if a != b {
        return Err(Error::Usage(format!(
            "{what}: dimension mismatch ({a} vs {b})"
        )));
    }
    Ok(())
}

/// Dense operator on the truncated Fock space.
///
/// The nonzero pattern is cached at construction so that products against
/// the band-structured Jaynes-Cummings operators stay `O(nnz * size)`.
#[derive(Debug, Clone)]
pub struct FockOperator {
    dim: FockDim,
    matrix: DMatrix<Complex64>,
    nonzeros: Vec<(usize, usize, Complex64)>,
}

impl FockOperator {
    pub fn from_matrix(dim: FockDim, matrix: DMatrix<Complex64>) -> Result<Self> {
        let n = dim.size();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Usage(format!(
                "operator matrix is {}x{}, expected {n}x{n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let mut nonzeros = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = matrix[(i, j)];
                if v != ZERO {
                    nonzeros.push((i, j, v));
                }
            }
        }
        Ok(FockOperator {
            dim,
            matrix,
            nonzeros,
        })
    }

    pub fn identity(dim: FockDim) -> Self {
        let n = dim.size();
        FockOperator {
            dim,
            matrix: DMatrix::identity(n, n),
            nonzeros: (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))).collect(),
        }
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        FockOperator {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
            nonzeros: self
                .nonzeros
                .iter()
                .map(|&(i, j, v)| (j, i, v.conj()))
                .collect(),
        }
    }

    /// `self * other`, dense.
    pub fn compose(&self, other: &FockOperator) -> Result<FockOperator> {
        check_dims("compose", self.dim, other.dim)?;
        FockOperator::from_matrix(self.dim, &self.matrix * &other.matrix)
    }

    /// `self * m` exploiting the sparsity of `self`.
    fn left_mul(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = m.nrows();
        let mut out = DMatrix::from_element(n, m.ncols(), ZERO);
        for c in 0..m.ncols() {
            let src = m.column(c);
            let mut dst = out.column_mut(c);
            for &(i, k, v) in &self.nonzeros {
                dst[i] += v * src[k];
            }
        }
        out
    }

    /// `m * self^dag` exploiting the sparsity of `self`.
    fn right_mul_adjoint(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::from_element(m.nrows(), self.dim.size(), ZERO);
        // (m R^dag)[:, j] = sum_k m[:, k] conj(R[j, k])
        for &(j, k, v) in &self.nonzeros {
            let w = v.conj();
            let src = m.column(k);
            let mut dst = out.column_mut(j);
            dst.axpy(w, &src, Complex64::new(1.0, 0.0));
        }
        out
    }
}

/// Complex matrix on the truncated Fock basis with its trace cached.
///
/// Physical states are Hermitian, unit trace and positive semidefinite, but
/// intermediate products (cross terms such as `A rho D^dag`) are stored in
/// the same type without those guarantees; see [`DensityMatrix::validate_physical`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: FockDim,
    entries: DMatrix<Complex64>,
    trace: Complex64,
}

impl DensityMatrix {
    pub fn from_matrix(dim: FockDim, entries: DMatrix<Complex64>) -> Result<Self> {
        let n = dim.size();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::Usage(format!(
                "density matrix is {}x{}, expected {n}x{n}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self::from_parts(dim, entries))
    }

    fn from_parts(dim: FockDim, entries: DMatrix<Complex64>) -> Self {
        let trace = entries.trace();
        DensityMatrix {
            dim,
            entries,
            trace,
        }
    }

    /// Diagonal matrix with the given populations; no normalization check.
    pub fn from_diagonal(dim: FockDim, diag: &[f64]) -> Result<Self> {
        if diag.len() != dim.size() {
            return Err(Error::Usage(format!(
                "diagonal has {} entries, expected {}",
                diag.len(),
                dim.size()
            )));
        }
        let mut m = DMatrix::from_element(dim.size(), dim.size(), ZERO);
        for (i, &p) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(p, 0.0);
        }
        Ok(Self::from_parts(dim, m))
    }

    /// Projector onto the Fock state `|n>`.
    pub fn fock_state(dim: FockDim, n: usize) -> Result<Self> {
        if n > dim.n_max() {
            return Err(Error::Usage(format!("Fock state |{n}> outside {dim}")));
        }
        let mut diag = vec![0.0; dim.size()];
        diag[n] = 1.0;
        Self::from_diagonal(dim, &diag)
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// Real part of the cached trace.
    pub fn trace(&self) -> f64 {
        self.trace.re
    }

    pub fn trace_complex(&self) -> Complex64 {
        self.trace
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim.size()).map(|i| self.entries[(i, i)].re).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.dim, self.entries.adjoint())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_parts(self.dim, self.entries.map(|z| z * factor))
    }

    pub fn add(&self, other: &DensityMatrix) -> Result<Self> {
        check_dims("add", self.dim, other.dim)?;
        Ok(Self::from_parts(self.dim, &self.entries + &other.entries))
    }

    pub fn sub(&self, other: &DensityMatrix) -> Result<Self> {
        check_dims("sub", self.dim, other.dim)?;
        Ok(Self::from_parts(self.dim, &self.entries - &other.entries))
    }

    /// `max |rho_mn - conj(rho_nm)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim.size();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.entries[(i, j)] - self.entries[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Largest entrywise modulus away from the main diagonal.
    pub fn max_offdiagonal(&self) -> f64 {
        let n = self.dim.size();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    worst = worst.max(self.entries[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part `(rho + rho^dag) / 2`, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.entries + self.entries.adjoint()).map(|z| z * 0.5);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Hermitian within 1e-12, real trace within 1e-12 and no eigenvalue
    /// below -1e-9.
    pub fn validate_physical(&self) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > 1e-12 {
            return Err(Error::Validation(format!(
                "density matrix not Hermitian: max deviation {herm:e}"
            )));
        }
        if self.trace.im.abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "density matrix trace has imaginary part {:e}",
                self.trace.im
            )));
        }
        let min = self.eigenvalues().first().copied().unwrap_or(0.0);
        if min < -1e-9 {
            return Err(Error::Validation(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    /// Replace with `(rho + rho^dag) / 2`.
    pub fn symmetrized(&self) -> Self {
        let h = (&self.entries + self.entries.adjoint()).map(|z| z * 0.5);
        Self::from_parts(self.dim, h)
    }
}

/// The pair of branch operators produced by one probe atom of Rabi
/// parameter `theta = g t`.
#[derive(Debug, Clone)]
pub struct MeasurementOps {
    pub theta: f64,
    pub op_a: FockOperator,
    pub op_d: FockOperator,
}

impl MeasurementOps {
    pub fn dim(&self) -> FockDim {
        self.op_a.dim()
    }

    /// `A^dag A + D^dag D`, which is the identity except for the top
    /// truncation row.
    pub fn completeness(&self) -> DMatrix<Complex64> {
        let a = self.op_a.matrix();
        let d = self.op_d.matrix();
        a.adjoint() * a + d.adjoint() * d
    }

    /// `max |(A^dag A + D^dag D - I)_ij|` over rows and columns `0..n_max`.
    pub fn completeness_defect(&self) -> f64 {
        let c = self.completeness();
        let n = self.dim().n_max();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((c[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

pub fn make_measurement_ops(theta: f64, dim: FockDim) -> Result<MeasurementOps> {
    if !(theta.is_finite() && theta >= 0.0) {
        return Err(Error::Config(format!(
            "Rabi parameter must be finite and >= 0, got {theta}"
        )));
    }
    let n = dim.size();
    let mut a = DMatrix::from_element(n, n, ZERO);
    let mut d = DMatrix::from_element(n, n, ZERO);
    for k in 0..n {
        let angle = theta * ((k + 1) as f64).sqrt();
        a[(k, k)] = Complex64::new(angle.cos(), 0.0);
        if k + 1 < n {
            d[(k + 1, k)] = Complex64::new(0.0, -angle.sin());
        }
    }
    Ok(MeasurementOps {
        theta,
        op_a: FockOperator::from_matrix(dim, a)?,
        op_d: FockOperator::from_matrix(dim, d)?,
    })
}

/// `left * rho * right^dag`, unnormalized.
pub fn sandwich(
    left: &FockOperator,
    rho: &DensityMatrix,
    right: &FockOperator,
) -> Result<DensityMatrix> {
    check_dims("sandwich", left.dim(), rho.dim())?;
    check_dims("sandwich", right.dim(), rho.dim())?;
    let t = left.left_mul(rho.entries());
    Ok(DensityMatrix::from_parts(
        rho.dim(),
        right.right_mul_adjoint(&t),
    ))
}

/// `Tr(left * rho * right^dag)` without forming the product.
pub fn sandwich_trace(
    left: &FockOperator,
    rho: &DensityMatrix,
    right: &FockOperator,
) -> Result<Complex64> {
    check_dims("sandwich_trace", left.dim(), rho.dim())?;
    check_dims("sandwich_trace", right.dim(), rho.dim())?;
    let n = rho.dim().size();
    let mut right_rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); n];
    for &(i, j, v) in &right.nonzeros {
        right_rows[i].push((j, v.conj()));
    }
    let m = rho.entries();
    let mut acc = ZERO;
    for &(i, k, l) in &left.nonzeros {
        for &(j, r) in &right_rows[i] {
            acc += l * m[(k, j)] * r;
        }
    }
    Ok(acc)
}

/// Embed a photon-number distribution as a diagonal density matrix.
pub fn diag_to_density(p: &PhotonStatistics) -> Result<DensityMatrix> {
    let total: f64 = p.probabilities().iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "photon distribution sums to {total}, expected 1"
        )));
    }
    DensityMatrix::from_diagonal(p.dim(), p.probabilities())
}
