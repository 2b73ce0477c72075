//! Dense complex linear algebra for few-qubit density-matrix simulation.
//!
//! Matrices are small (at most a handful of qubits), so everything is plain
//! row-major `Vec<Complex64>` storage with straightforward loops. The only
//! non-trivial routine, the Hermitian eigendecomposition, is delegated to
//! `nalgebra`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QdcError, Result};

/// Maximum entrywise deviation from Hermiticity accepted for density matrices and generators.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Maximum deviation of a density matrix trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue still considered positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A dense complex matrix stored in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(QdcError::Dimension(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(QdcError::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QdcError::Contract("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(
            rows,
            cols,
            data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major view of the entries.
    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.cols + j] = value;
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(QdcError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        matmul_into(self, other, &mut out);
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols))
            .map(|i| self.data[i * self.cols + i])
            .sum()
    }

    pub fn scale(&self, factor: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(QdcError::Dimension(format!(
                "shape {}x{} does not match {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest entrywise modulus of `self - other`; infinite when the shapes differ.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise `|m[i][j] - conj(m[j][i])|`; infinite for non-square matrices.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Eigenvalues (ascending) and eigenvectors (as columns) of a Hermitian matrix.
    ///
    /// Only the Hermitian part of the input is used; callers check Hermiticity first.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        if !self.is_square() {
            return Err(QdcError::Dimension(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let m = DMatrix::from_row_slice(n, n, &self.data);
        let eig = SymmetricEigen::new(m);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = ComplexMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            for row in 0..n {
                vectors.data[row * n + col] = eig.eigenvectors[(row, k)];
            }
        }
        Ok((values, vectors))
    }
}

/// `out = a · b` without allocation; shapes must already agree.
#[inline]
pub(crate) fn matmul_into(a: &ComplexMatrix, b: &ComplexMatrix, out: &mut ComplexMatrix) {
    debug_assert_eq!(a.cols, b.rows);
    debug_assert_eq!((out.rows, out.cols), (a.rows, b.cols));
    let (n, m, p) = (a.rows, a.cols, b.cols);
    out.data.iter_mut().for_each(|z| *z = ZERO);
    for i in 0..n {
        let out_row = &mut out.data[i * p..(i + 1) * p];
        for k in 0..m {
            let aik = a.data[i * m + k];
            if aik == ZERO {
                continue;
            }
            let b_row = &b.data[k * p..(k + 1) * p];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
}

/// `out = a · b†` without allocation.
#[inline]
pub(crate) fn matmul_adjoint_into(a: &ComplexMatrix, b: &ComplexMatrix, out: &mut ComplexMatrix) {
    debug_assert_eq!(a.cols, b.cols);
    let (n, m, p) = (a.rows, a.cols, b.rows);
    for i in 0..n {
        let a_row = &a.data[i * m..(i + 1) * m];
        for j in 0..p {
            let b_row = &b.data[j * m..(j + 1) * m];
            out.data[i * p + j] = a_row
                .iter()
                .zip(b_row)
                .map(|(&x, &y)| x * y.conj())
                .sum();
        }
    }
}

/// Kronecker product: `result[(i·b.rows + k), (j·b.cols + l)] = a[i][j] · b[k][l]`.
///
/// Each entry is a single product, so the result is exactly associative.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    kron_into(a, b, &mut out);
    out
}

#[inline]
pub(crate) fn kron_into(a: &ComplexMatrix, b: &ComplexMatrix, out: &mut ComplexMatrix) {
    let cols = a.cols * b.cols;
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a.data[i * a.cols + j];
            for k in 0..b.rows {
                let row = i * b.rows + k;
                for l in 0..b.cols {
                    out.data[row * cols + j * b.cols + l] = aij * b.data[k * b.cols + l];
                }
            }
        }
    }
}

/// Kronecker product of a sequence of factors, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| kron(&acc, f))
}

/// Reduces a square operator on `subsystem_dims` to the subsystem `keep`.
pub fn partial_trace_matrix(
    m: &ComplexMatrix,
    subsystem_dims: &[usize],
    keep: usize,
) -> Result<ComplexMatrix> {
    check_subsystems(m, subsystem_dims, keep)?;
    let mut out = ComplexMatrix::zeros(subsystem_dims[keep], subsystem_dims[keep]);
    partial_trace_into(m, subsystem_dims, keep, &mut out);
    Ok(out)
}

fn check_subsystems(m: &ComplexMatrix, subsystem_dims: &[usize], keep: usize) -> Result<()> {
    if !m.is_square() {
        return Err(QdcError::Dimension(format!(
            "partial trace needs a square matrix, got {}x{}",
            m.rows, m.cols
        )));
    }
    if subsystem_dims.is_empty() || subsystem_dims.contains(&0) {
        return Err(QdcError::Config(format!(
            "invalid subsystem dimensions {subsystem_dims:?}"
        )));
    }
    let total: usize = subsystem_dims.iter().product();
    if total != m.rows {
        return Err(QdcError::Config(format!(
            "subsystem dimensions {subsystem_dims:?} multiply to {total}, matrix is {}x{}",
            m.rows, m.cols
        )));
    }
    if keep >= subsystem_dims.len() {
        return Err(QdcError::Config(format!(
            "kept subsystem index {keep} out of range for {} subsystems",
            subsystem_dims.len()
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn partial_trace_into(
    m: &ComplexMatrix,
    subsystem_dims: &[usize],
    keep: usize,
    out: &mut ComplexMatrix,
) {
    let dk = subsystem_dims[keep];
    let left: usize = subsystem_dims[..keep].iter().product();
    let right: usize = subsystem_dims[keep + 1..].iter().product();
    let n = m.rows;
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for l in 0..left {
                for r in 0..right {
                    let row = (l * dk + a) * right + r;
                    let col = (l * dk + b) * right + r;
                    acc += m.data[row * n + col];
                }
            }
            out.data[a * dk + b] = acc;
        }
    }
}

/// A quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix after checking every state invariant.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self { matrix };
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix without the eigenvalue check; invariants are only asserted in debug builds.
    pub fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        let rho = Self { matrix };
        debug_assert!(rho.validate().is_ok(), "{:?}", rho.validate());
        rho
    }

    /// Wraps a matrix with no checks at all; the caller validates afterwards.
    pub(crate) fn from_matrix_unchecked_lenient(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    /// The maximally mixed state `I/dim`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(Complex64::new(1.0 / dim as f64, 0.0)),
        }
    }

    /// Checks dimension, Hermiticity, trace and positivity.
    pub fn validate(&self) -> Result<()> {
        let m = &self.matrix;
        if !m.is_square() || !m.rows.is_power_of_two() {
            return Err(QdcError::Dimension(format!(
                "density matrix must be square with power-of-two dimension, got {}x{}",
                m.rows, m.cols
            )));
        }
        let defect = m.hermiticity_defect();
        if defect > HERMITIAN_TOL {
            return Err(QdcError::Contract(format!(
                "density matrix not Hermitian (defect {defect:e})"
            )));
        }
        let tr = m.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(QdcError::Contract(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(QdcError::Contract(format!(
                "density matrix not positive semidefinite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim() == 2 {
            let (lo, _) = eigenvalues_2x2(&self.matrix);
            return lo;
        }
        self.matrix
            .hermitian_eigen()
            .map(|(v, _)| v[0])
            .unwrap_or(f64::NAN)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.matrix.get(i, j) * self.matrix.get(j, i)).re;
            }
        }
        acc
    }
}

/// Reduced state of subsystem `keep` of a composite state.
pub fn partial_trace(
    rho: &DensityMatrix,
    subsystem_dims: &[usize],
    keep: usize,
) -> Result<DensityMatrix> {
    let reduced = partial_trace_matrix(rho.matrix(), subsystem_dims, keep)?;
    Ok(DensityMatrix::from_matrix_unchecked(reduced))
}

/// `exp(-i·h·t)` for Hermitian `h`, via `V · diag(e^{-iλt}) · V†`.
pub fn herm_expm(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !h.is_square() {
        return Err(QdcError::Dimension(format!(
            "generator must be square, got {}x{}",
            h.rows, h.cols
        )));
    }
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(QdcError::Contract(format!(
            "generator is not Hermitian (defect {defect:e})"
        )));
    }
    if !t.is_finite() {
        return Err(QdcError::Contract(format!("evolution time {t} is not finite")));
    }
    let (values, vectors) = h.hermitian_eigen()?;
    let n = h.rows;
    let mut scaled = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lambda * t);
        for row in 0..n {
            scaled.data[row * n + k] *= phase;
        }
    }
    let mut out = ComplexMatrix::zeros(n, n);
    matmul_adjoint_into(&scaled, &vectors, &mut out);
    Ok(out)
}

/// `Re Tr(ρ · obs)` for a Hermitian observable.
pub fn expect(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<f64> {
    let m = rho.matrix();
    if obs.rows != m.rows || obs.cols != m.cols {
        return Err(QdcError::Dimension(format!(
            "observable is {}x{}, state is {}x{}",
            obs.rows, obs.cols, m.rows, m.cols
        )));
    }
    let defect = obs.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(QdcError::Contract(format!(
            "observable is not Hermitian (defect {defect:e})"
        )));
    }
    let n = m.rows;
    let mut tr = ZERO;
    for i in 0..n {
        for j in 0..n {
            tr += m.data[i * n + j] * obs.data[j * n + i];
        }
    }
    if tr.im.abs() > TRACE_TOL {
        return Err(QdcError::Contract(format!(
            "expectation value has imaginary part {:e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

/// Trace distance `½‖a − b‖₁` between two states of equal dimension.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    let diff = a.matrix().sub(b.matrix())?;
    if diff.rows == 2 {
        let (lo, hi) = eigenvalues_2x2(&diff);
        return Ok(0.5 * (lo.abs() + hi.abs()));
    }
    let (values, _) = diff.hermitian_eigen()?;
    Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
}

/// Trace distance of two 2×2 Hermitian matrices, closed form.
#[inline]
pub(crate) fn trace_distance_2x2(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let d00 = a.data[0].re - b.data[0].re;
    let d11 = a.data[3].re - b.data[3].re;
    let d01 = a.data[1] - b.data[1];
    let mean = 0.5 * (d00 + d11);
    let half_gap = (0.25 * (d00 - d11).powi(2) + d01.norm_sqr()).sqrt();
    0.5 * ((mean - half_gap).abs() + (mean + half_gap).abs())
}

/// Eigenvalues (low, high) of the Hermitian part of a 2×2 matrix.
fn eigenvalues_2x2(m: &ComplexMatrix) -> (f64, f64) {
    let a = m.data[0].re;
    let d = m.data[3].re;
    let b = 0.5 * (m.data[1] + m.data[2].conj());
    let mean = 0.5 * (a + d);
    let half_gap = (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
    (mean - half_gap, mean + half_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_wrong_length_and_non_finite() {
        assert!(matches!(
            ComplexMatrix::new(2, 2, vec![ONE; 3]),
            Err(QdcError::Dimension(_))
        ));
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_of_sigma_z() {
        let z = basis::sigma_z();
        let expected = ComplexMatrix::from_diagonal(&[ONE, -ONE, -ONE, ONE]);
        assert_eq!(kron(&z, &z), expected);
    }

    #[test]
    fn kron_plus_excited_by_hand() {
        // |+><+| ⊗ |e><e|: only entries with both ancilla indices = e survive, each 1/2.
        let plus = ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let e = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let k = kron(&plus, &e);
        assert_eq!((k.rows(), k.cols()), (4, 4));
        assert_abs_diff_eq!(k.trace().re, 1.0);
        for (i, j) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            assert_eq!(k.get(i, j), c(0.5, 0.0));
        }
        let nonzero = k.as_slice().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn kron_rectangular_shape() {
        let a = ComplexMatrix::from_real(1, 2, &[1.0, 2.0]).unwrap();
        let b = ComplexMatrix::from_real(3, 1, &[1.0, 0.0, -1.0]).unwrap();
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (3, 2));
        assert_eq!(k.get(2, 1), c(-2.0, 0.0));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = ComplexMatrix::from_real(2, 2, &[0.7, 0.1, 0.1, 0.3]).unwrap();
        let b = ComplexMatrix::from_real(2, 2, &[0.4, 0.0, 0.0, 0.6]).unwrap();
        let ab = kron(&a, &b);
        let left = partial_trace_matrix(&ab, &[2, 2], 0).unwrap();
        let right = partial_trace_matrix(&ab, &[2, 2], 1).unwrap();
        assert!(left.max_abs_diff(&a) < 1e-15);
        assert!(right.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn partial_trace_scales_by_trace_of_traced_factor() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = ComplexMatrix::from_real(2, 2, &[2.0, 0.0, 0.0, 1.5]).unwrap();
        let reduced = partial_trace_matrix(&kron(&a, &b), &[2, 2], 0).unwrap();
        assert!(reduced.max_abs_diff(&a.scale(c(3.5, 0.0))) < 1e-14);
    }

    #[test]
    fn partial_trace_of_maximally_mixed() {
        let rho = DensityMatrix::maximally_mixed(4);
        let reduced = partial_trace(&rho, &[2, 2], 1).unwrap();
        assert!(reduced
            .matrix()
            .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
            < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        // (|00> + |11>)/√2
        let mut m = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m.set(i, j, c(0.5, 0.0));
        }
        let bell = DensityMatrix::new(m).unwrap();
        for keep in 0..2 {
            let reduced = partial_trace(&bell, &[2, 2], keep).unwrap();
            assert!(
                reduced
                    .matrix()
                    .max_abs_diff(DensityMatrix::maximally_mixed(2).matrix())
                    < 1e-15
            );
        }
    }

    #[test]
    fn partial_trace_middle_of_three() {
        let a = basis::excited();
        let b = ComplexMatrix::from_real(2, 2, &[0.25, 0.1, 0.1, 0.75]).unwrap();
        let c3 = basis::ground();
        let abc = kron_all([&a, &b, &c3]);
        let reduced = partial_trace_matrix(&abc, &[2, 2, 2], 1).unwrap();
        assert!(reduced.max_abs_diff(&b) < 1e-15);
    }

    #[test]
    fn partial_trace_dimension_errors() {
        let m = ComplexMatrix::identity(4);
        assert!(matches!(
            partial_trace_matrix(&m, &[2, 3], 0),
            Err(QdcError::Config(_))
        ));
        assert!(matches!(
            partial_trace_matrix(&m, &[2, 2], 2),
            Err(QdcError::Config(_))
        ));
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = herm_expm(&ComplexMatrix::zeros(4, 4), 1.7).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn expm_of_sigma_z_at_pi() {
        let u = herm_expm(&basis::sigma_z(), PI).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(2).scale(c(-1.0, 0.0))) < 1e-14);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        assert!(matches!(
            herm_expm(&basis::sigma_plus(), 1.0),
            Err(QdcError::Contract(_))
        ));
    }

    #[test]
    fn expm_matches_closed_form_partial_swap() {
        // Exchange generator g(σ+σ- + σ-σ+) on two qubits, basis {ee, eg, ge, gg}.
        let g = 0.01;
        let tau = 3.0;
        let sp = basis::sigma_plus();
        let sm = basis::sigma_minus();
        let h = kron(&sp, &sm)
            .add(&kron(&sm, &sp))
            .unwrap()
            .scale(c(g, 0.0));
        let u = herm_expm(&h, tau).unwrap();

        let (cs, sn) = ((g * tau).cos(), (g * tau).sin());
        let mut expected = ComplexMatrix::zeros(4, 4);
        expected.set(0, 0, ONE);
        expected.set(3, 3, ONE);
        expected.set(1, 1, c(cs, 0.0));
        expected.set(2, 2, c(cs, 0.0));
        expected.set(1, 2, c(0.0, -sn));
        expected.set(2, 1, c(0.0, -sn));
        assert!(u.max_abs_diff(&expected) < 1e-14);

        let uu = u.matmul(&u.adjoint()).unwrap();
        assert!(uu.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let e = DensityMatrix::new(basis::excited()).unwrap();
        assert_abs_diff_eq!(expect(&e, &basis::sigma_z()).unwrap(), 1.0);
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(expect(&mixed, &basis::sigma_z()).unwrap(), 0.0);
        assert!(matches!(
            expect(&mixed, &ComplexMatrix::identity(4)),
            Err(QdcError::Dimension(_))
        ));
    }

    #[test]
    fn density_validation_catches_each_invariant() {
        let not_herm = ComplexMatrix::new(2, 2, vec![c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)])
            .unwrap();
        assert!(DensityMatrix::new(not_herm).is_err());
        let bad_trace = ComplexMatrix::from_real(2, 2, &[0.6, 0.0, 0.0, 0.6]).unwrap();
        assert!(DensityMatrix::new(bad_trace).is_err());
        let not_psd = ComplexMatrix::from_real(2, 2, &[1.2, 0.0, 0.0, -0.2]).unwrap();
        assert!(DensityMatrix::new(not_psd).is_err());
        let odd = ComplexMatrix::from_real(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
            .unwrap();
        assert!(matches!(DensityMatrix::new(odd), Err(QdcError::Dimension(_))));
    }

    #[test]
    fn trace_distance_orthogonal_and_identical() {
        let e = DensityMatrix::new(basis::excited()).unwrap();
        let g = DensityMatrix::new(basis::ground()).unwrap();
        assert_abs_diff_eq!(trace_distance(&e, &g).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_distance(&e, &e).unwrap(), 0.0);
        assert_abs_diff_eq!(
            trace_distance_2x2(e.matrix(), g.matrix()),
            1.0,
            epsilon = 1e-15
        );
    }
}
