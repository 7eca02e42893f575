//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices of `Complex64`. Tensor products
//! use the row-major (last factor fastest) convention everywhere: for
//! `dims = [d0, d1, ..., dk]` the basis index of `|i0 i1 ... ik⟩` is
//! `((i0 * d1 + i1) * d2 + i2) ...`. `nalgebra`'s `kronecker` follows the
//! same convention.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

/// Absolute tolerances used for validation throughout the crate.
pub mod tol {
    /// Maximum entrywise deviation from Hermiticity.
    pub const HERM: f64 = 1e-10;
    /// Maximum deviation of a trace from one.
    pub const TRACE: f64 = 1e-10;
    /// Most negative eigenvalue accepted as positive semidefinite.
    pub const PSD: f64 = 1e-9;
    /// Probability normalization.
    pub const PROB: f64 = 1e-10;
}

/// Largest matrix side that constructors are allowed to materialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenseLimit(pub usize);

impl DenseLimit {
    pub const DEFAULT_SIDE: usize = 4096;

    pub fn check(self, side: usize) -> Result<()> {
        if side > self.0 {
            Err(Error::DenseLimitExceeded { side, limit: self.0 })
        } else {
            Ok(())
        }
    }
}

impl Default for DenseLimit {
    fn default() -> Self {
        DenseLimit(Self::DEFAULT_SIDE)
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Returns `(M + M†) / 2` if `M` is square and Hermitian within [`tol::HERM`].
pub fn hermitize(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let deviation = hermiticity_deviation(m);
    if deviation > tol::HERM {
        return Err(Error::NotHermitian { deviation });
    }
    Ok((m + m.adjoint()).scale(0.5))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let h = hermitize(m)?;
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?[0])
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues within
/// [`tol::PSD`] below zero are clamped.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let h = hermitize(m)?;
    let n = h.nrows();
    let eig = h.symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol::PSD {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for j in 0..n {
        let s = eig.eigenvalues[j].max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    Ok(&scaled * v.adjoint())
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().sum()
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

fn check_layout(m: &ComplexMatrix, dims: &[usize]) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let prod: usize = dims.iter().product();
    if dims.is_empty() || dims.contains(&0) || prod != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {:?} do not multiply to matrix side {}",
            dims,
            m.nrows()
        )));
    }
    Ok(())
}

/// Transposes the indices of every subsystem listed in `subsystems`.
///
/// Only entries move, so applying the same transpose twice reproduces the
/// input bit for bit.
pub fn partial_transpose_dims(m: &ComplexMatrix, dims: &[usize], subsystems: &[usize]) -> Result<ComplexMatrix> {
    check_layout(m, dims)?;
    if let Some(&index) = subsystems.iter().find(|&&k| k >= dims.len()) {
        return Err(Error::SubsystemOutOfRange { index, count: dims.len() });
    }
    let n = m.nrows();
    let st = strides(dims);
    // t[i] is the part of index i carried by the transposed subsystems
    let mut sel: Vec<usize> = subsystems.to_vec();
    sel.sort_unstable();
    sel.dedup();
    let t: Vec<usize> = (0..n).map(|i| sel.iter().map(|&k| (i / st[k]) % dims[k] * st[k]).sum()).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            let r2 = r - t[r] + t[c];
            let c2 = c - t[c] + t[r];
            out[(r2, c2)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Partial transpose of one tensor factor of `rho`.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: usize) -> Result<ComplexMatrix> {
    partial_transpose_dims(&rho.matrix, &rho.dims, &[subsystem])
}

/// Reorders tensor factors: factor `j` of the result is factor `perm[j]` of
/// the input.
pub fn permute_subsystems(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    check_layout(m, dims)?;
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len() || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation of {} factors", dims.len())));
    }
    let n = m.nrows();
    let old_st = strides(dims);
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let new_st = strides(&new_dims);
    let map: Vec<usize> =
        (0..n).map(|i| perm.iter().enumerate().map(|(j, &p)| (i / old_st[p]) % dims[p] * new_st[j]).sum()).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            out[(map[r], map[c])] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Traces out one tensor factor.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], subsystem: usize) -> Result<ComplexMatrix> {
    check_layout(m, dims)?;
    if subsystem >= dims.len() {
        return Err(Error::SubsystemOutOfRange { index: subsystem, count: dims.len() });
    }
    let left: usize = dims[..subsystem].iter().product();
    let mid = dims[subsystem];
    let right: usize = dims[subsystem + 1..].iter().product();
    let side = left * right;
    let mut out = ComplexMatrix::zeros(side, side);
    for l in 0..left {
        for r in 0..right {
            for l2 in 0..left {
                for r2 in 0..right {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..mid {
                        acc += m[((l * mid + k) * right + r, (l2 * mid + k) * right + r2)];
                    }
                    out[(l * right + r, l2 * right + r2)] = acc;
                }
            }
        }
    }
    Ok(out)
}

/// A Hermitian, positive semidefinite, unit-trace matrix together with the
/// dimensions of its tensor factors.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityMatrix {
    /// Validates and stores `matrix`, symmetrized to exact Hermiticity.
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        check_layout(&matrix, &dims)?;
        let matrix = hermitize(&matrix)?;
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > tol::TRACE {
            return Err(Error::NotNormalized { trace });
        }
        let min = min_eigenvalue(&matrix)?;
        if min < -tol::PSD {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(DensityMatrix { matrix, dims })
    }

    /// Projector onto a state vector; the vector is normalized first.
    pub fn pure(amplitudes: &[C64], dims: Vec<usize>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidParameter("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|a| a / norm));
        DensityMatrix::new(&v * v.adjoint(), dims)
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        let matrix = ComplexMatrix::identity(n, n).scale(1.0 / n as f64);
        DensityMatrix { matrix, dims }
    }

    /// Tensor product `a ⊗ b`; factor dimensions are concatenated.
    pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Self {
        let mut dims = a.dims.clone();
        dims.extend_from_slice(&b.dims);
        DensityMatrix { matrix: a.matrix.kronecker(&b.matrix), dims }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Outcome of a positive-partial-transpose test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PptTest {
    pub ppt: bool,
    /// Smallest eigenvalue of the partial transpose.
    pub min_eigenvalue: f64,
}

/// PPT test across the cut that transposes every subsystem in `cut` jointly.
pub fn is_ppt(rho: &DensityMatrix, cut: &[usize]) -> Result<PptTest> {
    let pt = partial_transpose_dims(&rho.matrix, &rho.dims, cut)?;
    let min = min_eigenvalue(&pt)?;
    Ok(PptTest { ppt: min >= -tol::PSD, min_eigenvalue: min })
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidProbabilities("empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidProbabilities(format!("weight {w} is negative or NaN")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol::PROB {
            return Err(Error::InvalidProbabilities(format!("weights sum to {sum}")));
        }
        Ok(ProbabilityVector(weights))
    }

    /// Normalizes nonnegative weights. Negative rounding noise down to
    /// `-tol::PROB` is clamped to zero.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= -tol::PROB)) {
            return Err(Error::InvalidProbabilities(format!("weight {w} is negative or NaN")));
        }
        let clamped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::InvalidProbabilities(format!("weights sum to {sum}")));
        }
        Ok(ProbabilityVector(clamped.into_iter().map(|w| w / sum).collect()))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &ProbabilityVector) -> f64 {
    let h: f64 = p.0.iter().filter(|&&w| w > 0.0).map(|&w| -w * w.log2()).sum();
    // a point mass sums to -0.0; report it as 0
    h + 0.0
}

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("binary entropy argument {x} outside [0, 1]")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    let ln2 = std::f64::consts::LN_2;
    Ok(-(x * x.ln() + (1.0 - x) * (-x).ln_1p()) / ln2)
}
