//! Operators and states on the truncated Fock space {|0⟩, …, |D−1⟩}.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::C64;

/// Dense operator on the truncated Fock space. Row and column indices are
/// occupation numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    matrix: CMatrix,
}

fn check_dim(dim: usize, min: usize) -> Result<()> {
    if dim < min {
        Err(Error::InvalidDimension { dim, min })
    } else {
        Ok(())
    }
}

impl FockOperator {
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        check_dim(matrix.dim(), 1)?;
        Ok(FockOperator { matrix })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        Ok(FockOperator { matrix: CMatrix::identity(dim) })
    }

    /// Annihilation operator `a`: entry (n−1, n) = √n.
    pub fn annihilation(dim: usize) -> Result<Self> {
        check_dim(dim, 2)?;
        let mut m = CMatrix::zeros(dim);
        for n in 1..dim {
            m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
        }
        Ok(FockOperator { matrix: m })
    }

    /// Creation operator `a†`.
    pub fn creation(dim: usize) -> Result<Self> {
        Ok(Self::annihilation(dim)?.adjoint())
    }

    /// Number operator `a†a` = diag(0, 1, …, D−1).
    pub fn number(dim: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        Ok(Self::diagonal_fn(dim, |n| n as f64))
    }

    /// Kerr operator `(a†a)²` = diag(n²).
    pub fn kerr(dim: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        Ok(Self::diagonal_fn(dim, |n| (n * n) as f64))
    }

    /// Parity `exp(iπ a†a)` = diag((−1)ⁿ).
    pub fn parity(dim: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        Ok(Self::diagonal_fn(dim, |n| if n % 2 == 0 { 1.0 } else { -1.0 }))
    }

    /// Displacement `exp(α a† − α* a)` on the truncated space.
    ///
    /// Computed as a matrix exponential of the truncated generator, so it is
    /// unitary but its action leaks near the truncation edge; only states well
    /// below level `dim` are displaced faithfully.
    pub fn displacement(alpha: C64, dim: usize) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(Error::invalid(format!("displacement amplitude must be finite, got {alpha}")));
        }
        let a = Self::annihilation(dim)?;
        let ad = a.adjoint();
        let generator = &ad.matrix.scale(alpha) - &a.matrix.scale(alpha.conj());
        Ok(FockOperator { matrix: linalg::expm(&generator) })
    }

    fn diagonal_fn(dim: usize, f: impl Fn(usize) -> f64) -> Self {
        let d: Vec<C64> = (0..dim).map(|n| C64::new(f(n), 0.0)).collect();
        FockOperator { matrix: CMatrix::from_diagonal(&d) }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn adjoint(&self) -> Self {
        FockOperator { matrix: self.matrix.adjoint() }
    }

    pub fn compose(&self, rhs: &FockOperator) -> Result<Self> {
        same_dim(self.dim(), rhs.dim())?;
        Ok(FockOperator { matrix: self.matrix.matmul(&rhs.matrix) })
    }

    pub fn commutator(&self, rhs: &FockOperator) -> Result<Self> {
        same_dim(self.dim(), rhs.dim())?;
        Ok(FockOperator { matrix: self.matrix.commutator(&rhs.matrix) })
    }

    pub fn scale(&self, s: C64) -> Self {
        FockOperator { matrix: self.matrix.scale(s) }
    }

    pub fn plus(&self, rhs: &FockOperator) -> Result<Self> {
        same_dim(self.dim(), rhs.dim())?;
        Ok(FockOperator { matrix: &self.matrix + &rhs.matrix })
    }

    pub fn apply(&self, psi: &PureState) -> Result<PureState> {
        same_dim(self.dim(), psi.dim())?;
        Ok(PureState { amplitudes: self.matrix.mul_vec(&psi.amplitudes) })
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }
}

fn same_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Anything an operator expectation value can be taken in.
pub trait FockState {
    fn dim(&self) -> usize;
    /// Expectation without a dimension check; callers go through [`expectation`].
    fn expect_unchecked(&self, op: &FockOperator) -> C64;
}

/// `tr(op ρ)` or `⟨ψ|op|ψ⟩`. The result is complex even for Hermitian `op`;
/// callers check that the imaginary part is negligible.
pub fn expectation<S: FockState + ?Sized>(op: &FockOperator, state: &S) -> Result<C64> {
    same_dim(op.dim(), state.dim())?;
    Ok(state.expect_unchecked(op))
}

/// Normalized (or normalizable) state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        check_dim(amplitudes.len(), 1)?;
        Ok(PureState { amplitudes })
    }

    pub fn fock(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        if k >= dim {
            return Err(Error::invalid(format!("Fock level {k} outside truncation {dim}")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[k] = C64::new(1.0, 0.0);
        Ok(PureState { amplitudes })
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(dim, 0)
    }

    /// Coherent state from its exact amplitude series e^{−|α|²/2} αⁿ/√n!,
    /// renormalized on the truncated space.
    pub fn coherent(alpha: C64, dim: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        let mut amplitudes = Vec::with_capacity(dim);
        let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
        for n in 0..dim {
            if n > 0 {
                c = c * alpha / (n as f64).sqrt();
            }
            amplitudes.push(c);
        }
        let mut psi = PureState { amplitudes };
        psi.normalize();
        Ok(psi)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    #[inline]
    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scales to unit norm and returns the norm before scaling.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for z in &mut self.amplitudes {
                *z *= inv;
            }
        }
        n
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        same_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn mean_number(&self) -> f64 {
        self.amplitudes.iter().enumerate().map(|(n, z)| n as f64 * z.norm_sqr()).sum()
    }
}

impl FockState for PureState {
    fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn expect_unchecked(&self, op: &FockOperator) -> C64 {
        let v = op.matrix.mul_vec(&self.amplitudes);
        self.amplitudes.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Density matrix ρ_{mn} in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix without validation; use [`DensityMatrix::validate`] to check invariants.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        check_dim(matrix.dim(), 1)?;
        Ok(DensityMatrix { matrix })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let a = psi.amplitudes();
        DensityMatrix { matrix: CMatrix::from_fn(a.len(), |i, j| a[i] * a[j].conj()) }
    }

    pub fn fock(dim: usize, k: usize) -> Result<Self> {
        Ok(Self::from_pure(&PureState::fock(dim, k)?))
    }

    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(dim, 0)
    }

    /// Maximally mixed state on the lowest `k` levels.
    pub fn maximally_mixed(dim: usize, k: usize) -> Result<Self> {
        check_dim(dim, 1)?;
        if k == 0 || k > dim {
            return Err(Error::invalid(format!("mixture over {k} levels in dimension {dim}")));
        }
        let d: Vec<C64> = (0..dim).map(|n| C64::new(if n < k { 1.0 / k as f64 } else { 0.0 }, 0.0)).collect();
        Ok(DensityMatrix { matrix: CMatrix::from_diagonal(&d) })
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        let m = &self.matrix.scale(C64::new(w, 0.0)) + &other.matrix.scale(C64::new(1.0 - w, 0.0));
        Ok(DensityMatrix { matrix: m })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    #[inline]
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    #[inline]
    pub fn matrix_mut(&mut self) -> &mut CMatrix {
        &mut self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn mean_number(&self) -> f64 {
        let n = self.dim();
        (0..n).map(|k| k as f64 * self.matrix[(k, k)].re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.matrix.hermiticity_defect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.matrix)[0]
    }

    /// True when every eigenvalue is ≥ `floor` (floor ≤ 0). Uses a shifted
    /// Cholesky factorization, so it is cheap enough to call at every sample.
    pub fn is_positive_within(&self, floor: f64) -> bool {
        linalg::cholesky_succeeds(&self.matrix, -floor)
    }

    /// Population of the `levels` highest Fock levels.
    pub fn top_population(&self, levels: usize) -> f64 {
        let n = self.dim();
        (n.saturating_sub(levels)..n).map(|k| self.matrix[(k, k)].re).sum()
    }

    /// max |ρU − Uρ| with U the parity operator.
    pub fn parity_commutator_defect(&self) -> f64 {
        // (ρU − Uρ)_{mn} = ρ_{mn}((−1)ⁿ − (−1)ᵐ): nonzero only on odd-parity blocks
        let n = self.dim();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if (i + j) % 2 == 1 {
                    m = m.max(2.0 * self.matrix[(i, j)].norm());
                }
            }
        }
        m
    }

    /// ½‖ρ − σ‖₁
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        same_dim(self.dim(), other.dim())?;
        Ok(0.5 * linalg::hermitian_trace_norm(&(&self.matrix - &other.matrix)))
    }

    /// Checks the trace, Hermiticity and positivity invariants.
    pub fn validate(&self, trace_tol: f64, herm_tol: f64, eig_floor: f64) -> Result<()> {
        let tr = self.trace();
        if (tr - 1.0).abs() > trace_tol {
            return Err(Error::invalid(format!("trace {tr} deviates from 1 by more than {trace_tol:e}")));
        }
        let h = self.hermiticity_defect();
        if h > herm_tol {
            return Err(Error::invalid(format!("Hermiticity defect {h:e} exceeds {herm_tol:e}")));
        }
        if !self.is_positive_within(eig_floor) {
            return Err(Error::invalid(format!("eigenvalue below {eig_floor:e}: {:e}", self.min_eigenvalue())));
        }
        Ok(())
    }
}

impl FockState for DensityMatrix {
    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn expect_unchecked(&self, op: &FockOperator) -> C64 {
        // tr(op ρ) = Σ_{ij} op_{ij} ρ_{ji}
        let n = self.dim();
        let mut s = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += op.matrix[(i, j)] * self.matrix[(j, i)];
            }
        }
        s
    }
}
