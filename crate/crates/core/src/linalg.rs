//! Small dense complex linear algebra.
//!
//! Matrices here never exceed a few hundred rows, so everything is plain
//! row-major storage with straightforward loops.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul, Sub};

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;

use crate::C64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        CMatrix { n, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Panics if `data.len() != n * n`.
    pub fn from_row_major(n: usize, data: Vec<C64>) -> Self {
        assert_eq!(data.len(), n * n, "row-major buffer has wrong length");
        CMatrix { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.n).map(|i| self.data[i * self.n + i]).collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        CMatrix { n, data: out }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.n, v.len(), "matrix-vector dimension mismatch");
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn commutator(&self, rhs: &CMatrix) -> CMatrix {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        assert_eq!(self.n, rhs.n);
        self.data.iter().zip(&rhs.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// max |M − M†|
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n;
        let mut m = 0.0f64;
        for i in 0..n {
            for j in i..n {
                m = m.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        m
    }

    /// Replaces the matrix by (M + M†)/2.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            let d = self.data[i * n + i];
            self.data[i * n + i] = C64::new(d.re, 0.0);
            for j in i + 1..n {
                let avg = (self.data[i * n + j] + self.data[j * n + i].conj()) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Top-left `k × k` block.
    pub fn leading_block(&self, k: usize) -> CMatrix {
        assert!(k <= self.n);
        Self::from_fn(k, |i, j| self.data[i * self.n + j])
    }

    /// Embeds the matrix in the top-left corner of a larger zero matrix.
    pub fn embed(&self, k: usize) -> CMatrix {
        assert!(k >= self.n);
        let mut out = Self::zeros(k);
        for i in 0..self.n {
            out.data[i * k..i * k + self.n].copy_from_slice(self.row(i));
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n);
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.n, rhs.n);
        CMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// Solves `A X = B` by LU decomposition with partial pivoting.
/// Returns `None` when `A` is numerically singular.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Option<CMatrix> {
    let n = a.dim();
    assert_eq!(n, b.dim());
    let mut lu = a.data.clone();
    let mut x = b.data.clone();
    for col in 0..n {
        let (pivot, pmax) = (col..n)
            .map(|r| (r, lu[r * n + col].norm()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmax == 0.0 || !pmax.is_finite() {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot * n + j);
                x.swap(col * n + j, pivot * n + j);
            }
        }
        let inv = ONE / lu[col * n + col];
        for r in col + 1..n {
            let f = lu[r * n + col] * inv;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let v = lu[col * n + j];
                lu[r * n + j] -= f * v;
            }
            for j in 0..n {
                let v = x[col * n + j];
                x[r * n + j] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let inv = ONE / lu[col * n + col];
        for j in 0..n {
            let mut s = x[col * n + j];
            for k in col + 1..n {
                s -= lu[col * n + k] * x[k * n + j];
            }
            x[col * n + j] = s * inv;
        }
    }
    Some(CMatrix { n, data: x })
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with the degree-13 Padé approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.dim();
    if n == 0 {
        return CMatrix::zeros(0);
    }
    let norm = a.norm_one();
    if norm == 0.0 {
        return CMatrix::identity(n);
    }
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a.scale(C64::new(2f64.powi(-s), 0.0));

    let eye = CMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let b = |k: usize| C64::new(PADE13[k], 0.0);

    let lin = |c6: usize, c4: usize, c2: usize| -> CMatrix {
        &(&a6.scale(b(c6)) + &a4.scale(b(c4))) + &a2.scale(b(c2))
    };
    let u_inner = &a6.matmul(&lin(13, 11, 9)) + &(&lin(7, 5, 3) + &eye.scale(b(1)));
    let u = a.matmul(&u_inner);
    let v = &a6.matmul(&lin(12, 10, 8)) + &(&lin(6, 4, 2) + &eye.scale(b(0)));

    let mut r = solve(&(&v - &u), &(&v + &u)).expect("Padé denominator is nonsingular after scaling");
    for _ in 0..s {
        r = r.matmul(&r);
    }
    r
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Works on the real symmetric embedding [[Re, −Im], [Im, Re]] with cyclic
/// Jacobi rotations; every eigenvalue appears twice there and one copy is kept.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let n = h.dim();
    let m = 2 * n;
    let mut a = vec![0.0f64; m * m];
    for i in 0..n {
        for j in 0..n {
            // Hermitian part only; tiny anti-Hermitian residue is ignored.
            let z = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            a[i * m + j] = z.re;
            a[(i + n) * m + (j + n)] = z.re;
            a[(i + n) * m + j] = z.im;
            a[i * m + (j + n)] = -z.im;
        }
    }
    jacobi_symmetric(&mut a, m);
    let mut ev: Vec<f64> = (0..m).map(|i| a[i * m + i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    ev.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect()
}

fn jacobi_symmetric(a: &mut [f64], m: usize) {
    let total: f64 = a.iter().map(|x| x * x).sum();
    if total == 0.0 {
        return;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..m {
            for q in p + 1..m {
                off += a[p * m + q] * a[p * m + q];
            }
        }
        if off <= 1e-32 * total {
            return;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[k * m + p];
                    let akq = a[k * m + q];
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[p * m + k];
                    let aqk = a[q * m + k];
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                a[p * m + q] = 0.0;
                a[q * m + p] = 0.0;
            }
        }
    }
}

/// Whether `h + shift·I` admits a Cholesky factorization, i.e. every
/// eigenvalue of the Hermitian matrix `h` exceeds `-shift`.
pub fn cholesky_succeeds(h: &CMatrix, shift: f64) -> bool {
    let n = h.dim();
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut d = h[(j, j)].re + shift;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let ljj = d.sqrt();
        l[j * n + j] = C64::new(ljj, 0.0);
        for i in j + 1..n {
            let mut s = (h[(i, j)] + h[(j, i)].conj()) * 0.5;
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / ljj;
        }
    }
    true
}

/// Trace norm Σ|λᵢ| of a Hermitian matrix.
pub fn hermitian_trace_norm(h: &CMatrix) -> f64 {
    hermitian_eigenvalues(h).iter().map(|x| x.abs()).sum()
}
