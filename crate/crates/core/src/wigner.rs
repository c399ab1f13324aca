//! Wigner functions on Cartesian phase-space grids.
//!
//! Coordinates are quadratures of α = X + iY, X = (α + α*)/2, Y = (α − α*)/2i,
//! and W is normalized to ∫W dX dY = 1, so the vacuum is (2/π)e^{−2|α|²} and
//! |W| ≤ 2/π.
//!
//! The displaced-parity formula W(α) = (2/π) Tr[ρ D(α) P D(α)†] is evaluated
//! from the matrix elements of D(α)PD(α)† in the Fock basis,
//!
//! W(α) = (2/π) e^{−2|α|²} Σₘ [ ρₘₘ(−1)ᵐ Lₘ(4|α|²)
//!        + 2 Σ_{n>m} Re( ρₘₙ (−1)ᵐ (2α)^{n−m} √(m!/n!) Lₘ^{(n−m)}(4|α|²) ) ],
//!
//! at O(D²) per point. [`WignerMethod::Expm`] builds D(α) by matrix
//! exponentiation instead and is only practical on small grids.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_2_PI, PI};

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockOperator};
use crate::linalg::CMatrix;
use crate::master::TruncationGuard;
use crate::C64;

pub const DEFAULT_HALF_WIDTH: f64 = 6.0;
pub const DEFAULT_POINTS: usize = 101;
pub const DEFAULT_HUMP_THRESHOLD: f64 = 0.2;

/// Rectangular grid: `nx` points on [x_min, x_max] and `ny` on [y_min, y_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::symmetric(DEFAULT_HALF_WIDTH, DEFAULT_POINTS)
    }
}

impl GridSpec {
    /// Square grid on [−half_width, half_width]² with `points` per axis.
    pub fn symmetric(half_width: f64, points: usize) -> Self {
        GridSpec { x_min: -half_width, x_max: half_width, nx: points, y_min: -half_width, y_max: half_width, ny: points }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64, n: usize| lo.is_finite() && hi.is_finite() && hi > lo && n >= 2;
        if !ok(self.x_min, self.x_max, self.nx) || !ok(self.y_min, self.y_max, self.ny) {
            return Err(Error::invalid(format!("bad grid spec {self:?}")));
        }
        Ok(())
    }

    pub fn x_axis(&self) -> Vec<f64> {
        axis(self.x_min, self.x_max, self.nx)
    }

    pub fn y_axis(&self) -> Vec<f64> {
        axis(self.y_min, self.y_max, self.ny)
    }
}

/// Equispaced axis. Symmetric ranges are generated about the center index so
/// mirrored points are exact negatives of each other.
pub fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    if lo == -hi {
        let c = 0.5 * (n - 1) as f64;
        (0..n).map(|i| (i as f64 - c) * h).collect()
    } else {
        (0..n).map(|i| if i + 1 == n { hi } else { lo + i as f64 * h }).collect()
    }
}

fn is_mirror_symmetric(a: &[f64]) -> bool {
    let n = a.len();
    (0..n).all(|i| a[i] == -a[n - 1 - i])
}

/// Wigner function values; `values[i * ny + j]` is W(x_i, y_j).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub y_axis: Vec<f64>,
    pub values: Vec<f64>,
    pub time: Option<f64>,
    pub params_hash: Option<String>,
    /// Largest |Im W| discarded when the evaluation produced complex values.
    pub imag_residue: f64,
}

impl WignerGrid {
    pub fn new(x_axis: Vec<f64>, y_axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != x_axis.len() * y_axis.len() {
            return Err(Error::DimensionMismatch { expected: x_axis.len() * y_axis.len(), found: values.len() });
        }
        Ok(WignerGrid { x_axis, y_axis, values, time: None, params_hash: None, imag_residue: 0.0 })
    }

    pub fn nx(&self) -> usize {
        self.x_axis.len()
    }

    pub fn ny(&self) -> usize {
        self.y_axis.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ny() + j]
    }

    /// (r, θ) of grid point (i, j), θ ∈ (−π, π].
    pub fn polar(&self, i: usize, j: usize) -> (f64, f64) {
        let (x, y) = (self.x_axis[i], self.y_axis[j]);
        (x.hypot(y), y.atan2(x))
    }

    /// Index of the point (−x, −y).
    pub fn mirror(&self, i: usize, j: usize) -> (usize, usize) {
        (self.nx() - 1 - i, self.ny() - 1 - j)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_point_symmetric(&self) -> bool {
        is_mirror_symmetric(&self.x_axis) && is_mirror_symmetric(&self.y_axis)
    }
}

/// Evaluation route for [`wigner_from_density`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WignerMethod {
    /// Closed-form matrix elements of D(α)PD(α)†.
    #[default]
    Laguerre,
    /// Tr[ρ D(α) P D(α)†] with D(α) from a matrix exponential in a
    /// `work_dim`-level space (ρ is zero-padded).
    Expm { work_dim: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerOptions {
    pub method: WignerMethod,
    /// Refuse states that populate the top Fock levels.
    pub leak_guard: Option<TruncationGuard>,
}

impl Default for WignerOptions {
    fn default() -> Self {
        WignerOptions { method: WignerMethod::Laguerre, leak_guard: Some(TruncationGuard::default()) }
    }
}

/// Precomputed Laguerre-route evaluator for one density matrix.
#[derive(Debug, Clone)]
pub struct WignerKernel {
    dim: usize,
    /// ρ_{j, j+k}(−1)^j √(j!·k!/(j+k)!), indexed [k][j].
    coeffs: Vec<Vec<C64>>,
    /// 1/√k!
    inv_sqrt_fact: Vec<f64>,
}

impl WignerKernel {
    pub fn new(rho: &DensityMatrix) -> Self {
        let d = rho.dim();
        let m = rho.matrix();
        let mut inv_sqrt_fact = vec![1.0; d];
        for k in 1..d {
            inv_sqrt_fact[k] = inv_sqrt_fact[k - 1] / (k as f64).sqrt();
        }
        let coeffs = (0..d)
            .map(|k| {
                // s_j = √(j!k!/(j+k)!), s_0 = 1
                let mut s = 1.0;
                (0..d - k)
                    .map(|j| {
                        if j > 0 {
                            s *= (j as f64 / (j + k) as f64).sqrt();
                        }
                        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                        m[(j, j + k)] * (sign * s)
                    })
                    .collect()
            })
            .collect();
        WignerKernel { dim: d, coeffs, inv_sqrt_fact }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// W(α)
    pub fn evaluate(&self, alpha: C64) -> f64 {
        let x = 4.0 * alpha.norm_sqr();
        let two_alpha = alpha * 2.0;
        let mut total = 0.0;
        // (2α)^k / √k!
        let mut pow = C64::new(1.0, 0.0);
        for k in 0..self.dim {
            if k > 0 {
                pow = pow * two_alpha * (self.inv_sqrt_fact[k] / self.inv_sqrt_fact[k - 1]);
            }
            let kf = k as f64;
            let row = &self.coeffs[k];
            let mut lm1 = 0.0;
            let mut l = 1.0;
            let mut acc = C64::new(0.0, 0.0);
            for (j, c) in row.iter().enumerate() {
                if j == 1 {
                    lm1 = l;
                    l = 1.0 + kf - x;
                } else if j > 1 {
                    let jf = (j - 1) as f64;
                    let next = ((2.0 * jf + 1.0 + kf - x) * l - (jf + kf) * lm1) / (jf + 1.0);
                    lm1 = l;
                    l = next;
                }
                acc += c * l;
            }
            let term = (acc * pow).re;
            total += if k == 0 { term } else { 2.0 * term };
        }
        FRAC_2_PI * (-0.5 * x).exp() * total
    }

    /// W along one grid row x = const.
    pub fn row(&self, x: f64, y_axis: &[f64]) -> Vec<f64> {
        y_axis.iter().map(|&y| self.evaluate(C64::new(x, y))).collect()
    }
}

/// Literal displaced-parity evaluation; returns (Re, Im) of (2/π)Tr[ρDPD†].
pub fn displaced_parity_value(rho_padded: &CMatrix, alpha: C64) -> Result<(f64, f64)> {
    let d = rho_padded.dim();
    let disp = FockOperator::displacement(alpha, d)?;
    let dm = disp.matrix();
    // Tr[ρ D P D†] = Σ_{i,k} (ρD)_{ik} (−1)^k conj(D_{ik})
    let rd = rho_padded.matmul(dm);
    let mut s = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += rd[(i, k)] * dm[(i, k)].conj() * sign;
        }
    }
    Ok((FRAC_2_PI * s.re, FRAC_2_PI * s.im))
}

fn check_leak(rho: &DensityMatrix, guard: &Option<TruncationGuard>) -> Result<()> {
    if let Some(g) = guard {
        let pop = rho.top_population(g.levels);
        if pop > g.max_population {
            return Err(Error::TruncationLeak { time: f64::NAN, levels: g.levels, population: pop });
        }
    }
    Ok(())
}

/// Checks inputs shared by every Wigner evaluation path.
pub fn prepare(rho: &DensityMatrix, spec: &GridSpec, options: &WignerOptions) -> Result<()> {
    spec.validate()?;
    check_leak(rho, &options.leak_guard)?;
    if let WignerMethod::Expm { work_dim } = options.method {
        if work_dim < rho.dim() {
            return Err(Error::invalid(format!("work_dim {work_dim} is smaller than the state dimension {}", rho.dim())));
        }
    }
    Ok(())
}

/// W on the grid described by `spec`.
pub fn wigner_from_density(rho: &DensityMatrix, spec: &GridSpec, options: &WignerOptions) -> Result<WignerGrid> {
    prepare(rho, spec, options)?;
    let xs = spec.x_axis();
    let ys = spec.y_axis();
    let mut values = Vec::with_capacity(xs.len() * ys.len());
    let mut residue: f64 = 0.0;
    match options.method {
        WignerMethod::Laguerre => {
            let kernel = WignerKernel::new(rho);
            for &x in &xs {
                values.extend(kernel.row(x, &ys));
            }
        }
        WignerMethod::Expm { work_dim } => {
            let padded = rho.matrix().embed(work_dim);
            for &x in &xs {
                for &y in &ys {
                    let (re, im) = displaced_parity_value(&padded, C64::new(x, y))?;
                    residue = residue.max(im.abs());
                    values.push(re);
                }
            }
        }
    }
    let mut grid = WignerGrid::new(xs, ys, values)?;
    grid.imag_residue = residue;
    Ok(grid)
}

/// Half-width 1.5√n_max + 2, with n_max the highest level holding more than
/// `floor` population.
pub fn recommended_half_width(rho: &DensityMatrix, floor: f64) -> f64 {
    let d = rho.matrix().diagonal();
    let n_max = (0..d.len()).rev().find(|&n| d[n].re > floor).unwrap_or(0);
    1.5 * (n_max as f64).sqrt() + 2.0
}

/// max |W(X,Y) − W(−X,−Y)| / max |W|.
pub fn symmetry_defect(grid: &WignerGrid) -> Result<f64> {
    if !grid.is_point_symmetric() {
        return Err(Error::invalid("grid is not symmetric under (X, Y) → (−X, −Y)"));
    }
    let scale = grid.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for i in 0..grid.nx() {
        for j in 0..grid.ny() {
            let (mi, mj) = grid.mirror(i, j);
            worst = worst.max((grid.at(i, j) - grid.at(mi, mj)).abs());
        }
    }
    Ok(worst / scale)
}

fn trapezoid_weights(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { a[i] - a[i - 1] } else { 0.0 };
            let right = if i + 1 < n { a[i + 1] - a[i] } else { 0.0 };
            0.5 * (left + right)
        })
        .collect()
}

/// Trapezoidal ∫W dX dY over the grid.
pub fn normalization(grid: &WignerGrid) -> f64 {
    let wx = trapezoid_weights(&grid.x_axis);
    let wy = trapezoid_weights(&grid.y_axis);
    let mut s = 0.0;
    for (i, a) in wx.iter().enumerate() {
        for (j, b) in wy.iter().enumerate() {
            s += a * b * grid.at(i, j);
        }
    }
    s
}

/// Symmetric covariance of (X, Y) from the grid moments.
pub fn grid_covariance(grid: &WignerGrid) -> [[f64; 2]; 2] {
    let wx = trapezoid_weights(&grid.x_axis);
    let wy = trapezoid_weights(&grid.y_axis);
    let mut m = [0.0; 6]; // 1, x, y, xx, yy, xy
    for (i, a) in wx.iter().enumerate() {
        for (j, b) in wy.iter().enumerate() {
            let w = a * b * grid.at(i, j);
            let (x, y) = (grid.x_axis[i], grid.y_axis[j]);
            m[0] += w;
            m[1] += w * x;
            m[2] += w * y;
            m[3] += w * x * x;
            m[4] += w * y * y;
            m[5] += w * x * y;
        }
    }
    let (mx, my) = (m[1] / m[0], m[2] / m[0]);
    [[m[3] / m[0] - mx * mx, m[5] / m[0] - mx * my], [m[5] / m[0] - mx * my, m[4] / m[0] - my * my]]
}

/// Symmetric covariance of X = (a + a†)/2 and Y = (a − a†)/2i in state ρ.
/// The vacuum gives diag(1/4, 1/4).
pub fn quadrature_covariance(rho: &DensityMatrix) -> [[f64; 2]; 2] {
    let d = rho.dim();
    let m = rho.matrix();
    let mut a1 = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    // ⟨a⟩ = Σ ρ_{n+1,n}√(n+1), ⟨a²⟩ = Σ ρ_{n+2,n}√((n+1)(n+2))
    for n in 0..d {
        if n + 1 < d {
            a1 += m[(n + 1, n)] * ((n + 1) as f64).sqrt();
        }
        if n + 2 < d {
            a2 += m[(n + 2, n)] * (((n + 1) * (n + 2)) as f64).sqrt();
        }
    }
    let n = rho.mean_number();
    let vx = (2.0 * a2.re + 2.0 * n + 1.0) / 4.0 - a1.re * a1.re;
    let vy = (-2.0 * a2.re + 2.0 * n + 1.0) / 4.0 - a1.im * a1.im;
    let c = 0.5 * a2.im - a1.re * a1.im;
    [[vx, c], [c, vy]]
}

/// Eigenvalues (minor, major) of a symmetric 2×2 covariance.
pub fn principal_variances(cov: &[[f64; 2]; 2]) -> (f64, f64) {
    let mean = 0.5 * (cov[0][0] + cov[1][1]);
    let half = 0.5 * (cov[0][0] - cov[1][1]);
    let r = half.hypot(cov[0][1]);
    (mean - r, mean + r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hump {
    pub ix: usize,
    pub iy: usize,
    pub x: f64,
    pub y: f64,
    pub value: f64,
    /// θ ∈ (−π, π]
    pub phase: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumpReport {
    /// Sorted by decreasing value.
    pub humps: Vec<Hump>,
    pub threshold: f64,
}

/// |θ₁ − θ₂| folded into [0, π].
pub fn phase_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % (2.0 * PI);
    if d > PI {
        2.0 * PI - d
    } else {
        d
    }
}

impl HumpReport {
    /// Folded phase differences for every pair (i < j), in hump order.
    pub fn phase_differences(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.humps.len() {
            for j in i + 1..self.humps.len() {
                out.push((i, j, phase_difference(self.humps[i].phase, self.humps[j].phase)));
            }
        }
        out
    }

    /// Smaller over larger peak value of the two highest humps.
    pub fn height_ratio(&self) -> Option<f64> {
        match self.humps.as_slice() {
            [a, b, ..] => Some(b.value / a.value),
            _ => None,
        }
    }
}

/// Interior 8-neighbor local maxima above `threshold · max W`.
///
/// A point must beat the neighbors that precede it in raster order strictly and
/// the others weakly, so a plateau of equal values yields a single hump.
pub fn find_humps(grid: &WignerGrid, threshold: f64) -> Result<HumpReport> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!("hump threshold must lie in (0, 1), got {threshold}")));
    }
    let level = threshold * grid.max();
    let mut humps = Vec::new();
    let (nx, ny) = (grid.nx(), grid.ny());
    for i in 1..nx.saturating_sub(1) {
        for j in 1..ny.saturating_sub(1) {
            let v = grid.at(i, j);
            if !(v > level) {
                continue;
            }
            let mut is_max = true;
            'nb: for di in [-1isize, 0, 1] {
                for dj in [-1isize, 0, 1] {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (a, b) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                    let u = grid.at(a, b);
                    let before = (di, dj) < (0, 0);
                    if (before && u >= v) || (!before && u > v) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                let (radius, phase) = grid.polar(i, j);
                humps.push(Hump { ix: i, iy: j, x: grid.x_axis[i], y: grid.y_axis[j], value: v, phase, radius });
            }
        }
    }
    humps.sort_by(|a, b| b.value.total_cmp(&a.value));
    Ok(HumpReport { humps, threshold })
}

/// Independent evaluation by the quadrature integral
/// W(x, y) = (2/π) ∫ ⟨x+u|ρ|x−u⟩ e^{−4iyu} du, in the same X, Y units.
#[cfg(any(test, feature = "oracle"))]
pub mod oracle {
    use super::*;

    /// Oscillator eigenfunctions in the X representation, ψₙ(x) = 2^{1/4} hₙ(√2 x),
    /// for n < dim; hₙ are the normalized Hermite functions.
    pub fn eigenfunctions(x: f64, dim: usize) -> Vec<f64> {
        let q = core::f64::consts::SQRT_2 * x;
        let mut h = vec![0.0; dim];
        h[0] = PI.powf(-0.25) * (-0.5 * q * q).exp();
        if dim > 1 {
            h[1] = core::f64::consts::SQRT_2 * q * h[0];
        }
        for n in 1..dim.saturating_sub(1) {
            let nf = n as f64;
            h[n + 1] = (2.0 / (nf + 1.0)).sqrt() * q * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
        }
        let s = 2f64.powf(0.25);
        h.iter().map(|v| v * s).collect()
    }

    /// Trapezoidal quadrature over u ∈ [−half_span, half_span] with `points` nodes.
    pub fn wigner_quadrature(rho: &DensityMatrix, x: f64, y: f64, half_span: f64, points: usize) -> (f64, f64) {
        let d = rho.dim();
        let m = rho.matrix();
        let h = 2.0 * half_span / (points - 1) as f64;
        let mut s = C64::new(0.0, 0.0);
        for k in 0..points {
            let u = -half_span + k as f64 * h;
            let a = eigenfunctions(x + u, d);
            let b = eigenfunctions(x - u, d);
            let mut v = C64::new(0.0, 0.0);
            for i in 0..d {
                if a[i] == 0.0 {
                    continue;
                }
                let mut r = C64::new(0.0, 0.0);
                for j in 0..d {
                    r += m[(i, j)] * b[j];
                }
                v += r * a[i];
            }
            let w = if k == 0 || k + 1 == points { 0.5 * h } else { h };
            s += v * C64::from_polar(w, -4.0 * y * u);
        }
        (FRAC_2_PI * s.re, FRAC_2_PI * s.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PureState;

    fn vac(a: C64) -> f64 {
        FRAC_2_PI * (-2.0 * a.norm_sqr()).exp()
    }

    #[test]
    fn symmetric_axis_is_exactly_mirrored() {
        for n in [2, 64, 101] {
            let a = axis(-6.0, 6.0, n);
            assert!(is_mirror_symmetric(&a));
            assert_eq!(a[0], -6.0);
        }
        let a = axis(-1.0, 3.0, 5);
        assert_eq!(a, vec![-1.0, 0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn vacuum_and_one_photon_forms() {
        let spec = GridSpec::symmetric(3.0, 64);
        let opts = WignerOptions::default();
        let g0 = wigner_from_density(&DensityMatrix::vacuum(30).unwrap(), &spec, &opts).unwrap();
        let g1 = wigner_from_density(&DensityMatrix::fock(30, 1).unwrap(), &spec, &opts).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                let a = C64::new(g0.x_axis[i], g0.y_axis[j]);
                assert!((g0.at(i, j) - vac(a)).abs() <= 1e-8);
                let one = FRAC_2_PI * (4.0 * a.norm_sqr() - 1.0) * (-2.0 * a.norm_sqr()).exp();
                assert!((g1.at(i, j) - one).abs() <= 1e-8);
            }
        }
        assert!(WignerKernel::new(&DensityMatrix::fock(30, 1).unwrap()).evaluate(C64::new(0.0, 0.0)) < 0.0);
    }

    #[test]
    fn coherent_state_is_displaced_vacuum() {
        let beta = C64::new(1.2, -0.7);
        let rho = DensityMatrix::from_pure(&PureState::coherent(beta, 40).unwrap());
        let k = WignerKernel::new(&rho);
        for a in [C64::new(0.0, 0.0), beta, C64::new(-1.0, 0.5), C64::new(2.0, 1.0)] {
            assert!((k.evaluate(a) - vac(a - beta)).abs() < 1e-10, "{a}");
        }
    }

    #[test]
    fn expm_route_agrees() {
        let psi = PureState::from_amplitudes(vec![
            C64::new(0.5, 0.0),
            C64::new(0.1, 0.4),
            C64::new(-0.3, 0.2),
            C64::new(0.0, -0.5),
            C64::new(0.2, 0.1),
        ])
        .unwrap();
        let mut psi = psi;
        psi.normalize();
        let rho = DensityMatrix::from_pure(&psi);
        let spec = GridSpec::symmetric(2.0, 9);
        let fast = wigner_from_density(&rho, &spec, &WignerOptions { leak_guard: None, ..Default::default() }).unwrap();
        let slow = wigner_from_density(&rho, &spec, &WignerOptions { method: WignerMethod::Expm { work_dim: 60 }, leak_guard: None }).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(slow.imag_residue < 1e-10);
    }

    #[test]
    fn quadrature_oracle_agrees_on_coherent_state() {
        let beta = C64::new(0.6, 0.9);
        let rho = DensityMatrix::from_pure(&PureState::coherent(beta, 30).unwrap());
        let k = WignerKernel::new(&rho);
        for a in [C64::new(0.3, 0.2), C64::new(0.6, 0.9), C64::new(-0.5, 1.4)] {
            let (re, im) = oracle::wigner_quadrature(&rho, a.re, a.im, 8.0, 4001);
            assert!((re - k.evaluate(a)).abs() < 1e-9, "{a}: {re} vs {}", k.evaluate(a));
            assert!(im.abs() < 1e-9);
        }
    }

    #[test]
    fn leak_guard_refuses() {
        let rho = DensityMatrix::fock(10, 9).unwrap();
        let err = wigner_from_density(&rho, &GridSpec::symmetric(2.0, 5), &WignerOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TruncationLeak { .. }));
    }

    #[test]
    fn normalization_and_clipping() {
        let opts = WignerOptions::default();
        let spec = GridSpec::default();
        let g = wigner_from_density(&DensityMatrix::vacuum(20).unwrap(), &spec, &opts).unwrap();
        assert!((normalization(&g) - 1.0).abs() < 1e-6);
        let g3 = wigner_from_density(&DensityMatrix::fock(20, 3).unwrap(), &spec, &opts).unwrap();
        assert!((normalization(&g3) - 1.0).abs() < 1e-4);
        let narrow = wigner_from_density(&DensityMatrix::fock(20, 3).unwrap(), &GridSpec::symmetric(1.5, 51), &opts).unwrap();
        assert!(normalization(&narrow) < 0.99);
    }

    #[test]
    fn symmetry_defect_cases() {
        let opts = WignerOptions::default();
        let spec = GridSpec::symmetric(4.0, 41);
        let g = wigner_from_density(&DensityMatrix::fock(20, 2).unwrap(), &spec, &opts).unwrap();
        assert_eq!(symmetry_defect(&g).unwrap(), 0.0);
        let coh = DensityMatrix::from_pure(&PureState::coherent(C64::new(1.0, 0.0), 20).unwrap());
        let g = wigner_from_density(&coh, &spec, &opts).unwrap();
        assert!(symmetry_defect(&g).unwrap() > 0.5);
        let skew = GridSpec { x_min: -1.0, x_max: 2.0, ..spec };
        let g = wigner_from_density(&coh, &skew, &opts).unwrap();
        assert!(symmetry_defect(&g).is_err());
    }

    #[test]
    fn humps_of_vacuum_and_cat_mixture() {
        let opts = WignerOptions::default();
        let spec = GridSpec::default();
        let g = wigner_from_density(&DensityMatrix::vacuum(20).unwrap(), &spec, &opts).unwrap();
        let r = find_humps(&g, DEFAULT_HUMP_THRESHOLD).unwrap();
        assert_eq!(r.humps.len(), 1);
        assert_eq!((r.humps[0].x, r.humps[0].y), (0.0, 0.0));

        let beta = C64::new(2.0, 0.0);
        let plus = DensityMatrix::from_pure(&PureState::coherent(beta, 40).unwrap());
        let minus = DensityMatrix::from_pure(&PureState::coherent(-beta, 40).unwrap());
        let mix = plus.mix(&minus, 0.5).unwrap();
        let g = wigner_from_density(&mix, &spec, &opts).unwrap();
        let r = find_humps(&g, DEFAULT_HUMP_THRESHOLD).unwrap();
        assert_eq!(r.humps.len(), 2);
        assert!((r.height_ratio().unwrap() - 1.0).abs() < 1e-6);
        let (_, _, dphi) = r.phase_differences()[0];
        assert_eq!(dphi, PI);
        let half_cell = 0.5 * (g.x_axis[1] - g.x_axis[0]);
        assert!(r.humps.iter().all(|h| (h.x.abs() - 2.0).abs() <= half_cell + 1e-12 && h.y == 0.0));
        assert!(find_humps(&g, 1.0).is_err());
    }

    #[test]
    fn covariance_witness() {
        let c = quadrature_covariance(&DensityMatrix::vacuum(10).unwrap());
        assert!((c[0][0] - 0.25).abs() < 1e-15 && (c[1][1] - 0.25).abs() < 1e-15 && c[0][1] == 0.0);
        let c = quadrature_covariance(&DensityMatrix::from_pure(&PureState::coherent(C64::new(1.0, 0.5), 40).unwrap()));
        let (lo, hi) = principal_variances(&c);
        assert!((lo - 0.25).abs() < 1e-10 && (hi - 0.25).abs() < 1e-10);
        let g = wigner_from_density(&DensityMatrix::fock(20, 2).unwrap(), &GridSpec::default(), &WignerOptions::default()).unwrap();
        let gc = grid_covariance(&g);
        let ex = quadrature_covariance(&DensityMatrix::fock(20, 2).unwrap());
        assert!((gc[0][0] - ex[0][0]).abs() < 1e-6 && (gc[1][1] - ex[1][1]).abs() < 1e-6);
    }

    #[test]
    fn squeezed_vacuum_variance() {
        // S(r) = exp(r/2 (a² − a†²)) scales X by e^{−r}
        let r = 0.5;
        let d = 40;
        let a = FockOperator::annihilation(d).unwrap();
        let a2 = a.compose(&a).unwrap();
        let gen = a2.plus(&a2.adjoint().scale(C64::new(-1.0, 0.0))).unwrap().scale(C64::new(0.5 * r, 0.0));
        let s = crate::linalg::expm(gen.matrix());
        let psi = s.mul_vec(crate::fock::PureState::vacuum(d).unwrap().amplitudes());
        let rho = DensityMatrix::from_pure(&crate::fock::PureState::from_amplitudes(psi).unwrap());
        let c = quadrature_covariance(&rho);
        assert!((c[0][0] - 0.25 * (-2.0 * r).exp()).abs() < 1e-10);
        assert!((c[1][1] - 0.25 * (2.0 * r).exp()).abs() < 1e-10);
        let (lo, _) = principal_variances(&c);
        assert!(lo < 0.25);
    }

    #[test]
    fn phase_difference_folding() {
        assert_eq!(phase_difference(PI, -PI / 2.0), PI / 2.0);
        assert!((phase_difference(3.0, -3.0) - (2.0 * PI - 6.0)).abs() < 1e-15);
    }
}
