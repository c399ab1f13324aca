//! Quantum-state-diffusion unraveling of the master equation.
//!
//! Each trajectory obeys the norm-preserving stochastic Schrödinger equation
//!
//! d|ψ⟩ = −iH|ψ⟩dt + Σᵢ(⟨Lᵢ†⟩Lᵢ − ½Lᵢ†Lᵢ − ½⟨Lᵢ†⟩⟨Lᵢ⟩)|ψ⟩dt + Σᵢ(Lᵢ − ⟨Lᵢ⟩)|ψ⟩dξᵢ
//!
//! with complex Wiener increments E[dξᵢdξⱼ*] = δᵢⱼdt, E[dξᵢdξⱼ] = 0. The
//! ensemble mean of |ψ⟩⟨ψ| estimates ρ(t).
//!
//! Trajectory k draws its noise from a ChaCha8 stream selected by (seed, k),
//! so any subset of trajectories can be computed independently. Trajectories
//! are reduced in blocks of [`REDUCTION_BLOCK`] consecutive indices and blocks
//! are merged in index order, which makes the result independent of how the
//! blocks are scheduled.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::banded::Structure;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, PureState};
use crate::linalg::CMatrix;
use crate::master::{substeps, validate_grid};
use crate::model::ModelParams;
use crate::C64;

pub const DEFAULT_QSD_STEP: f64 = 5e-4;

/// Trajectories per reduction block.
pub const REDUCTION_BLOCK: usize = 16;

/// Norm below which a step is considered to have collapsed.
pub const NORM_COLLAPSE: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Time-stepping scheme for a single trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QsdScheme {
    /// Symmetric splitting: the linear part −iH − ½ΣL†L is advanced over two
    /// half steps by integrating-factor RK4, with the measurement-dependent
    /// drift and the noise applied as an Euler–Maruyama kick in between.
    #[default]
    Split,
    /// Plain Euler–Maruyama on the whole equation, as in [`qsd_step`].
    EulerMaruyama,
}

impl QsdScheme {
    pub fn label(&self) -> &'static str {
        match self {
            QsdScheme::Split => "split-lawson-em",
            QsdScheme::EulerMaruyama => "euler-maruyama",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    #[default]
    Wiener,
    /// All increments zero: deterministic evolution under the drift alone.
    Zero,
}

/// Sample indices at which ensemble density matrices are accumulated.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum DensitySampling {
    #[default]
    All,
    None,
    Indices(Vec<usize>),
}

impl DensitySampling {
    pub fn resolve(&self, n_samples: usize) -> Result<Vec<usize>> {
        match self {
            DensitySampling::All => Ok((0..n_samples).collect()),
            DensitySampling::None => Ok(Vec::new()),
            DensitySampling::Indices(ix) => {
                if ix.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("density sample indices must be strictly increasing"));
                }
                if let Some(&bad) = ix.iter().find(|&&i| i >= n_samples) {
                    return Err(Error::invalid(format!("density sample index {bad} out of range ({n_samples} samples)")));
                }
                Ok(ix.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QsdConfig {
    pub n_traj: usize,
    pub step: f64,
    pub seed: u64,
    /// The initial state is taken at `sample_times[0]`.
    pub sample_times: Vec<f64>,
    pub scheme: QsdScheme,
    pub noise: NoiseMode,
    pub density: DensitySampling,
}

impl QsdConfig {
    pub fn new(n_traj: usize, seed: u64, sample_times: Vec<f64>) -> Self {
        QsdConfig {
            n_traj,
            step: DEFAULT_QSD_STEP,
            seed,
            sample_times,
            scheme: QsdScheme::default(),
            noise: NoiseMode::default(),
            density: DensitySampling::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::invalid("n_traj must be at least 1"));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid(format!("step must be positive, got {}", self.step)));
        }
        validate_grid(&self.sample_times)?;
        self.density.resolve(self.sample_times.len()).map(|_| ())
    }

    /// Number of reduction blocks covering `n_traj`.
    pub fn n_blocks(&self) -> usize {
        self.n_traj.div_ceil(REDUCTION_BLOCK)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEnsembleResult {
    pub sample_times: Vec<f64>,
    pub mean_n: Vec<f64>,
    /// Standard error of the ensemble mean; zero for a single trajectory.
    pub stderr_n: Vec<f64>,
    /// Sample indices of `density_estimates`.
    pub density_indices: Vec<usize>,
    pub density_estimates: Vec<DensityMatrix>,
    pub seed: u64,
    pub n_traj: usize,
    pub step: f64,
    pub scheme: QsdScheme,
}

impl TrajectoryEnsembleResult {
    /// Density estimate at sample index `i`, if it was recorded.
    pub fn density_at(&self, i: usize) -> Option<&DensityMatrix> {
        self.density_indices.binary_search(&i).ok().map(|k| &self.density_estimates[k])
    }
}

/// The RNG stream of trajectory `index`.
pub fn trajectory_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Complex Wiener increment (g₁ + i g₂)·√(dt/2).
pub fn wiener_increment<R: Rng + ?Sized>(rng: &mut R, dt: f64) -> C64 {
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    C64::new(g1, g2) * (0.5 * dt).sqrt()
}

/// Lindblad channels on the truncated space.
#[derive(Debug, Clone)]
struct Channels {
    /// √((N+1)γ)
    c1: f64,
    /// √(Nγ); zero disables the channel.
    c2: f64,
}

impl Channels {
    fn new(params: &ModelParams) -> Self {
        Channels { c1: params.decay_rate().sqrt(), c2: params.excitation_rate().sqrt() }
    }

    fn count(&self) -> usize {
        if self.c2 != 0.0 {
            2
        } else {
            1
        }
    }

    /// out = L_k ψ
    fn apply(&self, k: usize, s: &Structure, psi: &[C64], out: &mut [C64]) {
        let d = psi.len();
        if k == 0 {
            for n in 0..d {
                out[n] = if n + 1 < d { psi[n + 1] * (self.c1 * s.sqrt_n[n + 1]) } else { ZERO };
            }
        } else {
            for n in 0..d {
                out[n] = if n >= 1 { psi[n - 1] * (self.c2 * s.sqrt_n[n]) } else { ZERO };
            }
        }
    }
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(psi: &[C64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Per-trajectory workspace.
struct Engine {
    s: Structure,
    ch: Channels,
    cached_h: f64,
    half: Vec<C64>,
    full: Vec<C64>,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
    lpsi: [Vec<C64>; 2],
    acc: Vec<C64>,
}

impl Engine {
    fn new(params: &ModelParams) -> Self {
        let d = params.dim;
        let z = vec![ZERO; d];
        Engine {
            s: Structure::new(params),
            ch: Channels::new(params),
            cached_h: f64::NAN,
            half: z.clone(),
            full: z.clone(),
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z.clone(),
            lpsi: [z.clone(), z.clone()],
            acc: z,
        }
    }

    /// Integrating-factor RK4 for dψ/dt = (−iH(t) − ½ΣL†L)ψ over [t, t+h].
    fn linear(&mut self, psi: &mut [C64], t: f64, h: f64, params: &ModelParams) {
        if h != self.cached_h {
            self.full = self.s.pure_phases(h);
            self.half = self.s.pure_phases(0.5 * h);
            self.cached_h = h;
        }
        let mi = C64::new(0.0, -1.0);
        let f0 = params.envelope(t);
        let fm = params.envelope(t + 0.5 * h);
        let f1 = params.envelope(t + h);
        let hh = 0.5 * h;
        let d = psi.len();

        self.s.apply_drive(f0, psi, &mut self.k1);
        for i in 0..d {
            self.k1[i] *= mi;
            self.tmp[i] = self.half[i] * (psi[i] + self.k1[i] * hh);
        }
        self.s.apply_drive(fm, &self.tmp, &mut self.k2);
        for i in 0..d {
            self.k2[i] *= mi;
            self.tmp[i] = self.half[i] * psi[i] + self.k2[i] * hh;
        }
        self.s.apply_drive(fm, &self.tmp, &mut self.k3);
        for i in 0..d {
            self.k3[i] *= mi;
            self.tmp[i] = self.full[i] * psi[i] + self.half[i] * self.k3[i] * h;
        }
        self.s.apply_drive(f1, &self.tmp, &mut self.k4);
        let h6 = h / 6.0;
        for i in 0..d {
            self.k4[i] *= mi;
            let incr = self.full[i] * self.k1[i] + self.half[i] * (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i];
            psi[i] = self.full[i] * psi[i] + incr * h6;
        }
    }

    /// Measurement drift Σ(⟨L†⟩L − ½|⟨L⟩|²)ψdt plus noise Σ(L − ⟨L⟩)ψdξ,
    /// with expectations in the incoming state. Returns the increment in `acc`.
    fn kick(&mut self, psi: &[C64], dt: f64, noise: &[C64]) {
        let nn = norm(psi);
        let norm2 = nn * nn;
        self.acc.iter_mut().for_each(|z| *z = ZERO);
        for k in 0..self.ch.count() {
            let mut l = core::mem::take(&mut self.lpsi[k]);
            self.ch.apply(k, &self.s, psi, &mut l);
            let ev = inner(psi, &l) / norm2;
            let drift_l = ev.conj() * dt + noise[k];
            let drift_psi = -(0.5 * ev.norm_sqr() * dt) - ev * noise[k];
            for i in 0..psi.len() {
                self.acc[i] += l[i] * drift_l + psi[i] * drift_psi;
            }
            self.lpsi[k] = l;
        }
    }

    fn split_step(&mut self, psi: &mut [C64], t: f64, dt: f64, params: &ModelParams, noise: &[C64]) -> Result<()> {
        let h = 0.5 * dt;
        self.linear(psi, t, h, params);
        self.kick(psi, dt, noise);
        for (p, a) in psi.iter_mut().zip(&self.acc) {
            *p += *a;
        }
        self.linear(psi, t + h, h, params);
        renormalize(psi, t + dt)
    }

    fn euler_step(&mut self, psi: &mut [C64], t: f64, dt: f64, params: &ModelParams, noise: &[C64]) -> Result<()> {
        self.kick(psi, dt, noise);
        let f = params.envelope(t);
        self.s.apply_drive(f, psi, &mut self.tmp);
        for i in 0..psi.len() {
            let hpsi = self.tmp[i] + psi[i] * self.s.energies[i];
            let lin = C64::new(0.0, -1.0) * hpsi - psi[i] * (0.5 * self.s.loss[i]);
            self.acc[i] += lin * dt;
        }
        for (p, a) in psi.iter_mut().zip(&self.acc) {
            *p += *a;
        }
        renormalize(psi, t + dt)
    }
}

fn renormalize(psi: &mut [C64], t: f64) -> Result<()> {
    let n = norm(psi);
    if !(n >= NORM_COLLAPSE) {
        return Err(Error::NormCollapse { time: t, norm: n });
    }
    let inv = 1.0 / n;
    psi.iter_mut().for_each(|z| *z *= inv);
    Ok(())
}

fn check_state(psi: &PureState, params: &ModelParams) -> Result<()> {
    if psi.dim() != params.dim {
        return Err(Error::DimensionMismatch { expected: params.dim, found: psi.dim() });
    }
    Ok(())
}

/// One Euler–Maruyama step of the QSD equation followed by renormalization.
///
/// `noise` holds one increment per active channel: one when N = 0, two otherwise.
pub fn qsd_step(psi: &PureState, t: f64, dt: f64, params: &ModelParams, noise: &[C64]) -> Result<PureState> {
    params.validate()?;
    check_state(psi, params)?;
    let mut eng = Engine::new(params);
    if noise.len() != eng.ch.count() {
        return Err(Error::invalid(format!("expected {} noise increments, got {}", eng.ch.count(), noise.len())));
    }
    let mut out = psi.amplitudes().to_vec();
    eng.euler_step(&mut out, t, dt, params, noise)?;
    PureState::from_amplitudes(out)
}

/// Same as [`qsd_step`] with the split scheme.
pub fn qsd_split_step(psi: &PureState, t: f64, dt: f64, params: &ModelParams, noise: &[C64]) -> Result<PureState> {
    params.validate()?;
    check_state(psi, params)?;
    let mut eng = Engine::new(params);
    if noise.len() != eng.ch.count() {
        return Err(Error::invalid(format!("expected {} noise increments, got {}", eng.ch.count(), noise.len())));
    }
    let mut out = psi.amplitudes().to_vec();
    eng.split_step(&mut out, t, dt, params, noise)?;
    PureState::from_amplitudes(out)
}

/// Deterministic evolution under −iH − ½ΣL†L (no measurement terms) with the
/// same integrating-factor RK4 the split scheme uses, renormalized after each
/// step. For γ = 0 this is the Schrödinger equation.
pub fn evolve_schrodinger(psi0: &PureState, t_grid: &[f64], params: &ModelParams, step: f64) -> Result<Vec<PureState>> {
    params.validate()?;
    check_state(psi0, params)?;
    validate_grid(t_grid)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("step must be positive, got {step}")));
    }
    let mut eng = Engine::new(params);
    let mut psi = psi0.amplitudes().to_vec();
    let mut out = vec![psi0.clone()];
    for w in t_grid.windows(2) {
        let n = substeps(w[1] - w[0], step);
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            let t = w[0] + k as f64 * h;
            eng.linear(&mut psi, t, 0.5 * h, params);
            eng.linear(&mut psi, t + 0.5 * h, 0.5 * h, params);
            renormalize(&mut psi, t + h)?;
        }
        out.push(PureState::from_amplitudes(psi.clone())?);
    }
    Ok(out)
}

/// Running sums over a set of trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAccumulator {
    pub count: usize,
    pub sum_n: Vec<f64>,
    pub sum_n2: Vec<f64>,
    pub density_indices: Vec<usize>,
    /// Σ|ψ⟩⟨ψ| at each density index (row-major).
    pub sum_rho: Vec<Vec<C64>>,
}

impl EnsembleAccumulator {
    pub fn new(n_samples: usize, density_indices: Vec<usize>, dim: usize) -> Self {
        let sum_rho = density_indices.iter().map(|_| vec![ZERO; dim * dim]).collect();
        EnsembleAccumulator { count: 0, sum_n: vec![0.0; n_samples], sum_n2: vec![0.0; n_samples], density_indices, sum_rho }
    }

    /// Adds `other` after `self`; merging must follow trajectory order.
    pub fn merge(&mut self, other: &EnsembleAccumulator) {
        debug_assert_eq!(self.density_indices, other.density_indices);
        self.count += other.count;
        for (a, b) in self.sum_n.iter_mut().zip(&other.sum_n) {
            *a += b;
        }
        for (a, b) in self.sum_n2.iter_mut().zip(&other.sum_n2) {
            *a += b;
        }
        for (ra, rb) in self.sum_rho.iter_mut().zip(&other.sum_rho) {
            for (a, b) in ra.iter_mut().zip(rb) {
                *a += b;
            }
        }
    }

    pub fn finish(self, config: &QsdConfig) -> Result<TrajectoryEnsembleResult> {
        let m = self.count as f64;
        let mean_n: Vec<f64> = self.sum_n.iter().map(|s| s / m).collect();
        let stderr_n = self
            .sum_n2
            .iter()
            .zip(&mean_n)
            .map(|(s2, mu)| if self.count > 1 { ((s2 - m * mu * mu).max(0.0) / (m - 1.0) / m).sqrt() } else { 0.0 })
            .collect();
        let dim = (self.sum_rho.first().map_or(0, |r| r.len()) as f64).sqrt().round() as usize;
        let mut density_estimates = Vec::with_capacity(self.sum_rho.len());
        for r in self.sum_rho {
            let mut mat = CMatrix::from_row_major(dim, r);
            mat = mat.scale(C64::new(1.0 / m, 0.0));
            mat.symmetrize();
            density_estimates.push(DensityMatrix::from_matrix(mat)?);
        }
        Ok(TrajectoryEnsembleResult {
            sample_times: config.sample_times.clone(),
            mean_n,
            stderr_n,
            density_indices: self.density_indices,
            density_estimates,
            seed: config.seed,
            n_traj: config.n_traj,
            step: config.step,
            scheme: config.scheme,
        })
    }

    fn record(&mut self, slot: usize, psi: &[C64], rho_slot: Option<usize>) {
        let n: f64 = psi.iter().enumerate().map(|(k, z)| k as f64 * z.norm_sqr()).sum();
        self.sum_n[slot] += n;
        self.sum_n2[slot] += n * n;
        if let Some(r) = rho_slot {
            let d = psi.len();
            let acc = &mut self.sum_rho[r];
            for i in 0..d {
                for j in 0..d {
                    acc[i * d + j] += psi[i] * psi[j].conj();
                }
            }
        }
    }
}

fn run_trajectory(
    eng: &mut Engine,
    psi0: &PureState,
    config: &QsdConfig,
    params: &ModelParams,
    index: usize,
    acc: &mut EnsembleAccumulator,
) -> Result<()> {
    let mut rng = trajectory_rng(config.seed, index);
    let channels = eng.ch.count();
    let mut noise = [ZERO; 2];
    let mut psi = psi0.amplitudes().to_vec();
    renormalize(&mut psi, config.sample_times[0])?;

    let mut next_rho = 0;
    let first = take_slot(&acc.density_indices, &mut next_rho, 0);
    acc.record(0, &psi, first);

    for (i, w) in config.sample_times.windows(2).enumerate() {
        let n = substeps(w[1] - w[0], config.step);
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            let t = w[0] + k as f64 * h;
            for z in noise.iter_mut().take(channels) {
                *z = match config.noise {
                    NoiseMode::Wiener => wiener_increment(&mut rng, h),
                    NoiseMode::Zero => ZERO,
                };
            }
            match config.scheme {
                QsdScheme::Split => eng.split_step(&mut psi, t, h, params, &noise[..channels])?,
                QsdScheme::EulerMaruyama => eng.euler_step(&mut psi, t, h, params, &noise[..channels])?,
            }
        }
        let slot = take_slot(&acc.density_indices, &mut next_rho, i + 1);
        acc.record(i + 1, &psi, slot);
    }
    Ok(())
}

fn take_slot(indices: &[usize], cursor: &mut usize, i: usize) -> Option<usize> {
    if indices.get(*cursor) == Some(&i) {
        *cursor += 1;
        Some(*cursor - 1)
    } else {
        None
    }
}

/// Simulates trajectories `block·REDUCTION_BLOCK ..` (at most
/// [`REDUCTION_BLOCK`] of them, clipped at `n_traj`) in index order.
pub fn simulate_block(psi0: &PureState, config: &QsdConfig, params: &ModelParams, block: usize) -> Result<EnsembleAccumulator> {
    params.validate()?;
    check_state(psi0, params)?;
    config.validate()?;
    let indices = config.density.resolve(config.sample_times.len())?;
    let mut acc = EnsembleAccumulator::new(config.sample_times.len(), indices, params.dim);
    let lo = block * REDUCTION_BLOCK;
    let hi = (lo + REDUCTION_BLOCK).min(config.n_traj);
    let mut eng = Engine::new(params);
    for index in lo..hi {
        run_trajectory(&mut eng, psi0, config, params, index, &mut acc)
            .map_err(|e| Error::Trajectory { index, source: Box::new(e) })?;
        acc.count += 1;
    }
    Ok(acc)
}

/// Runs the full ensemble sequentially.
pub fn run_ensemble(psi0: &PureState, config: &QsdConfig, params: &ModelParams) -> Result<TrajectoryEnsembleResult> {
    params.validate()?;
    check_state(psi0, params)?;
    config.validate()?;
    let indices = config.density.resolve(config.sample_times.len())?;
    let mut total = EnsembleAccumulator::new(config.sample_times.len(), indices, params.dim);
    for b in 0..config.n_blocks() {
        total.merge(&simulate_block(psi0, config, params, b)?);
    }
    total.finish(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockOperator;
    use crate::model::Drive;

    fn decay_params(dim: usize) -> ModelParams {
        ModelParams::new(0.0, 0.0, 0.0, dim, Drive::Cw)
    }

    #[test]
    fn renormalized_norm_is_one() {
        let mut p = ModelParams::new(1.0, 0.5, 2.0, 12, Drive::Cw);
        p.n_bath = 0.3;
        let mut psi = PureState::coherent(C64::new(0.7, -0.4), 12).unwrap();
        let mut rng = trajectory_rng(9, 0);
        for k in 0..200 {
            let noise = [wiener_increment(&mut rng, 1e-3), wiener_increment(&mut rng, 1e-3)];
            psi = qsd_step(&psi, k as f64 * 1e-3, 1e-3, &p, &noise).unwrap();
            assert!((psi.norm() - 1.0).abs() <= 1e-14);
            psi = qsd_split_step(&psi, k as f64 * 1e-3, 1e-3, &p, &noise).unwrap();
            assert!((psi.norm() - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn vacuum_is_untouched_by_dissipation_and_noise() {
        let p = ModelParams::new(2.0, 1.0, 0.0, 8, Drive::Cw);
        let vac = PureState::vacuum(8).unwrap();
        let noise = [C64::new(0.3, -0.8)];
        for out in [qsd_step(&vac, 0.0, 1e-3, &p, &noise).unwrap(), qsd_split_step(&vac, 0.0, 1e-3, &p, &noise).unwrap()] {
            assert_eq!(out.amplitudes()[0], C64::new(1.0, 0.0));
            assert!(out.amplitudes()[1..].iter().all(|z| *z == ZERO));
        }
    }

    #[test]
    fn closed_euler_step_norm_drift_is_second_order() {
        let mut p = ModelParams::new(1.5, 0.4, 1.0, 10, Drive::Cw);
        p.gamma = 0.0;
        let psi = PureState::coherent(C64::new(0.8, 0.3), 10).unwrap();
        let h = hamiltonian_matrix(&p);
        let mut drifts = Vec::new();
        for dt in [1e-3, 5e-4] {
            // raw Euler step before renormalization
            let hpsi = h.mul_vec(psi.amplitudes());
            let raw: Vec<C64> = psi.amplitudes().iter().zip(&hpsi).map(|(a, b)| a - C64::new(0.0, 1.0) * b * dt).collect();
            drifts.push(norm(&raw) - 1.0);
            let stepped = qsd_step(&psi, 0.0, dt, &p, &[ZERO]).unwrap();
            let expected = PureState::from_amplitudes(raw.iter().map(|z| z / norm(&raw)).collect()).unwrap();
            let diff = stepped.amplitudes().iter().zip(expected.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-14);
        }
        let ratio = drifts[0] / drifts[1];
        assert!((ratio - 4.0).abs() < 0.05, "ratio {ratio}");
    }

    fn hamiltonian_matrix(p: &ModelParams) -> CMatrix {
        crate::model::hamiltonian_at(0.0, p).unwrap().into_matrix()
    }

    #[test]
    fn single_zero_noise_trajectory_matches_schrodinger() {
        let mut p = ModelParams::new(3.0, 1.0, 2.0, 14, Drive::Cw);
        p.gamma = 0.0;
        let psi0 = PureState::coherent(C64::new(0.5, 0.0), 14).unwrap();
        let times = vec![0.0, 0.25, 0.5];
        let mut cfg = QsdConfig::new(1, 3, times.clone());
        cfg.noise = NoiseMode::Zero;
        cfg.step = 1e-3;
        let ens = run_ensemble(&psi0, &cfg, &p).unwrap();
        let states = evolve_schrodinger(&psi0, &times, &p, 1e-3).unwrap();
        let number = FockOperator::number(14).unwrap();
        for (i, s) in states.iter().enumerate() {
            let n = crate::fock::expectation(&number, s).unwrap().re;
            assert!((n - ens.mean_n[i]).abs() < 1e-12);
            let rho = DensityMatrix::from_pure(s);
            assert!(rho.matrix().max_abs_diff(ens.density_estimates[i].matrix()) < 1e-12);
        }
        assert_eq!(ens.stderr_n, vec![0.0; 3]);
    }

    #[test]
    fn decay_is_unbiased() {
        let p = decay_params(6);
        let times: Vec<f64> = (0..=6).map(|k| k as f64 * 0.5).collect();
        let cfg = QsdConfig { density: DensitySampling::None, step: 1e-3, ..QsdConfig::new(400, 17, times) };
        let ens = run_ensemble(&PureState::fock(6, 1).unwrap(), &cfg, &p).unwrap();
        for i in 1..ens.sample_times.len() {
            let exact = (-ens.sample_times[i]).exp();
            assert!((ens.mean_n[i] - exact).abs() <= 4.0 * ens.stderr_n[i], "t={} {} vs {}", ens.sample_times[i], ens.mean_n[i], exact);
        }
    }

    #[test]
    fn repeat_runs_are_bit_identical_and_blocks_compose() {
        let p = ModelParams::new(2.0, 1.0, 1.5, 10, Drive::Cw);
        let cfg = QsdConfig { step: 2e-3, ..QsdConfig::new(37, 5, vec![0.0, 0.3, 0.6]) };
        let psi0 = PureState::vacuum(10).unwrap();
        let a = run_ensemble(&psi0, &cfg, &p).unwrap();
        let b = run_ensemble(&psi0, &cfg, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(cfg.n_blocks(), 3);
        let mut acc = simulate_block(&psi0, &cfg, &p, 0).unwrap();
        for blk in 1..3 {
            acc.merge(&simulate_block(&psi0, &cfg, &p, blk).unwrap());
        }
        assert_eq!(acc.count, 37);
        assert_eq!(acc.finish(&cfg).unwrap(), a);
    }

    #[test]
    fn density_estimates_are_valid_states() {
        let mut p = ModelParams::new(2.0, 1.0, 1.5, 10, Drive::Cw);
        p.n_bath = 0.2;
        let cfg = QsdConfig { step: 2e-3, ..QsdConfig::new(24, 8, vec![0.0, 0.5, 1.0]) };
        let ens = run_ensemble(&PureState::vacuum(10).unwrap(), &cfg, &p).unwrap();
        for rho in &ens.density_estimates {
            rho.validate(1e-10, 1e-12, -1e-10).unwrap();
        }
    }

    #[test]
    fn density_sampling_subset() {
        let p = decay_params(5);
        let cfg = QsdConfig { density: DensitySampling::Indices(vec![1, 3]), ..QsdConfig::new(3, 1, vec![0.0, 0.1, 0.2, 0.3]) };
        let ens = run_ensemble(&PureState::fock(5, 2).unwrap(), &cfg, &p).unwrap();
        assert_eq!(ens.density_indices, vec![1, 3]);
        assert!(ens.density_at(3).is_some() && ens.density_at(2).is_none());
        let bad = QsdConfig { density: DensitySampling::Indices(vec![4]), ..cfg.clone() };
        assert!(run_ensemble(&PureState::fock(5, 2).unwrap(), &bad, &p).is_err());
    }

    #[test]
    fn config_validation() {
        let p = decay_params(4);
        let psi = PureState::vacuum(4).unwrap();
        assert!(run_ensemble(&psi, &QsdConfig::new(0, 1, vec![0.0]), &p).is_err());
        assert!(run_ensemble(&psi, &QsdConfig::new(1, 1, vec![]), &p).is_err());
        let neg = QsdConfig { step: -1.0, ..QsdConfig::new(1, 1, vec![0.0]) };
        assert!(run_ensemble(&psi, &neg, &p).is_err());
        assert!(qsd_step(&psi, 0.0, 1e-3, &p, &[ZERO, ZERO]).is_err());
    }

    #[test]
    fn collapse_is_reported_with_trajectory_index() {
        // one Euler step of length 2 maps |1⟩ to exactly zero
        let p = decay_params(4);
        let cfg = QsdConfig {
            step: 2.0,
            scheme: QsdScheme::EulerMaruyama,
            noise: NoiseMode::Zero,
            ..QsdConfig::new(2, 1, vec![0.0, 2.0])
        };
        let err = run_ensemble(&PureState::fock(4, 1).unwrap(), &cfg, &p).unwrap_err();
        match err {
            Error::Trajectory { index, source } => {
                assert_eq!(index, 0);
                assert!(matches!(*source, Error::NormCollapse { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
