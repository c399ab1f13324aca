//! Deterministic integration of the Lindblad master equation
//!
//! dρ/dt = −i[H(t), ρ] + Σᵢ (Lᵢ ρ Lᵢ† − ½{Lᵢ†Lᵢ, ρ}),
//! L₁ = √((N+1)γ) a, L₂ = √(Nγ) a†.
//!
//! The integrator is a fixed-step fourth-order Runge–Kutta in the integrating
//! factor (Lawson) form: the static phases e^{−i(E_m − E_n)t} of
//! H₀ = Δa†a + χ(a†a)² are applied exactly and the drive and dissipators are
//! advanced by the classical RK4 tableau. The diagonal of the integrating
//! factor is one, so every stage preserves the trace exactly.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;

use crate::banded::Structure;
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockOperator};
use crate::linalg::CMatrix;
use crate::model::{hamiltonian_at, ModelParams};
use crate::C64;

pub const DEFAULT_MASTER_STEP: f64 = 1.25e-4;

/// Aborts an evolution when the highest Fock levels become populated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationGuard {
    pub levels: usize,
    pub max_population: f64,
}

impl Default for TruncationGuard {
    fn default() -> Self {
        TruncationGuard { levels: 5, max_population: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    pub step: f64,
    /// Smallest eigenvalue tolerated at a sample time before aborting.
    pub positivity_floor: f64,
    pub truncation_guard: Option<TruncationGuard>,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions { step: DEFAULT_MASTER_STEP, positivity_floor: -1e-6, truncation_guard: Some(TruncationGuard::default()) }
    }
}

impl MasterOptions {
    pub fn with_step(step: f64) -> Self {
        MasterOptions { step, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub mean_n: Vec<f64>,
    pub step: f64,
    pub method: &'static str,
}

pub const METHOD_TAG: &str = "lawson-rk4";

fn check_dims(rho: &DensityMatrix, params: &ModelParams) -> Result<()> {
    if rho.dim() != params.dim {
        return Err(Error::DimensionMismatch { expected: params.dim, found: rho.dim() });
    }
    Ok(())
}

/// Right-hand side of the master equation at time `t`.
pub fn lindblad_rhs(rho: &DensityMatrix, t: f64, params: &ModelParams) -> Result<CMatrix> {
    params.validate()?;
    check_dims(rho, params)?;
    let s = Structure::new(params);
    let mut out = vec![C64::new(0.0, 0.0); params.dim * params.dim];
    s.master_rhs(params.envelope(t), rho.matrix().as_slice(), &mut out);
    Ok(CMatrix::from_row_major(params.dim, out))
}

/// Same right-hand side assembled from dense operator products. Slow; kept
/// as an independent reference for [`lindblad_rhs`].
pub fn lindblad_rhs_dense(rho: &DensityMatrix, t: f64, params: &ModelParams) -> Result<CMatrix> {
    params.validate()?;
    check_dims(rho, params)?;
    let h = hamiltonian_at(t, params)?;
    let r = rho.matrix();
    let mut out = h.matrix().commutator(r).scale(C64::new(0.0, -1.0));
    let a = FockOperator::annihilation(params.dim)?;
    let channels = [(params.decay_rate(), a.clone()), (params.excitation_rate(), a.adjoint())];
    for (rate, op) in channels {
        if rate == 0.0 {
            continue;
        }
        let l = op.matrix().scale(C64::new(rate.sqrt(), 0.0));
        let ld = l.adjoint();
        let ldl = ld.matmul(&l);
        let jump = l.matmul(r).matmul(&ld);
        let anti = &ldl.matmul(r) + &r.matmul(&ldl);
        out = &out + &(&jump - &anti.scale(C64::new(0.5, 0.0)));
    }
    Ok(out)
}

/// Fixed-step integrating-factor RK4 for the master equation.
struct Stepper {
    s: Structure,
    cached_h: f64,
    full: Vec<C64>,
    half: Vec<C64>,
    k1: Vec<C64>,
    k2: Vec<C64>,
    k3: Vec<C64>,
    k4: Vec<C64>,
    tmp: Vec<C64>,
}

impl Stepper {
    fn new(params: &ModelParams) -> Self {
        let s = Structure::new(params);
        let n = params.dim * params.dim;
        let z = vec![C64::new(0.0, 0.0); n];
        Stepper {
            s,
            cached_h: f64::NAN,
            full: z.clone(),
            half: z.clone(),
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step(&mut self, rho: &mut [C64], t: f64, h: f64, params: &ModelParams) {
        if h != self.cached_h {
            self.full = self.s.master_phases(h);
            self.half = self.s.master_phases(0.5 * h);
            self.cached_h = h;
        }
        let f0 = params.envelope(t);
        let fm = params.envelope(t + 0.5 * h);
        let f1 = params.envelope(t + h);
        let hh = 0.5 * h;

        self.s.master_nonstiff(f0, rho, &mut self.k1);

        for i in 0..rho.len() {
            self.tmp[i] = self.half[i] * (rho[i] + self.k1[i] * hh);
        }
        self.s.master_nonstiff(fm, &self.tmp, &mut self.k2);

        for i in 0..rho.len() {
            self.tmp[i] = self.half[i] * rho[i] + self.k2[i] * hh;
        }
        self.s.master_nonstiff(fm, &self.tmp, &mut self.k3);

        for i in 0..rho.len() {
            self.tmp[i] = self.full[i] * rho[i] + self.half[i] * self.k3[i] * h;
        }
        self.s.master_nonstiff(f1, &self.tmp, &mut self.k4);

        let h6 = h / 6.0;
        for i in 0..rho.len() {
            let incr = self.full[i] * self.k1[i] + self.half[i] * (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i];
            rho[i] = self.full[i] * rho[i] + incr * h6;
        }
    }
}

pub(crate) fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::invalid("empty sample schedule"));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("sample times must be finite"));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sample times must be strictly increasing"));
    }
    Ok(())
}

/// Number of equal substeps of nominal size `step` covering `span`.
pub(crate) fn substeps(span: f64, step: f64) -> usize {
    ((span / step) - 1e-9).ceil().max(1.0) as usize
}

/// Evolves `rho0`, given at `t_grid[0]`, and records the state at every grid time.
pub fn evolve_master(
    rho0: &DensityMatrix,
    t_grid: &[f64],
    params: &ModelParams,
    options: &MasterOptions,
) -> Result<EvolutionResult> {
    params.validate()?;
    check_dims(rho0, params)?;
    validate_grid(t_grid)?;
    if !(options.step > 0.0 && options.step.is_finite()) {
        return Err(Error::invalid(format!("step must be positive, got {}", options.step)));
    }

    let d = params.dim;
    let mut stepper = Stepper::new(params);
    let mut rho = rho0.matrix().clone();
    let mut states = Vec::with_capacity(t_grid.len());
    let mut mean_n = Vec::with_capacity(t_grid.len());

    let mut record = |rho: &CMatrix, t: f64| -> Result<()> {
        let state = DensityMatrix::from_matrix(rho.clone())?;
        if !state.is_positive_within(options.positivity_floor) {
            return Err(Error::PositivityViolation { time: t, min_eigenvalue: state.min_eigenvalue() });
        }
        if let Some(g) = options.truncation_guard {
            let pop = state.top_population(g.levels);
            if pop >= g.max_population {
                return Err(Error::TruncationLeak { time: t, levels: g.levels, population: pop });
            }
        }
        mean_n.push(state.mean_number());
        states.push(state);
        Ok(())
    };

    record(&rho, t_grid[0])?;
    for w in t_grid.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let n = substeps(tb - ta, options.step);
        let h = (tb - ta) / n as f64;
        for k in 0..n {
            let t = ta + k as f64 * h;
            stepper.step(rho.as_mut_slice(), t, h, params);
            rho.symmetrize();
        }
        debug_assert_eq!(rho.dim(), d);
        record(&rho, tb)?;
    }

    Ok(EvolutionResult { times: t_grid.to_vec(), states, mean_n, step: options.step, method: METHOD_TAG })
}

/// Photon-number distribution P(n) = Re ρ_{nn}.
pub fn number_distribution(rho: &DensityMatrix) -> Vec<f64> {
    rho.matrix().diagonal().iter().map(|z| z.re).collect()
}

/// Standard deviation of a (not necessarily normalized) number distribution.
pub fn distribution_std(p: &[f64]) -> f64 {
    let total: f64 = p.iter().sum();
    let mean: f64 = p.iter().enumerate().map(|(n, x)| n as f64 * x).sum::<f64>() / total;
    let var: f64 = p.iter().enumerate().map(|(n, x)| (n as f64 - mean).powi(2) * x).sum::<f64>() / total;
    var.max(0.0).sqrt()
}

impl EvolutionResult {
    /// Index of the smallest (or largest) ⟨n⟩ among samples with time in `[t_from, t_to]`.
    pub fn extremum_index(&self, t_from: f64, t_to: f64, largest: bool) -> Option<usize> {
        extremum_index(&self.times, &self.mean_n, t_from, t_to, largest)
    }
}

pub fn extremum_index(times: &[f64], values: &[f64], t_from: f64, t_to: f64, largest: bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (&t, &v)) in times.iter().zip(values).enumerate() {
        if t < t_from || t > t_to {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) if (largest && v > values[b]) || (!largest && v < values[b]) => Some(i),
            keep => keep,
        };
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::PureState;
    use crate::model::{Drive, PulseTrain};
    use core::f64::consts::PI;

    fn fig1b(dim: usize) -> ModelParams {
        ModelParams::new(20.0, 1.0, 20.0, dim, Drive::Pulsed(PulseTrain::new(0.5, 4.0 * PI / 5.0)))
    }

    /// Deterministic pseudo-random Hermitian unit-trace positive matrix.
    fn random_rho(dim: usize, seed: u64) -> DensityMatrix {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let g = CMatrix::from_fn(dim, |_, _| C64::new(next(), next()));
        let m = g.matmul(&g.adjoint());
        let tr = m.trace().re;
        DensityMatrix::from_matrix(m.scale(C64::new(1.0 / tr, 0.0))).unwrap()
    }

    #[test]
    fn vacuum_is_fixed_point_without_drive() {
        let p = ModelParams::new(3.0, 1.0, 0.0, 8, Drive::Cw);
        let rhs = lindblad_rhs(&DensityMatrix::vacuum(8).unwrap(), 0.0, &p).unwrap();
        assert_eq!(rhs.max_abs(), 0.0);
    }

    #[test]
    fn banded_rhs_matches_dense_reference() {
        for (seed, n_bath, phase) in [(1u64, 0.0, 0.0), (2, 0.3, 1.1), (3, 2.0, -0.4)] {
            let mut p = fig1b(9);
            p.n_bath = n_bath;
            p.drive_phase = phase;
            let rho = random_rho(9, seed);
            for t in [0.0, 1.5, 2.2] {
                let fast = lindblad_rhs(&rho, t, &p).unwrap();
                let dense = lindblad_rhs_dense(&rho, t, &p).unwrap();
                assert!(fast.max_abs_diff(&dense) < 1e-11, "seed {seed} t {t}");
            }
        }
    }

    #[test]
    fn rhs_is_traceless_and_hermitian() {
        let mut p = fig1b(10);
        p.n_bath = 0.5;
        for seed in 0..100u64 {
            let rho = random_rho(10, seed);
            let rhs = lindblad_rhs(&rho, 1.0 + seed as f64 * 0.01, &p).unwrap();
            assert!(rhs.trace().norm() <= 1e-12);
            assert!(rhs.hermiticity_defect() <= 1e-12);
        }
    }

    #[test]
    fn zero_temperature_skips_excitation_channel() {
        let p = fig1b(8);
        let mut tiny = p;
        tiny.n_bath = 0.0;
        let rho = random_rho(8, 7);
        assert_eq!(lindblad_rhs(&rho, 0.4, &p).unwrap(), lindblad_rhs(&rho, 0.4, &tiny).unwrap());
    }

    #[test]
    fn amplitude_damping_decay() {
        let p = ModelParams::new(0.0, 0.0, 0.0, 10, Drive::Cw);
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * 0.1).collect();
        let res = evolve_master(&DensityMatrix::fock(10, 1).unwrap(), &grid, &p, &MasterOptions::default()).unwrap();
        for (t, n) in res.times.iter().zip(&res.mean_n) {
            assert!((n - (-t).exp()).abs() <= 1e-6, "t={t}");
        }
        assert_eq!(res.method, METHOD_TAG);
    }

    #[test]
    fn invariants_and_parity_blocks_along_driven_run() {
        let p = fig1b(24);
        let grid: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
        let opts = MasterOptions { truncation_guard: None, ..MasterOptions::default() };
        let res = evolve_master(&DensityMatrix::vacuum(24).unwrap(), &grid, &p, &opts).unwrap();
        for (s, n) in res.states.iter().zip(&res.mean_n) {
            assert!((s.trace() - 1.0).abs() <= 1e-9);
            assert!(s.hermiticity_defect() <= 1e-10);
            assert!(s.parity_commutator_defect() <= 1e-8);
            assert!((s.mean_number() - n).abs() <= 1e-12);
        }
        let last = res.states.last().unwrap();
        assert!(last.min_eigenvalue() >= -1e-8);
    }

    #[test]
    fn evolution_is_linear_in_initial_state() {
        let mut p = fig1b(12);
        p.n_bath = 0.2;
        let grid = [0.0, 0.5, 1.3, 2.0];
        let opts = MasterOptions { truncation_guard: None, ..MasterOptions::default() };
        let r1 = random_rho(12, 11);
        let r2 = DensityMatrix::from_pure(&PureState::coherent(C64::new(0.5, 0.2), 12).unwrap());
        let w = 0.3;
        let mixed = r1.mix(&r2, w).unwrap();
        let e1 = evolve_master(&r1, &grid, &p, &opts).unwrap();
        let e2 = evolve_master(&r2, &grid, &p, &opts).unwrap();
        let em = evolve_master(&mixed, &grid, &p, &opts).unwrap();
        for i in 0..grid.len() {
            let combo = e1.states[i].mix(&e2.states[i], w).unwrap();
            assert!(combo.matrix().max_abs_diff(em.states[i].matrix()) <= 1e-9);
        }
    }

    #[test]
    fn truncation_guard_trips_for_tiny_space() {
        let p = fig1b(6);
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let err = evolve_master(&DensityMatrix::vacuum(6).unwrap(), &grid, &p, &MasterOptions::default()).unwrap_err();
        assert!(matches!(err, Error::TruncationLeak { .. }));
    }

    #[test]
    fn oversized_step_reports_positivity_or_blowup() {
        // stiff phases are exact, but the drive coupling is not; a huge step must not pass silently
        let p = fig1b(30);
        let grid = [0.0, 1.0, 2.0];
        let opts = MasterOptions { step: 0.5, truncation_guard: None, ..MasterOptions::default() };
        let res = evolve_master(&DensityMatrix::vacuum(30).unwrap(), &grid, &p, &opts);
        assert!(matches!(res, Err(Error::PositivityViolation { .. })));
    }

    #[test]
    fn bad_schedules_are_rejected() {
        let p = fig1b(6);
        let rho = DensityMatrix::vacuum(6).unwrap();
        assert!(evolve_master(&rho, &[], &p, &MasterOptions::default()).is_err());
        assert!(evolve_master(&rho, &[0.0, 0.0], &p, &MasterOptions::default()).is_err());
        assert!(evolve_master(&rho, &[0.0, 1.0], &p, &MasterOptions::with_step(0.0)).is_err());
        let wrong = DensityMatrix::vacuum(5).unwrap();
        assert!(matches!(evolve_master(&wrong, &[0.0], &p, &MasterOptions::default()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn number_distribution_examples() {
        let p = number_distribution(&DensityMatrix::fock(5, 2).unwrap());
        assert_eq!(p, vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        let p = number_distribution(&DensityMatrix::maximally_mixed(6, 4).unwrap());
        for (n, x) in p.iter().enumerate() {
            assert_eq!(*x, if n < 4 { 0.25 } else { 0.0 });
        }
        assert!((distribution_std(&p) - (1.25f64).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn substep_count() {
        assert_eq!(substeps(0.1, 1e-3), 100);
        assert_eq!(substeps(0.1 + 1e-13, 1e-3), 100);
        assert_eq!(substeps(0.1002, 1e-3), 101);
        assert_eq!(substeps(1e-5, 1e-3), 1);
    }
}
