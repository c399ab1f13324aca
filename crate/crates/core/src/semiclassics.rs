//! Mean-field amplitude equation
//!
//! dα/dt = −i[Δ + χ + 2|α|²χ]α + i f(t) Ω α* − γα,
//!
//! its threshold, cw steady states and a stroboscopic map for pulsed drive.
//!
//! Writing α = √n e^{iφ} and ψ = Φ − 2φ, a nonzero cw fixed point of the
//! equation above requires
//!
//! sin ψ = −J^{−1/2},  Δ + χ + 2nχ = s·γ√(J−1),  s = ±1,
//!
//! with J = |Ω|²/γ². Solutions are always checked against the right-hand side
//! before they are returned; the closed form n = (γ/2χ)[Δ/γ + √(J−1)] is
//! reported next to them for comparison.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::master::{substeps, validate_grid};
use crate::model::{Drive, ModelParams};
use crate::C64;

pub const DEFAULT_CLASSICAL_STEP: f64 = 1e-3;

/// |α| above which an integration is abandoned.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Residual bound for accepting a steady state.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Relative tolerance for flagging a disagreement with the closed-form intensity.
pub const PAPER_AGREEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalAmplitude {
    pub alpha: C64,
}

impl ClassicalAmplitude {
    pub fn new(alpha: C64) -> Self {
        ClassicalAmplitude { alpha }
    }

    pub fn from_polar(n: f64, phase: f64) -> Self {
        ClassicalAmplitude { alpha: C64::from_polar(n.sqrt(), phase) }
    }

    /// n = |α|²
    pub fn n(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn phase(&self) -> f64 {
        self.alpha.arg()
    }
}

/// Right-hand side of the amplitude equation.
pub fn semiclassical_rhs(alpha: C64, t: f64, params: &ModelParams) -> C64 {
    let detuning = params.delta + params.chi + 2.0 * alpha.norm_sqr() * params.chi;
    let i = C64::new(0.0, 1.0);
    -i * detuning * alpha + i * params.envelope(t) * params.omega() * alpha.conj() - params.gamma * alpha
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalTrace {
    pub times: Vec<f64>,
    pub alphas: Vec<C64>,
}

impl ClassicalTrace {
    pub fn last(&self) -> C64 {
        *self.alphas.last().expect("trace is never empty")
    }
}

fn rk4(alpha: C64, t: f64, h: f64, params: &ModelParams) -> C64 {
    let k1 = semiclassical_rhs(alpha, t, params);
    let k2 = semiclassical_rhs(alpha + k1 * (0.5 * h), t + 0.5 * h, params);
    let k3 = semiclassical_rhs(alpha + k2 * (0.5 * h), t + 0.5 * h, params);
    let k4 = semiclassical_rhs(alpha + k3 * h, t + h, params);
    alpha + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0)
}

/// Fixed-step RK4 integration from `alpha0` at `t_grid[0]`, sampled on `t_grid`.
pub fn evolve_classical(alpha0: C64, t_grid: &[f64], params: &ModelParams, step: f64) -> Result<ClassicalTrace> {
    params.validate()?;
    validate_grid(t_grid)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid(format!("step must be positive, got {step}")));
    }
    if !(alpha0.re.is_finite() && alpha0.im.is_finite()) {
        return Err(Error::invalid("initial amplitude must be finite"));
    }
    let mut alpha = alpha0;
    let mut alphas = Vec::with_capacity(t_grid.len());
    alphas.push(alpha);
    for w in t_grid.windows(2) {
        let n = substeps(w[1] - w[0], step);
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            let t = w[0] + k as f64 * h;
            alpha = rk4(alpha, t, h, params);
            let amp = alpha.norm();
            if !(amp <= DIVERGENCE_LIMIT) {
                return Err(Error::Divergence { time: t + h, amplitude: amp });
            }
        }
        alphas.push(alpha);
    }
    Ok(ClassicalTrace { times: t_grid.to_vec(), alphas })
}

/// Drive threshold J_th = 1 + ((Δ + χ)/γ)² of the origin's linear stability.
pub fn threshold_j(params: &ModelParams) -> f64 {
    let d = (params.delta + params.chi) / params.gamma;
    1.0 + d * d
}

/// Closed form J_th = 1 + (Δ/γ)², which ignores the χ shift of the detuning.
pub fn paper_threshold_j(params: &ModelParams) -> f64 {
    let d = params.delta / params.gamma;
    1.0 + d * d
}

/// J = |Ω|²/γ²
pub fn drive_j(params: &ModelParams) -> f64 {
    params.drive_intensity
}

/// Growth rate of the origin under the linearized cw flow: √(J − ((Δ+χ)/γ)²)γ − γ
/// (negative means stable). Complex-rate (spiral) cases return −γ.
pub fn origin_growth_rate(params: &ModelParams) -> f64 {
    let d = params.delta + params.chi;
    let disc = params.drive_intensity * params.gamma * params.gamma - d * d;
    if disc > 0.0 {
        disc.sqrt() - params.gamma
    } else {
        -params.gamma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Effective detuning +γ√(J−1).
    Upper,
    /// Effective detuning −γ√(J−1).
    Lower,
}

impl Branch {
    pub fn sign(&self) -> f64 {
        match self {
            Branch::Upper => 1.0,
            Branch::Lower => -1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Branch::Upper => "upper",
            Branch::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateSolution {
    pub n: f64,
    /// φ and φ + π, wrapped to (−π, π].
    pub phases: [f64; 2],
    pub j: f64,
    pub branch: Branch,
    /// |rhs| at √n·e^{iφ} for each phase.
    pub residuals: [f64; 2],
    /// sin(Φ − 2φ)
    pub sin_relation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyFlag {
    BelowThreshold,
    /// Candidates existed but none passed the residual check.
    Inconsistent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateReport {
    pub j: f64,
    pub threshold_j: f64,
    pub paper_threshold_j: f64,
    pub solutions: Vec<SteadyStateSolution>,
    pub flag: Option<SteadyFlag>,
    /// n = (γ/2χ)[Δ/γ + √(J−1)], or NaN below J = 1.
    pub paper_n: f64,
    /// True when no verified solution reproduces `paper_n`.
    pub paper_disagreement: bool,
}

impl SteadyStateReport {
    /// Bistability shows up as more than one verified nonzero solution.
    pub fn is_bistable(&self) -> bool {
        self.solutions.len() > 1
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Nonzero cw steady states of the amplitude equation.
pub fn steady_states(params: &ModelParams) -> Result<SteadyStateReport> {
    params.validate()?;
    if params.drive != Drive::Cw {
        return Err(Error::invalid("steady states need a cw drive"));
    }
    if params.chi == 0.0 {
        return Err(Error::invalid("steady states need a nonzero Kerr strength"));
    }
    if !(params.gamma > 0.0) {
        return Err(Error::invalid("steady states need gamma > 0"));
    }
    let j = drive_j(params);
    let g = params.gamma;
    let mut report = SteadyStateReport {
        j,
        threshold_j: threshold_j(params),
        paper_threshold_j: paper_threshold_j(params),
        solutions: Vec::new(),
        flag: None,
        paper_n: f64::NAN,
        paper_disagreement: false,
    };
    if j <= 1.0 {
        report.flag = Some(SteadyFlag::BelowThreshold);
        return Ok(report);
    }
    let root = (j - 1.0).sqrt();
    report.paper_n = g / (2.0 * params.chi) * (params.delta / g + root);

    let mut candidates = 0;
    for branch in [Branch::Upper, Branch::Lower] {
        let s = branch.sign();
        let n = (s * g * root - params.delta - params.chi) / (2.0 * params.chi);
        if !(n > 0.0) {
            continue;
        }
        candidates += 1;
        let psi = (-1.0 / j.sqrt()).atan2(s * (root / j.sqrt()));
        let phi = wrap_phase(0.5 * (params.drive_phase - psi));
        let phases = [phi, wrap_phase(phi + PI)];
        let residuals = phases.map(|p| semiclassical_rhs(C64::from_polar(n.sqrt(), p), 0.0, params).norm());
        if residuals.iter().all(|r| *r <= RESIDUAL_TOL) {
            report.solutions.push(SteadyStateSolution {
                n,
                phases,
                j,
                branch,
                residuals,
                sin_relation: (params.drive_phase - 2.0 * phi).sin(),
            });
        }
    }
    if report.solutions.is_empty() {
        report.flag = Some(if candidates > 0 { SteadyFlag::Inconsistent } else { SteadyFlag::BelowThreshold });
    }
    let tol = PAPER_AGREEMENT_TOL * report.paper_n.abs().max(1.0);
    report.paper_disagreement = !report.solutions.iter().any(|s| (s.n - report.paper_n).abs() <= tol);
    Ok(report)
}

/// Amplitude sampled at t₀ + τ/2 + kτ, k = 0…n_periods−1, i.e. midway
/// between consecutive pulses, starting from `alpha0` at t = 0.
pub fn stroboscopic_map(alpha0: C64, params: &ModelParams, n_periods: usize, step: f64) -> Result<Vec<C64>> {
    let train = params.pulse().ok_or_else(|| Error::invalid("stroboscopic map needs a pulsed drive"))?;
    if n_periods == 0 {
        return Err(Error::invalid("n_periods must be at least 1"));
    }
    let first = train.t0 + 0.5 * train.separation;
    let mut grid = Vec::with_capacity(n_periods + 1);
    grid.push(0.0);
    grid.extend((0..n_periods).map(|k| first + k as f64 * train.separation));
    let trace = evolve_classical(alpha0, &grid, params, step)?;
    Ok(trace.alphas[1..].to_vec())
}

/// Largest distance between consecutive points among the last `tail` entries.
pub fn tail_spread(points: &[C64], tail: usize) -> f64 {
    let start = points.len().saturating_sub(tail + 1);
    points[start..].windows(2).map(|w| (w[1] - w[0]).norm()).fold(0.0, f64::max)
}
