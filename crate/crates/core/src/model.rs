//! Physical parameters, the Gaussian pulse train and the rotating-frame
//! Hamiltonian H = Δ a†a + χ (a†a)² + f(t)(Ω a†² + Ω* a²).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)] // inherent when std is in the build graph
use num_traits::Float;

use crate::error::{Error, Result};
use crate::fock::FockOperator;
use crate::linalg::CMatrix;
use crate::C64;

/// Pulses whose centers lie more than this many durations from `t` are dropped
/// by the automatic pulse count (e^{−64} ≈ 1.6e−28).
pub const AUTO_PULSE_REACH: f64 = 8.0;

/// Time-dependent drive envelope f(t).
pub trait Envelope {
    fn value(&self, t: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseCount {
    /// Every pulse near enough to matter at the evaluation time.
    Auto,
    Fixed(usize),
}

/// Train of Gaussian pulses f(t) = Σₙ exp(−(t − t₀ − nτ)²/T²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrain {
    /// Center of the first pulse.
    pub t0: f64,
    /// Pulse duration T.
    pub duration: f64,
    /// Pulse separation τ.
    pub separation: f64,
    pub count: PulseCount,
}

impl PulseTrain {
    /// Train with automatic pulse count and the first pulse centered at 3T.
    pub fn new(duration: f64, separation: f64) -> Self {
        PulseTrain { t0: 3.0 * duration, duration, separation, count: PulseCount::Auto }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid(format!("pulse duration must be positive, got {}", self.duration)));
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return Err(Error::invalid(format!("pulse separation must be positive, got {}", self.separation)));
        }
        if !self.t0.is_finite() {
            return Err(Error::invalid("pulse t0 must be finite"));
        }
        if self.count == PulseCount::Fixed(0) {
            return Err(Error::invalid("pulse count must be at least 1"));
        }
        Ok(())
    }

    /// τ/T
    pub fn ratio(&self) -> f64 {
        self.separation / self.duration
    }

    fn index_range(&self, t: f64) -> (usize, usize) {
        match self.count {
            PulseCount::Fixed(n) => (0, n),
            PulseCount::Auto => {
                let reach = AUTO_PULSE_REACH * self.duration;
                let lo = ((t - self.t0 - reach) / self.separation).ceil();
                let hi = ((t - self.t0 + reach) / self.separation).floor();
                if hi < 0.0 {
                    return (0, 0);
                }
                (lo.max(0.0) as usize, hi as usize + 1)
            }
        }
    }
}

impl Envelope for PulseTrain {
    fn value(&self, t: f64) -> f64 {
        let (lo, hi) = self.index_range(t);
        let inv_t2 = 1.0 / (self.duration * self.duration);
        let mut f = 0.0;
        for n in lo..hi {
            let d = t - self.t0 - n as f64 * self.separation;
            f += (-d * d * inv_t2).exp();
        }
        f
    }
}

/// Drive envelope: continuous wave (f ≡ 1) or a Gaussian pulse train.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Cw,
    Pulsed(PulseTrain),
}

impl Envelope for Drive {
    fn value(&self, t: f64) -> f64 {
        match self {
            Drive::Cw => 1.0,
            Drive::Pulsed(p) => p.value(t),
        }
    }
}

/// Envelope of a pulse train at time `t`.
pub fn pulse_envelope(t: f64, train: &PulseTrain) -> f64 {
    train.value(t)
}

/// Full parameter set. Rates are in units of γ; the drive amplitude is
/// Ω = √I·e^{iΦ}·γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Detuning Δ = ω₀ − ω/2.
    pub delta: f64,
    /// Kerr strength χ.
    pub chi: f64,
    /// I = |Ω|²/γ².
    pub drive_intensity: f64,
    /// Φ in radians.
    pub drive_phase: f64,
    pub gamma: f64,
    /// Mean thermal quanta N of the bath.
    pub n_bath: f64,
    /// Fock truncation D.
    pub dim: usize,
    pub drive: Drive,
}

impl ModelParams {
    /// Parameters with γ = 1, N = 0 and real Ω of magnitude `omega`.
    pub fn new(delta: f64, chi: f64, omega: f64, dim: usize, drive: Drive) -> Self {
        ModelParams {
            delta,
            chi,
            drive_intensity: omega * omega,
            drive_phase: 0.0,
            gamma: 1.0,
            n_bath: 0.0,
            dim,
            drive,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidDimension { dim: self.dim, min: 2 });
        }
        let finite = [self.delta, self.chi, self.drive_intensity, self.drive_phase, self.gamma, self.n_bath];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        // γ = 0 is accepted for closed-system checks.
        if self.gamma < 0.0 {
            return Err(Error::invalid(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if self.n_bath < 0.0 {
            return Err(Error::invalid(format!("n_bath must be non-negative, got {}", self.n_bath)));
        }
        if self.drive_intensity < 0.0 {
            return Err(Error::invalid(format!("drive intensity must be non-negative, got {}", self.drive_intensity)));
        }
        if let Drive::Pulsed(p) = &self.drive {
            p.validate()?;
        }
        Ok(())
    }

    /// Complex drive amplitude Ω.
    pub fn omega(&self) -> C64 {
        C64::from_polar(self.drive_intensity.sqrt() * self.gamma, self.drive_phase)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.drive.value(t)
    }

    /// Decay rate of channel L₁ = √((N+1)γ) a.
    pub fn decay_rate(&self) -> f64 {
        (self.n_bath + 1.0) * self.gamma
    }

    /// Rate of channel L₂ = √(Nγ) a†; zero at zero temperature.
    pub fn excitation_rate(&self) -> f64 {
        self.n_bath * self.gamma
    }

    pub fn pulse(&self) -> Option<&PulseTrain> {
        match &self.drive {
            Drive::Pulsed(p) => Some(p),
            Drive::Cw => None,
        }
    }
}

/// Static part Δ a†a + χ (a†a)².
pub fn static_hamiltonian(params: &ModelParams) -> Result<FockOperator> {
    let n = FockOperator::number(params.dim)?;
    let k = FockOperator::kerr(params.dim)?;
    n.scale(C64::new(params.delta, 0.0)).plus(&k.scale(C64::new(params.chi, 0.0)))
}

/// Parametric operator Ω a†² + Ω* a², multiplied by f(t) in the Hamiltonian.
pub fn parametric_operator(params: &ModelParams) -> Result<FockOperator> {
    let a = FockOperator::annihilation(params.dim)?;
    let a2 = a.compose(&a)?;
    let omega = params.omega();
    a2.adjoint().scale(omega).plus(&a2.scale(omega.conj()))
}

/// Rotating-frame Hamiltonian H(t) as a dense operator.
pub fn hamiltonian_at(t: f64, params: &ModelParams) -> Result<FockOperator> {
    params.validate()?;
    let f = params.envelope(t);
    let h0 = static_hamiltonian(params)?;
    let v = parametric_operator(params)?;
    let mut m: CMatrix = h0.plus(&v.scale(C64::new(f, 0.0)))?.into_matrix();
    // exact Hermiticity: the diagonal is real by construction, the band pairs are conjugates
    m.symmetrize();
    FockOperator::from_matrix(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Regular,
    BistableProne,
    ChaoticCandidate,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::Regular => "regular",
            Regime::BistableProne => "bistable-prone",
            Regime::ChaoticCandidate => "chaotic-candidate",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One tested inequality of the regime criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCheck {
    pub name: &'static str,
    pub value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Set for Δ = 0, which sits on the boundary between the criteria.
    pub boundary_warning: bool,
    pub checks: Vec<RegimeCheck>,
}

impl RegimeReport {
    /// One-line description: label followed by each tested inequality.
    pub fn summary(&self) -> String {
        let mut s = String::from(self.regime.label());
        for c in &self.checks {
            s.push_str(&format!("; {}={} {}", c.name, c.value, if c.passed { "pass" } else { "fail" }));
        }
        if self.boundary_warning {
            s.push_str("; warning: delta=0 is a boundary case");
        }
        s.push_str("; note: |omega|~|delta| band [1/2, 2] is heuristic");
        s
    }
}

/// Lower and upper factor bounding |Ω|/|Δ| for the chaos criterion Ω ≃ |Δ|.
pub const OMEGA_DELTA_BAND: (f64, f64) = (0.5, 2.0);

/// Heuristic regime label from the detuning sign, |Ω| ≃ |Δ| and π/2 ≤ τ/T ≤ 2π.
pub fn classify_regime(params: &ModelParams) -> RegimeReport {
    let delta = params.delta / params.gamma;
    let omega = params.omega().norm() / params.gamma;
    let mut checks = Vec::new();
    checks.push(RegimeCheck { name: "delta/gamma<0", value: delta, passed: delta < 0.0 });

    if delta >= 0.0 {
        return RegimeReport { regime: Regime::Regular, boundary_warning: delta == 0.0, checks };
    }

    let ratio = omega / delta.abs();
    let omega_ok = ratio >= OMEGA_DELTA_BAND.0 && ratio <= OMEGA_DELTA_BAND.1;
    checks.push(RegimeCheck { name: "|omega|/|delta|", value: ratio, passed: omega_ok });
    let band_ok = match params.pulse() {
        Some(p) => {
            let r = p.ratio();
            let ok = (PI / 2.0..=2.0 * PI).contains(&r);
            checks.push(RegimeCheck { name: "tau/T", value: r, passed: ok });
            ok
        }
        None => false,
    };
    let regime = if omega_ok && band_ok { Regime::ChaoticCandidate } else { Regime::BistableProne };
    RegimeReport { regime, boundary_warning: false, checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1(delta: f64) -> ModelParams {
        ModelParams::new(delta, 1.0, 20.0, 12, Drive::Pulsed(PulseTrain::new(0.5, 4.0 * PI / 5.0)))
    }

    #[test]
    fn envelope_peak_isolated_pulse() {
        let p = PulseTrain { t0: 2.0, duration: 0.5, separation: 4.0, count: PulseCount::Auto };
        assert!((pulse_envelope(2.0, &p) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn envelope_midpoint_two_terms() {
        let p = PulseTrain { t0: 0.0, duration: 1.0, separation: 4.0, count: PulseCount::Fixed(2) };
        let expected = 2.0 * (-4.0f64).exp();
        assert!((pulse_envelope(2.0, &p) - expected).abs() <= 1e-10);
        assert!((expected - 0.036631).abs() < 1e-6);
    }

    #[test]
    fn envelope_periodic_after_start() {
        let p = PulseTrain::new(0.5, 4.0 * PI / 5.0);
        let start = p.t0 + 3.0 * p.separation;
        for k in 0..500 {
            let t = start + k as f64 * 0.0137;
            assert!((pulse_envelope(t, &p) - pulse_envelope(t + p.separation, &p)).abs() <= 1e-10);
        }
    }

    #[test]
    fn envelope_bounds() {
        let p = PulseTrain::new(0.5, 2.0);
        let bound = 1.0 + 2.0 * (-(p.ratio() * p.ratio())).exp() + 1e-12;
        for k in 0..20_000 {
            let v = pulse_envelope(k as f64 * 1e-3, &p);
            assert!(v >= 0.0 && v <= bound);
        }
    }

    #[test]
    fn fixed_count_stops_after_last_pulse() {
        let p = PulseTrain { t0: 1.0, duration: 0.2, separation: 1.0, count: PulseCount::Fixed(3) };
        assert!((pulse_envelope(3.0, &p) - 1.0).abs() < 1e-10);
        assert!(pulse_envelope(5.0, &p) < 1e-40);
    }

    #[test]
    fn undriven_hamiltonian_diagonal() {
        let p = ModelParams::new(20.0, 1.0, 0.0, 6, Drive::Cw);
        let h = hamiltonian_at(0.3, &p).unwrap();
        assert_eq!(h.matrix()[(2, 2)], C64::new(44.0, 0.0));
        for n in 0..6 {
            let nf = n as f64;
            assert_eq!(h.matrix()[(n, n)].re, 20.0 * nf + nf * nf);
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_and_linear_in_envelope() {
        let mut p = fig1(-20.0);
        p.drive_phase = 0.7;
        let h1 = hamiltonian_at(p.pulse().unwrap().t0, &p).unwrap();
        let h2 = hamiltonian_at(0.1, &p).unwrap();
        assert_eq!(h1.hermiticity_defect(), 0.0);
        let v = parametric_operator(&p).unwrap();
        let df = p.envelope(p.pulse().unwrap().t0) - p.envelope(0.1);
        let diff = h1.matrix() - h2.matrix();
        assert!(diff.max_abs_diff(&v.matrix().scale(C64::new(df, 0.0))) < 1e-12);
    }

    #[test]
    fn hamiltonian_rejects_bad_params() {
        let mut p = fig1(1.0);
        p.n_bath = -1.0;
        assert!(hamiltonian_at(0.0, &p).is_err());
        let mut p = fig1(1.0);
        p.dim = 1;
        assert!(matches!(hamiltonian_at(0.0, &p), Err(Error::InvalidDimension { .. })));
    }

    #[test]
    fn omega_from_intensity_and_phase() {
        let mut p = fig1(1.0);
        p.drive_phase = PI / 2.0;
        let w = p.omega();
        assert!((w - C64::new(0.0, 20.0)).norm() < 1e-12);
    }

    #[test]
    fn classify_fig1_presets() {
        assert_eq!(classify_regime(&fig1(-20.0)).regime, Regime::ChaoticCandidate);
        assert_eq!(classify_regime(&fig1(20.0)).regime, Regime::Regular);
        let mut p = fig1(-20.0);
        p.drive = Drive::Pulsed(PulseTrain::new(0.5, 5.0));
        assert_eq!(classify_regime(&p).regime, Regime::BistableProne);
        p.drive = Drive::Cw;
        assert_eq!(classify_regime(&p).regime, Regime::BistableProne);
    }

    #[test]
    fn classify_zero_detuning_warns() {
        let r = classify_regime(&fig1(0.0));
        assert_eq!(r.regime, Regime::Regular);
        assert!(r.boundary_warning);
        assert!(r.summary().contains("boundary"));
    }
}
