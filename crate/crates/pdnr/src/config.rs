//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, unknown or repeated keys are
//! errors. Real values accept plain numbers and simple products/quotients with
//! `pi`, e.g. `4*pi/5`. [`RunConfig::echo`] writes every key back in canonical
//! order with shortest round-trip floats, so re-reading an echo reproduces the
//! configuration exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;

use pdnr_core::master::DEFAULT_MASTER_STEP;
use pdnr_core::model::{Drive, ModelParams, PulseCount, PulseTrain};
use pdnr_core::qsd::{QsdScheme, DEFAULT_QSD_STEP};
use pdnr_core::semiclassics::DEFAULT_CLASSICAL_STEP;
use pdnr_core::wigner::{GridSpec, WignerMethod, WignerOptions, DEFAULT_HALF_WIDTH, DEFAULT_HUMP_THRESHOLD, DEFAULT_POINTS};
use pdnr_core::C64;

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Master,
    Qsd,
    Semiclassical,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Master => "master",
            Method::Qsd => "qsd",
            Method::Semiclassical => "semiclassical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveKind {
    Cw,
    Pulsed,
}

/// Which sample a Wigner snapshot is taken at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Instant {
    AtMinN,
    AtMaxN,
    /// ⟨n⟩ closest to the midpoint of the last period's extrema.
    AtMidN,
    AtTime(f64),
}

impl Instant {
    pub fn label(&self) -> String {
        match self {
            Instant::AtMinN => "at_min_n".into(),
            Instant::AtMaxN => "at_max_n".into(),
            Instant::AtMidN => "at_mid_n".into(),
            Instant::AtTime(t) => format!("at_time:{t:?}"),
        }
    }

    /// File-name friendly form of [`Instant::label`].
    pub fn file_stem(&self) -> String {
        self.label().replace(':', "_")
    }

    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "at_min_n" => Ok(Instant::AtMinN),
            "at_max_n" => Ok(Instant::AtMaxN),
            "at_mid_n" => Ok(Instant::AtMidN),
            _ => match s.strip_prefix("at_time:") {
                Some(t) => parse_real(t).map(Instant::AtTime),
                None => Err(format!("unknown instant '{s}' (at_min_n, at_max_n, at_mid_n, at_time:<t>)")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub delta: f64,
    pub chi: f64,
    /// |Ω|/γ
    pub omega: f64,
    pub drive_phase: f64,
    pub gamma: f64,
    pub n_bath: f64,
    pub dim: usize,
    pub drive: DriveKind,
    pub pulse_duration: f64,
    pub pulse_separation: f64,
    /// None means 3T.
    pub pulse_t0: Option<f64>,
    pub pulse_count: PulseCount,

    pub method: Method,
    /// None means the method's default.
    pub step: Option<f64>,
    pub n_traj: usize,
    pub seed: u64,
    pub qsd_scheme: QsdScheme,

    pub t_end: f64,
    pub samples_per_period: usize,
    pub sample_dt: Option<f64>,
    pub sample_times: Option<Vec<f64>>,

    pub instants: Vec<Instant>,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub hump_threshold: f64,
    pub wigner_method: WignerMethod,

    pub alpha0: C64,
    pub classical_step: f64,
    pub strobe_periods: usize,

    pub format: OutputFormat,
    pub golden: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            delta: 0.0,
            chi: 0.0,
            omega: 0.0,
            drive_phase: 0.0,
            gamma: 1.0,
            n_bath: 0.0,
            dim: 40,
            drive: DriveKind::Cw,
            pulse_duration: 0.5,
            pulse_separation: 4.0 * PI / 5.0,
            pulse_t0: None,
            pulse_count: PulseCount::Auto,
            method: Method::Master,
            step: None,
            n_traj: 2000,
            seed: 1,
            qsd_scheme: QsdScheme::Split,
            t_end: 10.0,
            samples_per_period: 40,
            sample_dt: None,
            sample_times: None,
            instants: vec![Instant::AtMaxN],
            grid_half_width: DEFAULT_HALF_WIDTH,
            grid_points: DEFAULT_POINTS,
            hump_threshold: DEFAULT_HUMP_THRESHOLD,
            wigner_method: WignerMethod::Laguerre,
            alpha0: C64::new(0.01, 0.0),
            classical_step: DEFAULT_CLASSICAL_STEP,
            strobe_periods: 200,
            format: OutputFormat::Csv,
            golden: false,
        }
    }
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "delta",
    "chi",
    "omega",
    "drive_phase",
    "gamma",
    "n_bath",
    "dim",
    "drive",
    "pulse_duration",
    "pulse_separation",
    "pulse_t0",
    "pulse_count",
    "method",
    "step",
    "n_traj",
    "seed",
    "qsd_scheme",
    "t_end",
    "samples_per_period",
    "sample_dt",
    "sample_times",
    "instants",
    "grid_half_width",
    "grid_points",
    "hump_threshold",
    "wigner_method",
    "alpha0",
    "classical_step",
    "strobe_periods",
    "format",
    "golden",
];

/// Keys that define the physical model; hashed into output headers.
pub const MODEL_KEYS: &[&str] = &[
    "delta",
    "chi",
    "omega",
    "drive_phase",
    "gamma",
    "n_bath",
    "dim",
    "drive",
    "pulse_duration",
    "pulse_separation",
    "pulse_t0",
    "pulse_count",
];

/// Parses a real: a number, `pi`, or a product/quotient of those (`4*pi/5`, `-pi/2`).
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) if rest.contains("pi") => (-1.0, rest),
        _ => (1.0, s),
    };
    if !body.contains("pi") {
        return s.parse::<f64>().map_err(|_| format!("'{s}' is not a number"));
    }
    let mut value = 1.0;
    let mut op = '*';
    let mut token = String::new();
    let mut apply = |tok: &str, op: char| -> Result<(), String> {
        let t = tok.trim();
        let v = if t == "pi" { PI } else { t.parse::<f64>().map_err(|_| format!("'{t}' is not a number in '{s}'"))? };
        if op == '*' {
            value *= v;
        } else {
            value /= v;
        }
        Ok(())
    };
    for c in body.chars() {
        if c == '*' || c == '/' {
            apply(&token, op)?;
            token.clear();
            op = c;
        } else {
            token.push(c);
        }
    }
    apply(&token, op)?;
    Ok(sign * value)
}

fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

fn err(key: &str, msg: impl Into<String>) -> RunError {
    RunError::Config { key: key.to_string(), message: msg.into() }
}

fn real(key: &str, v: &str) -> Result<f64, RunError> {
    let x = parse_real(v).map_err(|m| err(key, m))?;
    if !x.is_finite() {
        return Err(err(key, "value must be finite"));
    }
    Ok(x)
}

fn auto_real(key: &str, v: &str) -> Result<Option<f64>, RunError> {
    if v == "auto" {
        Ok(None)
    } else {
        real(key, v).map(Some)
    }
}

fn integer<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, RunError> {
    v.parse::<T>().map_err(|_| err(key, format!("'{v}' is not a non-negative integer")))
}

fn list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

impl RunConfig {
    /// Parses configuration text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<(), RunError> {
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(line, format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(key, format!("line {}: key given twice", lineno + 1)));
            }
            self.set(key, value.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, RunError> {
        let mut c = RunConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Assigns one key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), RunError> {
        match key {
            "delta" => self.delta = real(key, v)?,
            "chi" => self.chi = real(key, v)?,
            "omega" => self.omega = real(key, v)?,
            "drive_phase" => self.drive_phase = real(key, v)?,
            "gamma" => self.gamma = real(key, v)?,
            "n_bath" => self.n_bath = real(key, v)?,
            "dim" => self.dim = integer(key, v)?,
            "drive" => {
                self.drive = match v {
                    "cw" => DriveKind::Cw,
                    "pulsed" => DriveKind::Pulsed,
                    _ => return Err(err(key, format!("'{v}' is not one of cw, pulsed"))),
                }
            }
            "pulse_duration" => self.pulse_duration = real(key, v)?,
            "pulse_separation" => self.pulse_separation = real(key, v)?,
            "pulse_t0" => self.pulse_t0 = auto_real(key, v)?,
            "pulse_count" => {
                self.pulse_count = if v == "auto" { PulseCount::Auto } else { PulseCount::Fixed(integer(key, v)?) }
            }
            "method" => {
                self.method = match v {
                    "master" => Method::Master,
                    "qsd" => Method::Qsd,
                    "semiclassical" => Method::Semiclassical,
                    _ => return Err(err(key, format!("'{v}' is not one of master, qsd, semiclassical"))),
                }
            }
            "step" => self.step = auto_real(key, v)?,
            "n_traj" => self.n_traj = integer(key, v)?,
            "seed" => self.seed = integer(key, v)?,
            "qsd_scheme" => {
                self.qsd_scheme = match v {
                    "split" => QsdScheme::Split,
                    "euler-maruyama" => QsdScheme::EulerMaruyama,
                    _ => return Err(err(key, format!("'{v}' is not one of split, euler-maruyama"))),
                }
            }
            "t_end" => self.t_end = real(key, v)?,
            "samples_per_period" => self.samples_per_period = integer(key, v)?,
            "sample_dt" => self.sample_dt = auto_real(key, v)?,
            "sample_times" => {
                if v == "auto" {
                    self.sample_times = None;
                } else {
                    let items = list(v);
                    if items.is_empty() {
                        return Err(err(key, "empty sample schedule"));
                    }
                    self.sample_times = Some(items.iter().map(|s| real(key, s)).collect::<Result<_, _>>()?);
                }
            }
            "instants" => {
                let items = list(v);
                if items.is_empty() {
                    return Err(err(key, "at least one instant is required"));
                }
                self.instants = items.iter().map(|s| Instant::parse(s).map_err(|m| err(key, m))).collect::<Result<_, _>>()?;
            }
            "grid_half_width" => self.grid_half_width = real(key, v)?,
            "grid_points" => self.grid_points = integer(key, v)?,
            "hump_threshold" => self.hump_threshold = real(key, v)?,
            "wigner_method" => {
                self.wigner_method = if v == "laguerre" {
                    WignerMethod::Laguerre
                } else if let Some(d) = v.strip_prefix("expm:") {
                    WignerMethod::Expm { work_dim: integer(key, d)? }
                } else {
                    return Err(err(key, format!("'{v}' is not one of laguerre, expm:<work_dim>")));
                }
            }
            "alpha0" => {
                let items = list(v);
                if items.len() != 2 {
                    return Err(err(key, "expected 're, im'"));
                }
                self.alpha0 = C64::new(real(key, items[0])?, real(key, items[1])?);
            }
            "classical_step" => self.classical_step = real(key, v)?,
            "strobe_periods" => self.strobe_periods = integer(key, v)?,
            "format" => {
                self.format = match v {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => return Err(err(key, format!("'{v}' is not one of csv, json"))),
                }
            }
            "golden" => {
                self.golden = match v {
                    "true" => true,
                    "false" => false,
                    _ => return Err(err(key, format!("'{v}' is not true or false"))),
                }
            }
            _ => return Err(err(key, "unknown key")),
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        let opt = |o: Option<f64>| o.map_or_else(|| "auto".to_string(), fmt_real);
        match key {
            "delta" => fmt_real(self.delta),
            "chi" => fmt_real(self.chi),
            "omega" => fmt_real(self.omega),
            "drive_phase" => fmt_real(self.drive_phase),
            "gamma" => fmt_real(self.gamma),
            "n_bath" => fmt_real(self.n_bath),
            "dim" => self.dim.to_string(),
            "drive" => match self.drive {
                DriveKind::Cw => "cw".into(),
                DriveKind::Pulsed => "pulsed".into(),
            },
            "pulse_duration" => fmt_real(self.pulse_duration),
            "pulse_separation" => fmt_real(self.pulse_separation),
            "pulse_t0" => opt(self.pulse_t0),
            "pulse_count" => match self.pulse_count {
                PulseCount::Auto => "auto".into(),
                PulseCount::Fixed(n) => n.to_string(),
            },
            "method" => self.method.label().into(),
            "step" => opt(self.step),
            "n_traj" => self.n_traj.to_string(),
            "seed" => self.seed.to_string(),
            "qsd_scheme" => match self.qsd_scheme {
                QsdScheme::Split => "split".into(),
                QsdScheme::EulerMaruyama => "euler-maruyama".into(),
            },
            "t_end" => fmt_real(self.t_end),
            "samples_per_period" => self.samples_per_period.to_string(),
            "sample_dt" => opt(self.sample_dt),
            "sample_times" => match &self.sample_times {
                None => "auto".into(),
                Some(ts) => ts.iter().map(|t| fmt_real(*t)).collect::<Vec<_>>().join(", "),
            },
            "instants" => self.instants.iter().map(Instant::label).collect::<Vec<_>>().join(", "),
            "grid_half_width" => fmt_real(self.grid_half_width),
            "grid_points" => self.grid_points.to_string(),
            "hump_threshold" => fmt_real(self.hump_threshold),
            "wigner_method" => match self.wigner_method {
                WignerMethod::Laguerre => "laguerre".into(),
                WignerMethod::Expm { work_dim } => format!("expm:{work_dim}"),
            },
            "alpha0" => format!("{}, {}", fmt_real(self.alpha0.re), fmt_real(self.alpha0.im)),
            "classical_step" => fmt_real(self.classical_step),
            "strobe_periods" => self.strobe_periods.to_string(),
            "format" => match self.format {
                OutputFormat::Csv => "csv".into(),
                OutputFormat::Json => "json".into(),
            },
            "golden" => self.golden.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Canonical text with every key.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            let _ = writeln!(s, "{k} = {}", self.value_of(k));
        }
        s
    }

    /// Canonical text of the model keys only.
    pub fn model_echo(&self) -> String {
        let mut s = String::new();
        for k in MODEL_KEYS {
            let _ = writeln!(s, "{k} = {}", self.value_of(k));
        }
        s
    }

    pub fn params(&self) -> ModelParams {
        let drive = match self.drive {
            DriveKind::Cw => Drive::Cw,
            DriveKind::Pulsed => {
                let mut p = PulseTrain::new(self.pulse_duration, self.pulse_separation);
                if let Some(t0) = self.pulse_t0 {
                    p.t0 = t0;
                }
                p.count = self.pulse_count;
                Drive::Pulsed(p)
            }
        };
        ModelParams {
            delta: self.delta,
            chi: self.chi,
            drive_intensity: self.omega * self.omega,
            drive_phase: self.drive_phase,
            gamma: self.gamma,
            n_bath: self.n_bath,
            dim: self.dim,
            drive,
        }
    }

    /// Pulse separation for pulsed drive.
    pub fn period(&self) -> Option<f64> {
        match self.drive {
            DriveKind::Pulsed => Some(self.pulse_separation),
            DriveKind::Cw => None,
        }
    }

    pub fn step_or_default(&self) -> f64 {
        self.step.unwrap_or(match self.method {
            Method::Master => DEFAULT_MASTER_STEP,
            Method::Qsd => DEFAULT_QSD_STEP,
            Method::Semiclassical => self.classical_step,
        })
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec::symmetric(self.grid_half_width, self.grid_points)
    }

    pub fn wigner_options(&self) -> WignerOptions {
        WignerOptions { method: self.wigner_method, ..WignerOptions::default() }
    }

    /// Checks every field, naming the first offending key.
    pub fn validate(&self) -> Result<(), RunError> {
        if self.omega < 0.0 {
            return Err(err("omega", "must be non-negative (the phase goes in drive_phase)"));
        }
        if !(self.gamma > 0.0) && self.method == Method::Qsd {
            // closed-system QSD is allowed, but only through the library
            return Err(err("gamma", "must be positive"));
        }
        if self.gamma < 0.0 {
            return Err(err("gamma", "must be non-negative"));
        }
        if self.n_bath < 0.0 {
            return Err(err("n_bath", "must be non-negative"));
        }
        if self.dim < 2 {
            return Err(err("dim", "must be at least 2"));
        }
        if self.drive == DriveKind::Pulsed {
            if !(self.pulse_duration > 0.0) {
                return Err(err("pulse_duration", "must be positive"));
            }
            if !(self.pulse_separation > 0.0) {
                return Err(err("pulse_separation", "must be positive"));
            }
            if self.pulse_count == PulseCount::Fixed(0) {
                return Err(err("pulse_count", "must be at least 1"));
            }
        }
        if let Some(s) = self.step {
            if !(s > 0.0) {
                return Err(err("step", "must be positive"));
            }
        }
        if self.n_traj == 0 {
            return Err(err("n_traj", "must be at least 1"));
        }
        if !(self.t_end > 0.0) {
            return Err(err("t_end", "must be positive"));
        }
        if self.samples_per_period == 0 {
            return Err(err("samples_per_period", "must be at least 1"));
        }
        if let Some(dt) = self.sample_dt {
            if !(dt > 0.0) {
                return Err(err("sample_dt", "must be positive"));
            }
        }
        if !(self.grid_half_width > 0.0) {
            return Err(err("grid_half_width", "must be positive"));
        }
        if self.grid_points < 3 {
            return Err(err("grid_points", "must be at least 3"));
        }
        if !(self.hump_threshold > 0.0 && self.hump_threshold < 1.0) {
            return Err(err("hump_threshold", "must lie in (0, 1)"));
        }
        if let WignerMethod::Expm { work_dim } = self.wigner_method {
            if work_dim < self.dim {
                return Err(err("wigner_method", "expm work_dim must be at least dim"));
            }
        }
        if !(self.classical_step > 0.0) {
            return Err(err("classical_step", "must be positive"));
        }
        self.params().validate().map_err(|e| err("model", e.to_string()))
    }
}
