//! Sample grids and resolution of Wigner snapshot instants.

use crate::config::{Instant, RunConfig};
use crate::RunError;

/// Default sample spacing for cw runs.
pub const CW_SAMPLE_DT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Strictly increasing, starting at 0.
    pub times: Vec<f64>,
    /// Pulse separation, when the drive is pulsed.
    pub period: Option<f64>,
}

fn sched_err(key: &str, message: impl Into<String>) -> RunError {
    RunError::Config { key: key.into(), message: message.into() }
}

impl Schedule {
    /// Builds the grid: explicit `sample_times`, else multiples of `sample_dt`
    /// (default τ/samples_per_period) up to `t_end`. `at_time` instants are
    /// inserted, and t = 0 always leads.
    pub fn from_config(cfg: &RunConfig) -> Result<Self, RunError> {
        let period = cfg.period();
        let mut times = match &cfg.sample_times {
            Some(ts) => {
                if ts.is_empty() {
                    return Err(sched_err("sample_times", "empty sample schedule"));
                }
                if ts.iter().any(|t| !t.is_finite() || *t < 0.0) {
                    return Err(sched_err("sample_times", "times must be finite and non-negative"));
                }
                if ts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(sched_err("sample_times", "times must be strictly increasing"));
                }
                let mut v = ts.clone();
                if v[0] > 0.0 {
                    v.insert(0, 0.0);
                }
                v
            }
            None => {
                let (num, den) = match (cfg.sample_dt, period) {
                    (Some(dt), _) => (dt, 1.0),
                    (None, Some(tau)) => (tau, cfg.samples_per_period as f64),
                    (None, None) => (CW_SAMPLE_DT, 1.0),
                };
                let n = (cfg.t_end * den / num + 1e-9).floor() as usize;
                // k·num/den keeps every period boundary exactly on the grid
                (0..=n).map(|k| k as f64 * num / den).collect()
            }
        };
        if times.len() < 2 {
            return Err(sched_err("t_end", "empty sample schedule (t_end shorter than one sample interval)"));
        }
        for inst in &cfg.instants {
            if let Instant::AtTime(t) = *inst {
                let last = *times.last().unwrap();
                if !(0.0..=last).contains(&t) {
                    return Err(sched_err("instants", format!("at_time:{t} lies outside the simulated window [0, {last}]")));
                }
                if let Err(pos) = times.binary_search_by(|x| x.total_cmp(&t)) {
                    times.insert(pos, t);
                }
            }
        }
        Ok(Schedule { times, period })
    }

    pub fn last(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// The post-transient window used for extrema: the last full pulse period,
    /// or the second half of a cw run.
    pub fn window(&self) -> Result<(f64, f64), RunError> {
        let last = self.last();
        match self.period {
            Some(tau) => {
                if last < tau {
                    return Err(RunError::Instant(format!("run ends at t = {last}, before one full pulse period ({tau})")));
                }
                Ok((last - tau * (1.0 + 1e-12), last))
            }
            None => Ok((0.5 * last, last)),
        }
    }

    /// Indices of the samples inside [`Schedule::window`].
    pub fn window_indices(&self) -> Result<Vec<usize>, RunError> {
        let (lo, hi) = self.window()?;
        Ok(self.times.iter().enumerate().filter(|(_, t)| **t >= lo && **t <= hi).map(|(i, _)| i).collect())
    }

    /// Sample index for `instant` given the ⟨n⟩ series on this grid.
    pub fn resolve(&self, instant: &Instant, mean_n: &[f64]) -> Result<usize, RunError> {
        assert_eq!(mean_n.len(), self.times.len());
        if let Instant::AtTime(t) = *instant {
            return self
                .times
                .iter()
                .position(|x| *x == t)
                .ok_or_else(|| RunError::Instant(format!("at_time:{t} lies outside the simulated window [0, {}]", self.last())));
        }
        let idx = self.window_indices()?;
        let pick = |better: &dyn Fn(f64, f64) -> bool| {
            idx.iter().copied().reduce(|b, i| if better(mean_n[i], mean_n[b]) { i } else { b }).unwrap()
        };
        let lo = pick(&|a, b| a < b);
        let hi = pick(&|a, b| a > b);
        Ok(match instant {
            Instant::AtMinN => lo,
            Instant::AtMaxN => hi,
            Instant::AtMidN => {
                let mid = 0.5 * (mean_n[lo] + mean_n[hi]);
                pick(&|a, b| (a - mid).abs() < (b - mid).abs())
            }
            Instant::AtTime(_) => unreachable!(),
        })
    }
}
