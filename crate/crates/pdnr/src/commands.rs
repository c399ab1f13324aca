//! Subcommand implementations and the simulation pipeline behind them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pdnr_core::fock::{DensityMatrix, PureState};
use pdnr_core::master::{distribution_std, evolve_master, number_distribution, MasterOptions, METHOD_TAG};
use pdnr_core::model::{classify_regime, Drive};
use pdnr_core::qsd::{DensitySampling, QsdConfig};
use pdnr_core::semiclassics::{evolve_classical, steady_states, stroboscopic_map, tail_spread};
use pdnr_core::wigner::{
    find_humps, grid_covariance, normalization, principal_variances, quadrature_covariance, symmetry_defect, HumpReport,
    WignerGrid,
};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Instant, Method, OutputFormat, RunConfig};
use crate::formats::{self, rounded};
use crate::parallel::{run_ensemble_parallel, wigner_parallel};
use crate::schedule::Schedule;
use crate::RunError;

/// ⟨n⟩ on the sample grid plus whichever density matrices were kept.
#[derive(Debug, Clone)]
pub struct Series {
    pub schedule: Schedule,
    pub mean_n: Vec<f64>,
    /// Standard error of the ensemble mean (QSD only).
    pub stderr_n: Option<Vec<f64>>,
    pub states: BTreeMap<usize, DensityMatrix>,
    pub step: f64,
    pub scheme: &'static str,
}

/// Which density matrices [`simulate`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    None,
    /// Samples an instant selector can resolve to.
    Instants,
    All,
}

fn instant_indices(cfg: &RunConfig, schedule: &Schedule) -> Result<Vec<usize>, RunError> {
    let mut idx = schedule.window_indices()?;
    for inst in &cfg.instants {
        if let Instant::AtTime(t) = *inst {
            idx.extend(schedule.times.iter().position(|x| *x == t));
        }
    }
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

/// SHA-256 of the model keys of the config echo, lowercase hex.
pub fn params_hash(cfg: &RunConfig) -> String {
    Sha256::digest(cfg.model_echo().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the configured method from the vacuum (or `alpha0` for semiclassics).
pub fn simulate(cfg: &RunConfig, pool: &rayon::ThreadPool, keep: Keep) -> Result<Series, RunError> {
    cfg.validate()?;
    let schedule = Schedule::from_config(cfg)?;
    let params = cfg.params();
    let step = cfg.step_or_default();
    let wanted = match keep {
        Keep::None => Vec::new(),
        Keep::Instants => instant_indices(cfg, &schedule)?,
        Keep::All => (0..schedule.times.len()).collect(),
    };
    match cfg.method {
        Method::Master => {
            let rho0 = DensityMatrix::vacuum(cfg.dim)?;
            let r = evolve_master(&rho0, &schedule.times, &params, &MasterOptions::with_step(step))?;
            let mut states = BTreeMap::new();
            for (i, rho) in r.states.into_iter().enumerate() {
                if wanted.binary_search(&i).is_ok() {
                    states.insert(i, rho);
                }
            }
            Ok(Series { schedule, mean_n: r.mean_n, stderr_n: None, states, step: r.step, scheme: METHOD_TAG })
        }
        Method::Qsd => {
            let psi0 = PureState::vacuum(cfg.dim)?;
            let mut q = QsdConfig::new(cfg.n_traj, cfg.seed, schedule.times.clone());
            q.step = step;
            q.scheme = cfg.qsd_scheme;
            q.density = if wanted.is_empty() { DensitySampling::None } else { DensitySampling::Indices(wanted) };
            let r = run_ensemble_parallel(&psi0, &q, &params, pool)?;
            let states = r.density_indices.iter().copied().zip(r.density_estimates).collect();
            Ok(Series { schedule, mean_n: r.mean_n, stderr_n: Some(r.stderr_n), states, step: r.step, scheme: r.scheme.label() })
        }
        Method::Semiclassical => {
            if keep != Keep::None {
                return Err(RunError::Unsupported("semiclassical runs carry no density matrix; use method = master or qsd".into()));
            }
            let trace = evolve_classical(cfg.alpha0, &schedule.times, &params, cfg.classical_step)?;
            let mean_n = trace.alphas.iter().map(|a| a.norm_sqr()).collect();
            Ok(Series { schedule, mean_n, stderr_n: None, states: BTreeMap::new(), step: cfg.classical_step, scheme: "rk4" })
        }
    }
}

/// Extremes of ⟨n⟩ in the post-transient window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub t_min: f64,
    pub n_min: f64,
    pub t_max: f64,
    pub n_max: f64,
}

impl Series {
    pub fn extrema(&self) -> Result<Extrema, RunError> {
        let lo = self.schedule.resolve(&Instant::AtMinN, &self.mean_n)?;
        let hi = self.schedule.resolve(&Instant::AtMaxN, &self.mean_n)?;
        let t = &self.schedule.times;
        Ok(Extrema { t_min: t[lo], n_min: self.mean_n[lo], t_max: t[hi], n_max: self.mean_n[hi] })
    }

    /// max |n(t) − n(t − τ)| over the last period, relative to the largest n
    /// there. None without a pulse period or when t − τ is not a sample.
    pub fn period_mismatch(&self) -> Option<f64> {
        let tau = self.schedule.period?;
        let t = &self.schedule.times;
        let idx = self.schedule.window_indices().ok()?;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in idx {
            let target = t[i] - tau;
            let j = t.partition_point(|x| *x < target - 1e-9 * tau);
            if j >= t.len() || (t[j] - target).abs() > 1e-9 * tau {
                return None;
            }
            worst = worst.max((self.mean_n[i] - self.mean_n[j]).abs());
            scale = scale.max(self.mean_n[i].abs());
        }
        Some(if scale > 0.0 { worst / scale } else { worst })
    }
}

/// Wigner grid and its analysis at one resolved instant.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub instant: Instant,
    pub index: usize,
    pub time: f64,
    pub mean_n: f64,
    pub grid: WignerGrid,
    pub normalization: f64,
    pub symmetry_defect: f64,
    pub humps: HumpReport,
    /// Principal quadrature variances (minor, major) from ρ.
    pub principal_variances: (f64, f64),
    /// The same from grid moments.
    pub grid_principal_variances: (f64, f64),
    pub number_std: f64,
}

pub fn snapshots(cfg: &RunConfig, series: &Series, pool: &rayon::ThreadPool) -> Result<Vec<Snapshot>, RunError> {
    let hash = params_hash(cfg);
    let spec = cfg.grid_spec();
    let options = cfg.wigner_options();
    let mut out = Vec::new();
    for inst in &cfg.instants {
        let index = series.schedule.resolve(inst, &series.mean_n)?;
        let rho = series
            .states
            .get(&index)
            .ok_or_else(|| RunError::Instant(format!("no density matrix kept at sample {index}")))?;
        let mut grid = wigner_parallel(rho, &spec, &options, pool)?;
        grid.time = Some(series.schedule.times[index]);
        grid.params_hash = Some(hash.clone());
        out.push(Snapshot {
            instant: *inst,
            index,
            time: series.schedule.times[index],
            mean_n: series.mean_n[index],
            normalization: normalization(&grid),
            symmetry_defect: symmetry_defect(&grid)?,
            humps: find_humps(&grid, cfg.hump_threshold)?,
            principal_variances: principal_variances(&quadrature_covariance(rho)),
            grid_principal_variances: principal_variances(&grid_covariance(&grid)),
            number_std: distribution_std(&number_distribution(rho)),
            grid,
        });
    }
    Ok(out)
}

fn write(path: PathBuf, contents: &str, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    std::fs::write(&path, contents).map_err(|source| RunError::Io { path: path.clone(), source })?;
    files.push(path);
    Ok(())
}

/// Creates `out` and writes the config echo and version stamp.
fn prepare_dir(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(out).map_err(|source| RunError::Io { path: out.to_path_buf(), source })?;
    let mut files = Vec::new();
    write(out.join("config.txt"), &cfg.echo(), &mut files)?;
    let stamp = format!("pdnr {}\npdnr-core {}\n", env!("CARGO_PKG_VERSION"), pdnr_core::VERSION);
    write(out.join("VERSION"), &stamp, &mut files)?;
    Ok(files)
}

fn write_series(cfg: &RunConfig, series: &Series, out: &Path, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let t = &series.schedule.times;
    let e = series.stderr_n.as_deref();
    match cfg.format {
        OutputFormat::Csv => write(out.join("timeseries.csv"), &formats::timeseries_csv(t, &series.mean_n, e, cfg.golden), files),
        OutputFormat::Json => write(out.join("timeseries.json"), &formats::timeseries_json(t, &series.mean_n, e, cfg.golden), files),
    }
}

fn write_json(path: PathBuf, v: &Value, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    write(path, &(serde_json::to_string_pretty(v).expect("serializable") + "\n"), files)
}

fn run_header(cfg: &RunConfig, series: &Series) -> Value {
    let g = |v: f64| rounded(v, cfg.golden);
    let mut h = json!({
        "method": cfg.method.label(),
        "scheme": series.scheme,
        "step": g(series.step),
        "dim": cfg.dim,
        "params_hash": params_hash(cfg),
        "samples": series.mean_n.len(),
        "t_end": g(series.schedule.last()),
    });
    if cfg.method == Method::Qsd {
        h["n_traj"] = json!(cfg.n_traj);
        h["seed"] = json!(cfg.seed);
    }
    h
}

/// Null when the run is shorter than one pulse period.
fn extrema_json(cfg: &RunConfig, series: &Series) -> Result<Value, RunError> {
    let g = |v: f64| rounded(v, cfg.golden);
    let Ok((lo, hi)) = series.schedule.window() else {
        return Ok(Value::Null);
    };
    let x = series.extrema()?;
    Ok(json!({
        "window": [g(lo), g(hi)],
        "t_min": g(x.t_min), "n_min": g(x.n_min),
        "t_max": g(x.t_max), "n_max": g(x.n_max),
        "period_mismatch": series.period_mismatch().map(g),
    }))
}

/// `evolve`: ⟨n⟩(t) time series and a summary of its post-transient extrema.
pub fn cmd_evolve(cfg: &RunConfig, out: &Path, pool: &rayon::ThreadPool) -> Result<Vec<PathBuf>, RunError> {
    cfg.validate()?;
    let mut files = prepare_dir(cfg, out)?;
    let series = simulate(cfg, pool, Keep::None)?;
    write_series(cfg, &series, out, &mut files)?;
    let mut summary = run_header(cfg, &series);
    summary["extrema"] = extrema_json(cfg, &series)?;
    write_json(out.join("summary.json"), &summary, &mut files)?;
    Ok(files)
}

/// `wigner`: time series plus one grid (matrix text and long CSV) per instant.
pub fn cmd_wigner(cfg: &RunConfig, out: &Path, pool: &rayon::ThreadPool) -> Result<Vec<PathBuf>, RunError> {
    cfg.validate()?;
    let mut files = prepare_dir(cfg, out)?;
    let series = simulate(cfg, pool, Keep::Instants)?;
    write_series(cfg, &series, out, &mut files)?;
    let g = |v: f64| rounded(v, cfg.golden);
    let mut entries = Vec::new();
    for s in snapshots(cfg, &series, pool)? {
        let stem = format!("wigner_{}", s.instant.file_stem());
        write(out.join(format!("{stem}.txt")), &formats::wigner_text(&s.grid, cfg.golden), &mut files)?;
        write(out.join(format!("{stem}.csv")), &formats::wigner_long_csv(&s.grid, cfg.golden), &mut files)?;
        let humps: Vec<Value> = s
            .humps
            .humps
            .iter()
            .map(|h| json!({"x": g(h.x), "y": g(h.y), "value": g(h.value), "phase": g(h.phase), "radius": g(h.radius)}))
            .collect();
        let diffs: Vec<Value> = s.humps.phase_differences().iter().map(|(a, b, d)| json!([a, b, g(*d)])).collect();
        entries.push(json!({
            "instant": s.instant.label(),
            "file": format!("{stem}.txt"),
            "index": s.index,
            "t": g(s.time),
            "mean_n": g(s.mean_n),
            "normalization": g(s.normalization),
            "symmetry_defect": g(s.symmetry_defect),
            "imag_residue": g(s.grid.imag_residue),
            "w_max": g(s.grid.max()),
            "w_min": g(s.grid.min()),
            "hump_threshold": g(s.humps.threshold),
            "hump_count": s.humps.humps.len(),
            "humps": humps,
            "phase_differences": diffs,
            "height_ratio": s.humps.height_ratio().map(g),
            "principal_variances": [g(s.principal_variances.0), g(s.principal_variances.1)],
            "grid_principal_variances": [g(s.grid_principal_variances.0), g(s.grid_principal_variances.1)],
            "number_std": g(s.number_std),
        }));
    }
    let mut summary = run_header(cfg, &series);
    summary["extrema"] = extrema_json(cfg, &series)?;
    summary["snapshots"] = Value::Array(entries);
    write_json(out.join("summary.json"), &summary, &mut files)?;
    Ok(files)
}

/// Times at which [`stroboscopic_map`] samples.
pub fn strobe_times(cfg: &RunConfig) -> Option<Vec<f64>> {
    let train = *cfg.params().pulse()?;
    Some((0..cfg.strobe_periods).map(|k| train.t0 + 0.5 * train.separation + k as f64 * train.separation).collect())
}

/// `semiclassical`: steady-state table of the cw counterpart (f ≡ 1) and,
/// with `strobe`, the stroboscopic point cloud of the configured drive.
pub fn cmd_semiclassical(cfg: &RunConfig, out: &Path, strobe: bool) -> Result<Vec<PathBuf>, RunError> {
    cfg.validate()?;
    let times = match strobe {
        true => Some(strobe_times(cfg).ok_or_else(|| RunError::Unsupported("--strobe needs drive = pulsed".into()))?),
        false => None,
    };
    let mut files = prepare_dir(cfg, out)?;
    let g = |v: f64| rounded(v, cfg.golden);
    let params = cfg.params();
    let mut cw = params.clone();
    cw.drive = Drive::Cw;
    let report = steady_states(&cw)?;
    match cfg.format {
        OutputFormat::Csv => write(out.join("steady_states.csv"), &formats::steady_states_csv(&report, cfg.golden), &mut files)?,
        OutputFormat::Json => write(out.join("steady_states.json"), &formats::steady_states_json(&report, cfg.golden), &mut files)?,
    }
    let mut summary = json!({
        "params_hash": params_hash(cfg),
        "steady_states_drive": "cw",
        "j": g(report.j),
        "threshold_j": g(report.threshold_j),
        "closed_form_threshold_j": g(report.paper_threshold_j),
        "flag": formats::flag_label(report.flag),
        "solutions": report.solutions.len(),
        "bistable": report.is_bistable(),
    });
    if let Some(times) = times {
        let points = stroboscopic_map(cfg.alpha0, &params, cfg.strobe_periods, cfg.classical_step)?;
        write(out.join("strobe.csv"), &formats::strobe_csv(&times, &points, cfg.golden), &mut files)?;
        summary["strobe"] = json!({
            "periods": points.len(),
            "step": g(cfg.classical_step),
            "tail_spread": g(tail_spread(&points, points.len().min(20))),
        });
    }
    write_json(out.join("summary.json"), &summary, &mut files)?;
    Ok(files)
}

/// `classify`: regime label followed by each tested inequality.
pub fn cmd_classify(cfg: &RunConfig) -> Result<String, RunError> {
    cfg.validate()?;
    Ok(classify_regime(&cfg.params()).summary())
}

/// `preset-list`: one `name  description` line per preset.
pub fn cmd_preset_list() -> String {
    crate::presets::PRESETS.iter().map(|p| format!("{:<8} {}\n", p.name, p.description)).collect()
}
