//! Text serialization: time series, Wigner grids, steady-state tables and
//! stroboscopic point clouds.
//!
//! Floats are written in scientific notation with 9 significant digits, or 17
//! in golden mode. 17 digits round-trip bitwise; 9-digit files re-serialize to
//! identical text.

use std::fmt::Write as _;

use pdnr_core::semiclassics::{SteadyFlag, SteadyStateReport};
use pdnr_core::wigner::WignerGrid;
use pdnr_core::C64;
use serde::Serialize;

use crate::RunError;

pub fn fmt_float(v: f64, golden: bool) -> String {
    if golden {
        format!("{v:.16e}")
    } else {
        format!("{v:.8e}")
    }
}

/// `v` as it reads back from [`fmt_float`].
pub fn rounded(v: f64, golden: bool) -> f64 {
    fmt_float(v, golden).parse().unwrap_or(v)
}

fn rounded_all(v: &[f64], golden: bool) -> Vec<f64> {
    v.iter().map(|x| rounded(*x, golden)).collect()
}

/// `t,mean_n,stderr_n`; the stderr column is empty when `stderr` is None.
pub fn timeseries_csv(times: &[f64], mean_n: &[f64], stderr: Option<&[f64]>, golden: bool) -> String {
    let mut s = String::from("t,mean_n,stderr_n\n");
    for (i, (t, n)) in times.iter().zip(mean_n).enumerate() {
        let e = stderr.map(|e| fmt_float(e[i], golden)).unwrap_or_default();
        let _ = writeln!(s, "{},{},{}", fmt_float(*t, golden), fmt_float(*n, golden), e);
    }
    s
}

#[derive(Serialize)]
struct TimeseriesJson {
    t: Vec<f64>,
    mean_n: Vec<f64>,
    stderr_n: Option<Vec<f64>>,
}

pub fn timeseries_json(times: &[f64], mean_n: &[f64], stderr: Option<&[f64]>, golden: bool) -> String {
    let doc = TimeseriesJson {
        t: rounded_all(times, golden),
        mean_n: rounded_all(mean_n, golden),
        stderr_n: stderr.map(|e| rounded_all(e, golden)),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

/// Reads back the CSV time series (stderr column may be empty).
pub fn parse_timeseries_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<f64>>), RunError> {
    let mut lines = text.lines();
    if lines.next() != Some("t,mean_n,stderr_n") {
        return Err(RunError::Format("missing time-series header".into()));
    }
    let (mut t, mut n, mut e) = (Vec::new(), Vec::new(), Vec::new());
    let mut has_err = true;
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(RunError::Format(format!("bad time-series row '{line}'")));
        }
        t.push(num(cols[0])?);
        n.push(num(cols[1])?);
        if cols[2].is_empty() {
            has_err = false;
        } else {
            e.push(num(cols[2])?);
        }
    }
    Ok((t, n, has_err.then_some(e)))
}

fn num(s: &str) -> Result<f64, RunError> {
    s.trim().parse().map_err(|_| RunError::Format(format!("'{s}' is not a number")))
}

fn join(v: &[f64], golden: bool) -> String {
    v.iter().map(|x| fmt_float(*x, golden)).collect::<Vec<_>>().join(" ")
}

/// Matrix format: `#` header lines (shape, time, params hash, axes), then one
/// row per x index holding W(x, y_j) for every y.
pub fn wigner_text(grid: &WignerGrid, golden: bool) -> String {
    let mut s = String::from("# pdnr wigner grid\n");
    let _ = writeln!(s, "# nx = {}", grid.nx());
    let _ = writeln!(s, "# ny = {}", grid.ny());
    let _ = writeln!(s, "# time = {}", grid.time.map_or_else(|| "none".into(), |t| fmt_float(t, golden)));
    let _ = writeln!(s, "# params_hash = {}", grid.params_hash.as_deref().unwrap_or("none"));
    let _ = writeln!(s, "# imag_residue = {}", fmt_float(grid.imag_residue, golden));
    let _ = writeln!(s, "# x = {}", join(&grid.x_axis, golden));
    let _ = writeln!(s, "# y = {}", join(&grid.y_axis, golden));
    for row in grid.values.chunks(grid.ny()) {
        s.push_str(&join(row, golden));
        s.push('\n');
    }
    s
}

pub fn parse_wigner_text(text: &str) -> Result<WignerGrid, RunError> {
    let bad = |m: &str| RunError::Format(format!("wigner grid: {m}"));
    let mut header = std::collections::HashMap::new();
    let mut values = Vec::new();
    for line in text.lines() {
        if let Some(h) = line.strip_prefix("# ") {
            if let Some((k, v)) = h.split_once(" = ") {
                header.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        for tok in line.split_whitespace() {
            values.push(num(tok)?);
        }
    }
    let get = |k: &str| header.get(k).ok_or_else(|| bad(&format!("missing '{k}' header")));
    let axis = |k: &str| -> Result<Vec<f64>, RunError> { get(k)?.split_whitespace().map(num).collect() };
    let x_axis = axis("x")?;
    let y_axis = axis("y")?;
    let nx: usize = get("nx")?.parse().map_err(|_| bad("bad nx"))?;
    let ny: usize = get("ny")?.parse().map_err(|_| bad("bad ny"))?;
    if x_axis.len() != nx || y_axis.len() != ny || values.len() != nx * ny {
        return Err(bad("shape does not match header"));
    }
    let mut grid = WignerGrid::new(x_axis, y_axis, values).map_err(|e| bad(&e.to_string()))?;
    grid.time = match get("time")?.as_str() {
        "none" => None,
        t => Some(num(t)?),
    };
    grid.params_hash = match get("params_hash")?.as_str() {
        "none" => None,
        h => Some(h.to_string()),
    };
    grid.imag_residue = num(get("imag_residue")?)?;
    Ok(grid)
}

/// Long form `x,y,w`, x-major.
pub fn wigner_long_csv(grid: &WignerGrid, golden: bool) -> String {
    let mut s = String::from("x,y,w\n");
    for (i, x) in grid.x_axis.iter().enumerate() {
        let xs = fmt_float(*x, golden);
        for (j, y) in grid.y_axis.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", xs, fmt_float(*y, golden), fmt_float(grid.at(i, j), golden));
        }
    }
    s
}

pub fn flag_label(flag: Option<SteadyFlag>) -> &'static str {
    match flag {
        None => "ok",
        Some(SteadyFlag::BelowThreshold) => "below-threshold",
        Some(SteadyFlag::Inconsistent) => "inconsistent",
    }
}

/// One row per solution. With no solutions a single row carries J, the
/// threshold and the flag, with the solution columns empty.
pub fn steady_states_csv(r: &SteadyStateReport, golden: bool) -> String {
    let f = |v: f64| fmt_float(v, golden);
    let mut s = String::from("j,threshold_j,n,phi1,phi2,residual1,residual2,branch,sin_relation,flag\n");
    if r.solutions.is_empty() {
        let _ = writeln!(s, "{},{},,,,,,,,{}", f(r.j), f(r.threshold_j), flag_label(r.flag));
    }
    for sol in &r.solutions {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            f(r.j),
            f(r.threshold_j),
            f(sol.n),
            f(sol.phases[0]),
            f(sol.phases[1]),
            f(sol.residuals[0]),
            f(sol.residuals[1]),
            sol.branch.label(),
            f(sol.sin_relation),
            flag_label(r.flag)
        );
    }
    s
}

#[derive(Serialize)]
struct SolutionJson {
    n: f64,
    phases: [f64; 2],
    residuals: [f64; 2],
    branch: &'static str,
    sin_relation: f64,
}

#[derive(Serialize)]
struct SteadyJson {
    j: f64,
    threshold_j: f64,
    paper_threshold_j: f64,
    flag: &'static str,
    closed_form_n: Option<f64>,
    closed_form_disagreement: bool,
    solutions: Vec<SolutionJson>,
}

pub fn steady_states_json(r: &SteadyStateReport, golden: bool) -> String {
    let g = |v: f64| rounded(v, golden);
    let doc = SteadyJson {
        j: g(r.j),
        threshold_j: g(r.threshold_j),
        paper_threshold_j: g(r.paper_threshold_j),
        flag: flag_label(r.flag),
        closed_form_n: r.paper_n.is_finite().then(|| g(r.paper_n)),
        closed_form_disagreement: r.paper_disagreement,
        solutions: r
            .solutions
            .iter()
            .map(|s| SolutionJson {
                n: g(s.n),
                phases: [g(s.phases[0]), g(s.phases[1])],
                residuals: [g(s.residuals[0]), g(s.residuals[1])],
                branch: s.branch.label(),
                sin_relation: g(s.sin_relation),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

/// `k,t,re,im,n`, one row per period.
pub fn strobe_csv(times: &[f64], points: &[C64], golden: bool) -> String {
    let mut s = String::from("k,t,re,im,n\n");
    for (k, (t, a)) in times.iter().zip(points).enumerate() {
        let _ = writeln!(s, "{k},{},{},{},{}", fmt_float(*t, golden), fmt_float(a.re, golden), fmt_float(a.im, golden), fmt_float(a.norm_sqr(), golden));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> WignerGrid {
        let x = vec![-1.0, 0.0, 1.0];
        let y = vec![-0.5, 0.5];
        let mut g = WignerGrid::new(x, y, vec![0.1, -0.2, 1.0 / 3.0, 2e-17, -4.5e3, 0.0]).unwrap();
        g.time = Some(2.0 / 3.0);
        g.params_hash = Some("abc123".into());
        g
    }

    #[test]
    fn float_digits() {
        assert_eq!(fmt_float(1.0 / 3.0, false), "3.33333333e-1");
        assert_eq!(fmt_float(1.0 / 3.0, true), "3.3333333333333331e-1");
    }

    #[test]
    fn wigner_text_round_trips() {
        let g = grid();
        let back = parse_wigner_text(&wigner_text(&g, true)).unwrap();
        assert_eq!(back, g);
        let short = wigner_text(&g, false);
        assert_eq!(wigner_text(&parse_wigner_text(&short).unwrap(), false), short);
    }

    #[test]
    fn long_csv_shape() {
        let s = wigner_long_csv(&grid(), false);
        assert_eq!(s.lines().count(), 7);
        assert!(s.starts_with("x,y,w\n-1.00000000e0,-5.00000000e-1,1.00000000e-1\n"));
    }

    #[test]
    fn timeseries_round_trip() {
        let t = [0.0, 0.5, 1.0];
        let n = [0.0, 1.0 / 7.0, 2.5];
        let csv = timeseries_csv(&t, &n, None, true);
        assert!(csv.lines().nth(1).unwrap().ends_with(','));
        let (t2, n2, e2) = parse_timeseries_csv(&csv).unwrap();
        assert_eq!((t2.as_slice(), n2.as_slice(), e2), (&t[..], &n[..], None));
        let e = [0.0, 0.1, 0.2];
        let (_, _, e3) = parse_timeseries_csv(&timeseries_csv(&t, &n, Some(&e), true)).unwrap();
        assert_eq!(e3.unwrap(), e);
    }
}
