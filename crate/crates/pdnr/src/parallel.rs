//! Rayon drivers for QSD ensembles and Wigner grids.
//!
//! Work is split into fixed units (reduction blocks, grid rows) whose results
//! are combined in index order, so the worker count never changes the output.

use pdnr_core::fock::{DensityMatrix, PureState};
use pdnr_core::model::ModelParams;
use pdnr_core::qsd::{simulate_block, EnsembleAccumulator, QsdConfig, TrajectoryEnsembleResult};
use pdnr_core::wigner::{displaced_parity_value, prepare, GridSpec, WignerGrid, WignerKernel, WignerMethod, WignerOptions};
use pdnr_core::C64;
use rayon::prelude::*;

use crate::RunError;

/// Optional cap on worker threads.
pub const WORKERS_ENV: &str = "PDNR_WORKERS";

/// Blocks scheduled per wave; bounds the accumulators held at once.
pub const BLOCKS_PER_WAVE: usize = 64;

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn worker_count() -> Result<usize, RunError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(RunError::Config { key: WORKERS_ENV.into(), message: format!("'{v}' is not a positive integer") }),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn build_pool(workers: usize) -> Result<rayon::ThreadPool, RunError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| RunError::Unsupported(format!("thread pool: {e}")))
}

/// Same result as `pdnr_core::qsd::run_ensemble`, bit for bit.
pub fn run_ensemble_parallel(
    psi0: &PureState,
    config: &QsdConfig,
    params: &ModelParams,
    pool: &rayon::ThreadPool,
) -> Result<TrajectoryEnsembleResult, RunError> {
    params.validate()?;
    config.validate()?;
    let indices = config.density.resolve(config.sample_times.len())?;
    let mut total = EnsembleAccumulator::new(config.sample_times.len(), indices, params.dim);
    let n_blocks = config.n_blocks();
    let mut start = 0;
    while start < n_blocks {
        let end = (start + BLOCKS_PER_WAVE).min(n_blocks);
        let wave: Vec<_> =
            pool.install(|| (start..end).into_par_iter().map(|b| simulate_block(psi0, config, params, b)).collect());
        for acc in wave {
            total.merge(&acc?);
        }
        start = end;
    }
    Ok(total.finish(config)?)
}

/// Same result as `pdnr_core::wigner::wigner_from_density`, rows in parallel.
pub fn wigner_parallel(
    rho: &DensityMatrix,
    spec: &GridSpec,
    options: &WignerOptions,
    pool: &rayon::ThreadPool,
) -> Result<WignerGrid, RunError> {
    prepare(rho, spec, options)?;
    let xs = spec.x_axis();
    let ys = spec.y_axis();
    let rows: Vec<(Vec<f64>, f64)> = match options.method {
        WignerMethod::Laguerre => {
            let kernel = WignerKernel::new(rho);
            pool.install(|| xs.par_iter().map(|&x| (kernel.row(x, &ys), 0.0)).collect())
        }
        WignerMethod::Expm { work_dim } => {
            let padded = rho.matrix().embed(work_dim);
            let rows: Result<Vec<_>, _> = pool.install(|| {
                xs.par_iter()
                    .map(|&x| {
                        let mut row = Vec::with_capacity(ys.len());
                        let mut residue: f64 = 0.0;
                        for &y in &ys {
                            let (re, im) = displaced_parity_value(&padded, C64::new(x, y))?;
                            residue = residue.max(im.abs());
                            row.push(re);
                        }
                        Ok::<_, pdnr_core::Error>((row, residue))
                    })
                    .collect()
            });
            rows?
        }
    };
    let residue = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let values = rows.into_iter().flat_map(|r| r.0).collect();
    let mut grid = WignerGrid::new(xs, ys, values)?;
    grid.imag_residue = residue;
    Ok(grid)
}
