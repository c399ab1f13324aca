use pdnr::parallel::{build_pool, run_ensemble_parallel, wigner_parallel};
use pdnr_core::linalg::CMatrix;
use pdnr::RunError;
use pdnr_core::qsd::{run_ensemble, DensitySampling, NoiseMode, QsdConfig, QsdScheme};
use pdnr_core::wigner::{oracle, wigner_from_density, GridSpec, WignerKernel, WignerMethod, WignerOptions};
use pdnr_core::{DensityMatrix, Drive, ModelParams, PulseTrain, PureState, C64};
use proptest::prelude::*;

fn density(dim: usize, support: usize) -> impl Strategy<Value = DensityMatrix> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), support * support).prop_map(move |a| {
        let m = CMatrix::from_fn(dim, |i, j| {
            if i < support && j < support {
                C64::new(a[i * support + j].0, a[i * support + j].1)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let m = m.matmul(&m.adjoint());
        let tr = m.trace().re;
        DensityMatrix::from_matrix(m.scale(C64::new(1.0 / tr, 0.0))).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn parallel_grid_equals_serial(rho in density(12, 6), workers in 1usize..5) {
        let spec = GridSpec::symmetric(3.0, 17);
        let opts = WignerOptions::default();
        let a = wigner_from_density(&rho, &spec, &opts).unwrap();
        let b = wigner_parallel(&rho, &spec, &opts, &build_pool(workers).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kernel_matches_quadrature_oracle(rho in density(15, 10), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let (re, im) = oracle::wigner_quadrature(&rho, x, y, 8.0, 4001);
        prop_assert!((WignerKernel::new(&rho).evaluate(C64::new(x, y)) - re).abs() < 1e-6);
        prop_assert!(im.abs() < 1e-6);
    }
}

#[test]
fn expm_route_runs_in_parallel() {
    let rho = DensityMatrix::fock(8, 2).unwrap();
    let spec = GridSpec::symmetric(2.0, 9);
    let opts = WignerOptions { method: WignerMethod::Expm { work_dim: 60 }, ..WignerOptions::default() };
    let a = wigner_from_density(&rho, &spec, &opts).unwrap();
    let b = wigner_parallel(&rho, &spec, &opts, &build_pool(3).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ensemble_is_independent_of_workers() {
    let p = ModelParams::new(2.0, 0.5, 2.0, 12, Drive::Pulsed(PulseTrain::new(0.5, 2.0)));
    let psi = PureState::vacuum(12).unwrap();
    let mut cfg = QsdConfig::new(70, 5, vec![0.0, 0.5, 1.0, 1.5]);
    cfg.step = 2e-3;
    cfg.density = DensitySampling::Indices(vec![1, 3]);
    let serial = run_ensemble(&psi, &cfg, &p).unwrap();
    for w in [1, 2, 4, 7] {
        let par = run_ensemble_parallel(&psi, &cfg, &p, &build_pool(w).unwrap()).unwrap();
        assert_eq!(par.mean_n, serial.mean_n);
        assert_eq!(par.stderr_n, serial.stderr_n);
        assert_eq!(par.density_estimates, serial.density_estimates);
    }
}

#[test]
fn trajectory_errors_surface() {
    // one drift-only Euler step of length 2 maps |1> to zero
    let p = ModelParams::new(0.0, 0.0, 0.0, 4, Drive::Cw);
    let psi = PureState::fock(4, 1).unwrap();
    let cfg = QsdConfig {
        step: 2.0,
        scheme: QsdScheme::EulerMaruyama,
        noise: NoiseMode::Zero,
        ..QsdConfig::new(40, 1, vec![0.0, 2.0])
    };
    let serial = run_ensemble(&psi, &cfg, &p).map(|_| ()).unwrap_err();
    let par = run_ensemble_parallel(&psi, &cfg, &p, &build_pool(3).unwrap()).map(|_| ()).unwrap_err();
    assert_eq!(par.to_string(), serial.to_string());
    assert!(matches!(par, RunError::Core(pdnr_core::Error::Trajectory { index: 0, .. })), "{par:?}");
}
