use pdnr_core::linalg::{expm, CMatrix};
use pdnr_core::master::{evolve_master, lindblad_rhs, lindblad_rhs_dense, MasterOptions};
use pdnr_core::qsd::{run_ensemble, simulate_block, QsdConfig, DensitySampling, EnsembleAccumulator};
use pdnr_core::semiclassics::{semiclassical_rhs, steady_states, threshold_j, RESIDUAL_TOL};
use pdnr_core::wigner::{normalization, symmetry_defect, wigner_from_density, GridSpec, WignerKernel, WignerOptions};
use pdnr_core::{DensityMatrix, Drive, ModelParams, PulseTrain, PureState, C64};
use proptest::prelude::*;

fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

/// ρ = AA†/tr(AA†) with A supported on the lowest `support` levels.
fn density(dim: usize, support: usize) -> impl Strategy<Value = DensityMatrix> {
    proptest::collection::vec(complex(), support * support).prop_map(move |a| {
        let a = CMatrix::from_fn(dim, |i, j| if i < support && j < support { a[i * support + j] } else { C64::new(0.0, 0.0) });
        let m = a.matmul(&a.adjoint());
        let tr = m.trace().re;
        DensityMatrix::from_matrix(m.scale(C64::new(1.0 / tr, 0.0))).unwrap()
    })
}

/// Keeps only even-even and odd-odd entries.
fn parity_block(rho: &DensityMatrix) -> DensityMatrix {
    let d = rho.dim();
    let m = CMatrix::from_fn(d, |i, j| if (i + j) % 2 == 0 { rho.matrix()[(i, j)] } else { C64::new(0.0, 0.0) });
    let tr = m.trace().re;
    DensityMatrix::from_matrix(m.scale(C64::new(1.0 / tr, 0.0))).unwrap()
}

fn params() -> impl Strategy<Value = ModelParams> {
    (-5.0..5.0f64, 0.0..2.0f64, 0.0..4.0f64, -3.0..3.0f64, 0.0..1.0f64, any::<bool>()).prop_map(
        |(delta, chi, omega, phase, n_bath, pulsed)| {
            let drive = if pulsed { Drive::Pulsed(PulseTrain::new(0.5, 2.0)) } else { Drive::Cw };
            let mut p = ModelParams::new(delta, chi, omega, 8, drive);
            p.drive_phase = phase;
            p.n_bath = n_bath;
            p
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rhs_is_traceless_hermitian_and_matches_dense(rho in density(8, 8), p in params(), t in 0.0..6.0f64) {
        let fast = lindblad_rhs(&rho, t, &p).unwrap();
        let dense = lindblad_rhs_dense(&rho, t, &p).unwrap();
        prop_assert!(fast.max_abs_diff(&dense) < 1e-11 * (1.0 + dense.max_abs()));
        prop_assert!(fast.trace().norm() < 1e-11);
        prop_assert!(fast.hermiticity_defect() < 1e-11);
    }

    #[test]
    fn master_keeps_a_density_matrix(rho in density(8, 4), p in params()) {
        let r = evolve_master(&rho, &[0.0, 0.2, 0.4], &p, &MasterOptions { truncation_guard: None, ..MasterOptions::with_step(1e-3) }).unwrap();
        for s in &r.states {
            prop_assert!((s.trace() - 1.0).abs() < 1e-12);
            prop_assert!(s.hermiticity_defect() < 1e-12);
            prop_assert!(s.min_eigenvalue() > -1e-8);
        }
    }

    #[test]
    fn expm_of_antihermitian_is_unitary(h in proptest::collection::vec(complex(), 36), s in 0.1..20.0f64) {
        let a = CMatrix::from_fn(6, |i, j| h[i * 6 + j]);
        let herm = CMatrix::from_fn(6, |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
        let u = expm(&herm.scale(C64::new(0.0, -s)));
        prop_assert!(u.matmul(&u.adjoint()).max_abs_diff(&CMatrix::identity(6)) < 1e-10);
    }

    #[test]
    fn parity_block_states_have_point_symmetric_wigner(rho in density(12, 6)) {
        let sym = parity_block(&rho);
        let g = wigner_from_density(&sym, &GridSpec::symmetric(4.0, 21), &WignerOptions::default()).unwrap();
        prop_assert!(symmetry_defect(&g).unwrap() <= 1e-12);
    }

    #[test]
    fn wigner_is_bounded_and_normalized(rho in density(10, 5)) {
        let g = wigner_from_density(&rho, &GridSpec::symmetric(6.0, 81), &WignerOptions::default()).unwrap();
        prop_assert!(g.max_abs() <= 2.0 / std::f64::consts::PI + 1e-12);
        prop_assert!((normalization(&g) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn wigner_of_mixture_is_mixture(a in density(8, 4), b in density(8, 4), w in 0.0..1.0f64, x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let m = a.mix(&b, w).unwrap();
        let z = C64::new(x, y);
        let lhs = WignerKernel::new(&m).evaluate(z);
        let rhs = w * WignerKernel::new(&a).evaluate(z) + (1.0 - w) * WignerKernel::new(&b).evaluate(z);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn classical_flow_is_odd(p in params(), re in -3.0..3.0f64, im in -3.0..3.0f64, t in 0.0..5.0f64) {
        let a = C64::new(re, im);
        prop_assert_eq!(semiclassical_rhs(-a, t, &p), -semiclassical_rhs(a, t, &p));
    }

    #[test]
    fn steady_states_are_fixed_points(delta in -3.0..3.0f64, chi in 0.05..1.0f64, excess in 0.1..10.0f64) {
        let mut p = ModelParams::new(delta, chi, 0.0, 2, Drive::Cw);
        let j = threshold_j(&p) + excess;
        p.drive_intensity = j;
        let r = steady_states(&p).unwrap();
        for s in &r.solutions {
            prop_assert!(s.n > 0.0);
            for &phi in &s.phases {
                let a = C64::from_polar(s.n.sqrt(), phi);
                prop_assert!(semiclassical_rhs(a, 0.0, &p).norm() <= RESIDUAL_TOL * (1.0 + s.n));
            }
            prop_assert!((s.sin_relation.abs() - j.powf(-0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn qsd_blocks_compose_in_order(seed in any::<u64>(), n_traj in 1usize..40) {
        let p = ModelParams::new(1.0, 0.5, 1.5, 6, Drive::Cw);
        let psi = PureState::vacuum(6).unwrap();
        let mut cfg = QsdConfig::new(n_traj, seed, vec![0.0, 0.05, 0.1]);
        cfg.step = 1e-2;
        cfg.density = DensitySampling::Indices(vec![2]);
        let whole = run_ensemble(&psi, &cfg, &p).unwrap();
        let mut acc = EnsembleAccumulator::new(3, vec![2], 6);
        for b in 0..cfg.n_blocks() {
            acc.merge(&simulate_block(&psi, &cfg, &p, b).unwrap());
        }
        let parts = acc.finish(&cfg).unwrap();
        prop_assert_eq!(&whole.mean_n, &parts.mean_n);
        prop_assert_eq!(&whole.stderr_n, &parts.stderr_n);
        prop_assert_eq!(whole.density_estimates, parts.density_estimates);
    }
}

#[test]
fn qsd_seed_selects_the_noise() {
    let p = ModelParams::new(1.0, 0.5, 1.5, 6, Drive::Cw);
    let psi = PureState::vacuum(6).unwrap();
    let mut cfg = QsdConfig::new(8, 3, vec![0.0, 0.5]);
    cfg.step = 1e-2;
    let a = run_ensemble(&psi, &cfg, &p).unwrap();
    let b = run_ensemble(&psi, &cfg, &p).unwrap();
    assert_eq!(a.mean_n, b.mean_n);
    cfg.seed = 4;
    let c = run_ensemble(&psi, &cfg, &p).unwrap();
    assert_ne!(a.mean_n[1], c.mean_n[1]);
}

#[test]
fn vacuum_decay_without_drive_is_trivial() {
    let p = ModelParams::new(0.0, 0.0, 0.0, 10, Drive::Cw);
    let r = evolve_master(&DensityMatrix::vacuum(10).unwrap(), &[0.0, 1.0, 2.0], &p, &MasterOptions::default()).unwrap();
    assert!(r.mean_n.iter().all(|n| *n == 0.0));
}
