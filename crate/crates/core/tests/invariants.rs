use std::sync::Arc;

use fujita_core::config::Schedule;
use fujita_core::inequalities::{ratio, FamilyKind, FamilyMember, InequalityKind};
use fujita_core::semigroup::{check_contraction, evolve_linear};
use fujita_core::solver::{evolve_nonlinear, SourceSpec};
use fujita_core::sweep::{run_sweep, SweepSpec};
use fujita_core::{make_profile, Execution, Field, Grid, SimConfig};
use proptest::prelude::*;

fn small_cfg(t_end: f64) -> SimConfig {
    SimConfig {
        n: 401,
        xmax: Some(40.0),
        t_end,
        snapshots: Schedule::Geometric { t0: 0.05, ratio: 1.5 },
        ..SimConfig::default()
    }
}

fn mixture(grid: Arc<Grid>, centers: &[f64], weights: &[f64]) -> Field {
    Field::from_fn(grid, |x| centers.iter().zip(weights).map(|(c, w)| w * (-(x - c).powi(2) / 4.0).exp()).sum())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_flow_contracts_and_stays_nonnegative(
        alpha in -0.45..2.0f64,
        centers in prop::collection::vec(-15.0..15.0f64, 1..4),
        weights in prop::collection::vec(0.01..3.0f64, 3),
    ) {
        let prof = make_profile(alpha).unwrap();
        let cfg = small_cfg(5.0);
        let f0 = mixture(cfg.grid().unwrap(), &centers, &weights);
        let traj = evolve_linear(&f0, cfg.t_end, &prof, &cfg).unwrap();
        prop_assert!(check_contraction(&traj, &prof).is_ok());
        for s in &traj.snapshots {
            let m = s.max_abs();
            prop_assert!(s.values.iter().all(|&v| v >= -1e-12 * m));
        }
    }

    #[test]
    fn sign_changing_data_contracts_in_sup(
        alpha in -0.45..2.0f64,
        a in -2.0..2.0f64,
        b in -2.0..2.0f64,
    ) {
        let prof = make_profile(alpha).unwrap();
        let cfg = small_cfg(5.0);
        let f0 = Field::from_fn(cfg.grid().unwrap(), |x| a * (-(x - 3.0).powi(2)).exp() + b * (-(x + 3.0).powi(2)).exp());
        let traj = evolve_linear(&f0, cfg.t_end, &prof, &cfg).unwrap();
        let s = &traj.norms.linf_psi_inv;
        prop_assert!(s.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-10) + 1e-300));
    }

    #[test]
    fn nonlinear_solution_dominates_linear(
        alpha in -0.4..1.5f64,
        p in 1.5..5.0f64,
        amp in 0.01..0.3f64,
    ) {
        let prof = make_profile(alpha).unwrap();
        let cfg = SimConfig { fixed_dt: Some(0.02), ..small_cfg(2.0) };
        let u0 = Field::from_fn(cfg.grid().unwrap(), |x| amp * (-(x / 3.0).powi(2)).exp());
        let (_, nl) = evolve_nonlinear(&u0, p, 0.0, &SourceSpec::FullWeight, &prof, &cfg).unwrap();
        let (_, lin) = evolve_nonlinear(&u0, p, 0.0, &SourceSpec::Off, &prof, &cfg).unwrap();
        for (a, b) in nl.snapshots.iter().zip(&lin.snapshots) {
            prop_assert_eq!(a.time, b.time);
            let scale = b.max_abs();
            prop_assert!(a.values.iter().zip(&b.values).all(|(u, v)| *u >= v - 1e-10 * scale));
            prop_assert!(a.values.iter().all(|&u| u >= 0.0));
        }
    }

    #[test]
    fn ratios_are_homogeneous(
        alpha in 0.55..2.5f64,
        center in -10.0..10.0f64,
        width in 0.5..8.0f64,
        lambda in 1e-3..1e3f64,
    ) {
        let prof = make_profile(alpha).unwrap();
        let m = FamilyMember { kind: FamilyKind::Gaussians, center, width, amplitude: 1.0 };
        let f = m.field(&prof).unwrap();
        let g = FamilyMember { amplitude: lambda, ..m }.field(&prof).unwrap();
        for kind in [
            InequalityKind::Nash,
            InequalityKind::HardyL2,
            InequalityKind::HardyLinf,
            InequalityKind::HardyProof,
            InequalityKind::WeightedNashL2,
            InequalityKind::WeightedNashLinf,
        ] {
            let (a, b) = (ratio(kind, &f, &prof).unwrap(), ratio(kind, &g, &prof).unwrap());
            prop_assert!(a.is_finite() && a > 0.0);
            prop_assert!((a - b).abs() <= 1e-12 * a, "{:?}: {} vs {}", kind, a, b);
        }
    }
}

#[test]
fn sweep_is_deterministic_across_execution_modes() {
    let spec = SweepSpec {
        alpha: 0.3,
        m: 0.5,
        p_grid: vec![1.5, 3.0, 6.0],
        amplitude_grid: vec![0.1, 2.0],
        bump_width: 3.0,
        source: SourceSpec::FullWeight,
        overrides: small_cfg(3.0),
        output_dir: None,
    };
    let a = run_sweep(&spec, Execution::Parallel).unwrap();
    let b = run_sweep(&spec, Execution::Sequential).unwrap();
    assert_eq!(a.cells, b.cells);
    let pairs: Vec<(f64, f64)> = a.cells.iter().map(|c| (c.p, c.amplitude)).collect();
    let mut sorted = pairs.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    assert_eq!(pairs, sorted);
    assert_eq!(pairs.len(), 6);
}
