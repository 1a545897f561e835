//! Desk-scale runs reproducing the documented behaviour of each component.

use fujita_core::semigroup::{evolve_linear, fit_decay_exponent, DecayMeasure, LebesgueIndex};
use fujita_core::solver::{check_supersolution_domination, evolve_nonlinear, OutcomeKind, SourceSpec};
use fujita_core::sweep::{emit, run_sweep, Format, PhaseDiagram, SweepSpec};
use fujita_core::testfn::fujita_functional;
use fujita_core::{bracket, make_profile, Execution, Field, SimConfig};

fn bump(cfg: &SimConfig, amp: f64, width: f64) -> Field {
    Field::from_fn(cfg.grid().unwrap(), |x| amp * (-(x / width).powi(2)).exp())
}

#[test]
fn decay_pairs_match_predicted_rates() {
    use LebesgueIndex::*;
    for alpha in [0.0, 0.5, 1.0] {
        let prof = make_profile(alpha).unwrap();
        let cfg = SimConfig::default().with_t_end(1e3);
        let traj = evolve_linear(&bump(&cfg, 1.0, 3.0), 1e3, &prof, &cfg).unwrap();
        for (q1, q2, scale) in [(One, Infinity, 0.5), (One, Two, 0.25), (Two, Infinity, 0.25)] {
            let want = -(1.0 + 2.0 * alpha) * scale;
            let got = fit_decay_exponent(&traj, DecayMeasure::Pair { q1, q2 }, (10.0, 1e3)).unwrap();
            assert!((got - want).abs() <= 0.1, "alpha {alpha} ({q1:?},{q2:?}): {got} vs {want}");
        }
    }
}

#[test]
fn phase_diagram_at_classical_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SweepSpec {
        alpha: 0.0,
        m: 0.0,
        p_grid: vec![2.0, 2.5, 3.5, 4.0],
        amplitude_grid: vec![0.01],
        bump_width: 30.0,
        source: SourceSpec::FullWeight,
        overrides: SimConfig::default(),
        output_dir: Some(dir.path().to_path_buf()),
    };
    let d = run_sweep(&spec, Execution::Parallel).unwrap();
    let labels: Vec<&str> = d.cells.iter().map(|c| c.outcome.label()).collect();
    assert_eq!(labels, ["blowup", "blowup", "global_decay", "global_decay"]);
    for c in &d.cells {
        if c.p < d.p_star {
            assert!(!matches!(c.outcome, OutcomeKind::GlobalDecay { .. }));
        }
        if c.p > d.p_star + 0.5 {
            assert!(!matches!(c.outcome, OutcomeKind::Blowup { .. }));
        }
    }
    let json = std::fs::read_to_string(dir.path().join("phase_diagram.json")).unwrap();
    assert_eq!(serde_json::from_str::<PhaseDiagram>(&json).unwrap(), d);
    let csv = std::fs::read(dir.path().join("phase_diagram.csv")).unwrap();
    let again = tempfile::tempdir().unwrap();
    emit(&run_sweep(&SweepSpec { output_dir: None, ..spec }, Execution::Sequential).unwrap(), Format::Csv, again.path())
        .unwrap();
    assert_eq!(std::fs::read(again.path().join("phase_diagram.csv")).unwrap(), csv);
    let svg = std::fs::read_to_string(dir.path().join("phase_diagram.svg")).unwrap();
    assert_eq!(svg.matches("class=\"p-star\"").count(), 1);
}

#[test]
fn blowup_time_is_stable_under_refinement() {
    let prof = make_profile(0.0).unwrap();
    let mut times = Vec::new();
    for n in [4001, 8001] {
        let cfg = SimConfig::default().with_n(n);
        let (out, _) = evolve_nonlinear(&bump(&cfg, 1.0, 30.0), 2.0, 0.0, &SourceSpec::FullWeight, &prof, &cfg).unwrap();
        match out.kind {
            OutcomeKind::Blowup { t_est } => times.push(t_est),
            k => panic!("expected blow-up, got {k:?}"),
        }
    }
    assert!(times[0].is_finite());
    assert!((times[1] / times[0] - 1.0).abs() <= 0.05, "{times:?}");
}

#[test]
fn weighted_regime_decay_rates() {
    // small-data decay for 0 <= alpha <= 1/2: ||u/psi|| ~ t^-(1+2a)/2, ||u|| ~ t^-(1+a)/2
    let alpha = 0.3;
    let prof = make_profile(alpha).unwrap();
    let cfg = SimConfig::default();
    let (out, _) = evolve_nonlinear(&bump(&cfg, 0.01, 30.0), 3.5, 0.0, &SourceSpec::FullWeight, &prof, &cfg).unwrap();
    let (lo, hi) = (cfg.t_end / 10.0, cfg.t_end);
    let star = out.star_slope(lo, hi).unwrap();
    let plain = out.linf_slope(lo, hi).unwrap();
    assert!((star + (1.0 + 2.0 * alpha) / 2.0).abs() <= 0.15, "{star}");
    assert!((plain + (1.0 + alpha) / 2.0).abs() <= 0.15, "{plain}");
}

#[test]
fn small_data_stays_below_supersolution() {
    let (alpha, eps, delta) = (-0.25, 1e-3, 0.05);
    let prof = make_profile(alpha).unwrap();
    let cfg = SimConfig::default().with_t_end(1e3);
    let u0 = Field::from_fn(cfg.grid().unwrap(), |x| {
        0.5 * eps * bracket(x).powf(-1.0 - alpha) * (-(x / 30.0).powi(2)).exp()
    });
    let (out, traj) = evolve_nonlinear(&u0, 12.0, 0.0, &SourceSpec::FullWeight, &prof, &cfg).unwrap();
    assert!(!matches!(out.kind, OutcomeKind::Blowup { .. }));
    let r = check_supersolution_domination(&traj, &prof, delta, eps).unwrap();
    assert!(r.holds, "{r:?}");
    assert_eq!(traj.final_time(), 1e3);
}

#[test]
fn fujita_functional_bookkeeping() {
    let prof = make_profile(0.0).unwrap();
    let cfg = SimConfig::default();
    let zero = Field::zeros(cfg.grid().unwrap());
    let (_, traj) = evolve_nonlinear(&zero, 4.0, 0.0, &SourceSpec::FullWeight, &prof, &cfg).unwrap();
    let f = fujita_functional(&traj, &prof, 0.0, 4.0, 100.0).unwrap();
    assert_eq!((f.initial_term, f.weighted_p_integral, f.starred_p_integral), (0.0, 0.0, 0.0));

    // supercritical decay: the transition-layer integral vanishes as R grows;
    // a narrow datum has spread well before t = 100
    let (_, traj) = evolve_nonlinear(&bump(&cfg, 0.1, 3.0), 4.0, 0.0, &SourceSpec::FullWeight, &prof, &cfg).unwrap();
    let starred: Vec<f64> = [1e2, 1e3, 1e4]
        .iter()
        .map(|&r| fujita_functional(&traj, &prof, 0.0, 4.0, r).unwrap().starred_p_integral)
        .collect();
    assert!(starred[0] > starred[1] && starred[1] > starred[2], "{starred:?}");
    assert!(!fujita_functional(&traj, &prof, 0.0, 4.0, 1e4).unwrap().truncated);

    // subcritical run cut at nested horizons: the p-integral grows with the horizon
    let mut last = 0.0;
    for t_end in [10.0, 40.0, 100.0] {
        let cfg = SimConfig::default().with_t_end(t_end);
        let (_, traj) = evolve_nonlinear(&bump(&cfg, 0.01, 30.0), 2.0, 0.0, &SourceSpec::FullWeight, &prof, &cfg).unwrap();
        let f = fujita_functional(&traj, &prof, 0.0, 2.0, 1e4).unwrap();
        assert!(f.truncated);
        assert!(f.weighted_p_integral > last);
        last = f.weighted_p_integral;
    }
}
