//! Cut-off test functions `Phi_R = eta((x^2 + t)/R)^(2p')`, the bound on
//! `|d_t(psi Phi_R)| + |L(psi Phi_R)|`, the space-time functional they feed
//! and the logarithmic growth of `int_0^t ||v_*||_inf^(2/(1+2a))`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fit::linear_fit;
use crate::profile::{bracket, PotentialProfile};
use crate::semigroup::Trajectory;

/// Quintic smoothstep `6t^5 - 15t^4 + 10t^3` and its first two derivatives.
fn smoothstep(t: f64) -> (f64, f64, f64) {
    let s = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    let d1 = 30.0 * t * t * (1.0 - t) * (1.0 - t);
    let d2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    (s, d1, d2)
}

/// Cut-off `eta` with derivatives: 1 on `s <= 1/2`, 0 on `s >= 1`.
pub fn eta(s: f64) -> (f64, f64, f64) {
    if s <= 0.5 {
        (1.0, 0.0, 0.0)
    } else if s >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        let (v, d1, d2) = smoothstep(2.0 * s - 1.0);
        (1.0 - v, -2.0 * d1, -4.0 * d2)
    }
}

/// `eta` restricted to `s > 1/2`, zero on the plateau.
pub fn eta_star(s: f64) -> f64 {
    if s <= 0.5 {
        0.0
    } else {
        eta(s).0
    }
}

/// Conjugate exponent `p / (p - 1)`.
pub fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFnValue {
    pub xi: f64,
    pub phi: f64,
    pub phi_star: f64,
}

pub fn eval_test_function(r: f64, p: f64, x: f64, t: f64) -> TestFnValue {
    let xi = (x * x + t) / r;
    let k = 2.0 * conjugate(p);
    TestFnValue { xi, phi: eta(xi).0.powf(k), phi_star: eta_star(xi).powf(k) }
}

/// `|d_t(psi Phi_R)| + |L(psi Phi_R)|` from closed forms, using
/// `L(psi Phi) = -2 psi' Phi_x - psi Phi_xx`.
pub fn bound_lhs(prof: &PotentialProfile, r: f64, p: f64, x: f64, t: f64) -> f64 {
    let xi = (x * x + t) / r;
    let k = 2.0 * conjugate(p);
    let (e, e1, e2) = eta(xi);
    if e1 == 0.0 && e2 == 0.0 {
        return 0.0;
    }
    let phi_xi = k * e.powf(k - 1.0) * e1;
    let phi_xixi = k * (k - 1.0) * e.powf(k - 2.0) * e1 * e1 + k * e.powf(k - 1.0) * e2;
    let phi_x = phi_xi * 2.0 * x / r;
    let phi_xx = phi_xixi * (2.0 * x / r).powi(2) + phi_xi * 2.0 / r;
    let psi = prof.psi(x);
    (psi * phi_xi / r).abs() + (2.0 * prof.psi_prime(x) * phi_x + psi * phi_xx).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFnBound {
    pub r: f64,
    pub p: f64,
    pub c_t_estimate: f64,
    /// Largest left-hand side over samples with `xi <= 1/2`.
    pub plateau_residual_max: f64,
    pub samples: usize,
}

/// `(x, t)` samples covering `supp Phi_R` on `x >= 0`: `n + 1` points per axis.
pub fn default_samples(r: f64, n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity((n + 1) * (n + 1));
    for i in 0..=n {
        let x = r.sqrt() * i as f64 / n as f64;
        for j in 0..=n {
            out.push((x, r * j as f64 / n as f64));
        }
    }
    out
}

/// Largest `(|d_t(psi Phi_R)| + |L(psi Phi_R)|) R / (psi Phi*_R^(1/p))` over
/// the samples; points where both sides vanish contribute zero.
pub fn verify_testfn_bound(prof: &PotentialProfile, r: f64, p: f64, samples: &[(f64, f64)]) -> Result<TestFnBound> {
    if !(r >= 1.0 && r.is_finite()) {
        return invalid(format!("R must be at least 1, got {r}"));
    }
    if !(p > 1.0) {
        return invalid(format!("p must exceed 1, got {p}"));
    }
    if samples.is_empty() {
        return invalid("sample set is empty");
    }
    let mut c_t: f64 = 0.0;
    let mut plateau: f64 = 0.0;
    for &(x, t) in samples {
        let lhs = bound_lhs(prof, r, p, x, t);
        let v = eval_test_function(r, p, x, t);
        if v.xi <= 0.5 {
            plateau = plateau.max(lhs);
            continue;
        }
        let rhs = prof.psi(x) * v.phi_star.powf(1.0 / p);
        if lhs == 0.0 {
            continue;
        }
        c_t = c_t.max(lhs * r / rhs);
    }
    Ok(TestFnBound { r, p, c_t_estimate: c_t, plateau_residual_max: plateau, samples: samples.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FujitaFunctional {
    /// `int u_0 psi Phi_R(., 0)`
    pub initial_term: f64,
    /// `int int <x>^-m u^p psi Phi_R`
    pub weighted_p_integral: f64,
    /// `int int <x>^-m u^p psi Phi*_R`
    pub starred_p_integral: f64,
    /// The trajectory ends before `t = R`, the end of the cut-off's support.
    pub truncated: bool,
}

/// Space-time trapezoid quadratures over the trajectory snapshots.
pub fn fujita_functional(traj: &Trajectory, prof: &PotentialProfile, m: f64, p: f64, r: f64) -> Result<FujitaFunctional> {
    if !(r > 0.0 && p > 1.0 && m >= 0.0) {
        return invalid("need R > 0, p > 1 and m >= 0");
    }
    let first = traj.snapshots.first().ok_or_else(|| crate::Error::InvalidInput("empty trajectory".into()))?;
    let grid = &first.grid;
    let weight: Vec<f64> = grid.nodes().iter().map(|&x| bracket(x).powf(-m) * prof.psi(x)).collect();
    let init: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&first.values)
        .map(|(&x, &u)| u * prof.psi(x) * eval_test_function(r, p, x, 0.0).phi)
        .collect();
    let mut plain = Vec::with_capacity(traj.snapshots.len());
    let mut starred = Vec::with_capacity(traj.snapshots.len());
    for snap in &traj.snapshots {
        let (mut a, mut b) = (Vec::with_capacity(grid.n()), Vec::with_capacity(grid.n()));
        for ((&x, &u), &w) in snap.grid.nodes().iter().zip(&snap.values).zip(&weight) {
            let v = eval_test_function(r, p, x, snap.time);
            let up = u.max(0.0).powf(p) * w;
            a.push(up * v.phi);
            b.push(up * v.phi_star);
        }
        plain.push(snap.grid.trapezoid(&a));
        starred.push(snap.grid.trapezoid(&b));
    }
    let times = traj.times();
    Ok(FujitaFunctional {
        initial_term: grid.trapezoid(&init),
        weighted_p_integral: trapezoid_in_time(times, &plain),
        starred_p_integral: trapezoid_in_time(times, &starred),
        truncated: traj.final_time() < r,
    })
}

fn trapezoid_in_time(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Cumulative trapezoid integral, starting at zero.
fn cumulative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..times.len() {
        acc += 0.5 * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        out.push(acc);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthVerdict {
    /// Slope against `log(1+t)` positive and steady across the last two decades.
    Logarithmic,
    /// Slope dropped below half its previous-decade value.
    Sublogarithmic,
    Indeterminate,
}

/// Largest relative change of the slope between decades still called steady.
pub const LOG_SLOPE_STABILITY: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogGrowthReport {
    pub times: Vec<f64>,
    pub y: Vec<f64>,
    /// Slope of `Y` against `log(1+t)` on the final decade.
    pub fit_slope_vs_logt: f64,
    /// Same on the decade before.
    pub previous_slope: f64,
    /// `int f psi != 0`, the hypothesis of the logarithmic lower bound.
    pub hypothesis_holds: bool,
    pub verdict: GrowthVerdict,
    pub passes: bool,
}

fn decade_slope(times: &[f64], y: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(y)
        .filter(|(&t, _)| t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12))
        .map(|(&t, &v)| (t.ln_1p(), v))
        .unzip();
    if xs.len() < crate::fit::MIN_FIT_SAMPLES {
        return invalid(format!("only {} samples in [{lo}, {hi}]", xs.len()));
    }
    Ok(linear_fit(&xs, &ys)?.0)
}

/// Fits `Y(t) = int_0^t ||v_*||_inf^(2/(1+2a)) ds` against `log(1+t)` over the
/// final two decades of a linear trajectory.
pub fn log_growth_check(traj: &Trajectory, prof: &PotentialProfile) -> Result<LogGrowthReport> {
    let alpha = prof.alpha();
    if !(alpha > -0.5) {
        return invalid(format!("log-growth check needs alpha > -1/2, got {alpha}"));
    }
    let times = traj.times().to_vec();
    let t_end = traj.final_time();
    if times.len() < 2 * crate::fit::MIN_FIT_SAMPLES || t_end < 100.0 {
        return invalid("trajectory too short: need two decades ending past t = 100");
    }
    let q = 2.0 / (1.0 + 2.0 * alpha);
    let integrand: Vec<f64> = traj.norms.linf_psi_inv.iter().map(|v| v.powf(q)).collect();
    let y = cumulative(&times, &integrand);
    let last = decade_slope(&times, &y, t_end / 10.0, t_end)?;
    let prev = decade_slope(&times, &y, t_end / 100.0, t_end / 10.0)?;

    let f0 = &traj.snapshots[0];
    let signed: Vec<f64> = f0.grid.nodes().iter().zip(&f0.values).map(|(&x, &v)| v * prof.psi(x)).collect();
    let absolute: Vec<f64> = signed.iter().map(|v| v.abs()).collect();
    let hypothesis_holds = f0.grid.trapezoid(&signed).abs() > 1e-8 * f0.grid.trapezoid(&absolute);

    let verdict = if !(prev > 0.0) {
        GrowthVerdict::Indeterminate
    } else if last > 0.0 && (last / prev - 1.0).abs() <= LOG_SLOPE_STABILITY {
        GrowthVerdict::Logarithmic
    } else if last < 0.5 * prev {
        GrowthVerdict::Sublogarithmic
    } else {
        GrowthVerdict::Indeterminate
    };
    Ok(LogGrowthReport {
        times,
        y,
        fit_slope_vs_logt: last,
        previous_slope: prev,
        hypothesis_holds,
        verdict,
        passes: hypothesis_holds && verdict == GrowthVerdict::Logarithmic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::make_profile;
    use proptest::prelude::*;

    #[test]
    fn plateau_support_and_transition() {
        let r = 10.0;
        let a = eval_test_function(r, 2.0, 0.0, 3.0);
        assert_eq!((a.phi, a.phi_star), (1.0, 0.0));
        let b = eval_test_function(r, 2.0, 0.0, 15.0);
        assert_eq!((b.phi, b.phi_star), (0.0, 0.0));
        let c = eval_test_function(r, 2.0, 0.0, 7.5);
        assert_eq!(c.phi, c.phi_star);
        assert!(c.phi > 0.0 && c.phi < 1.0);
    }

    #[test]
    fn eta_derivatives_match_differences() {
        let h = 1e-6;
        for s in [0.55, 0.6, 0.75, 0.9, 0.97] {
            let (_, d1, d2) = eta(s);
            let fd1 = (eta(s + h).0 - eta(s - h).0) / (2.0 * h);
            let fd2 = (eta(s + h).1 - eta(s - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6, "s = {s}");
            assert!((d2 - fd2).abs() < 1e-5, "s = {s}");
        }
    }

    #[test]
    fn lhs_matches_finite_differences() {
        // L g = -g'' + V g on g = psi Phi, differenced in x and t
        let prof = make_profile(0.7).unwrap();
        let (r, p) = (50.0, 3.0);
        let g = |x: f64, t: f64| prof.psi(x) * eval_test_function(r, p, x, t).phi;
        let h = 1e-3;
        for (x, t) in [(4.0, 10.0), (5.5, 8.0), (2.0, 40.0)] {
            let gt = (g(x, t + h) - g(x, t - h)) / (2.0 * h);
            let gxx = (g(x + h, t) - 2.0 * g(x, t) + g(x - h, t)) / (h * h);
            let lg = -gxx + prof.potential(x) * g(x, t);
            let fd = gt.abs() + lg.abs();
            let exact = bound_lhs(&prof, r, p, x, t);
            assert!((fd - exact).abs() < 1e-4 * exact.max(1e-3), "({x}, {t}): {fd} vs {exact}");
        }
    }

    #[test]
    fn flat_profile_estimate_is_finite() {
        let prof = make_profile(0.0).unwrap();
        let b = verify_testfn_bound(&prof, 100.0, 2.0, &default_samples(100.0, 100)).unwrap();
        assert!(b.c_t_estimate.is_finite() && b.c_t_estimate > 0.0);
        assert_eq!(b.plateau_residual_max, 0.0);
    }

    #[test]
    fn bound_rejects_bad_input() {
        let prof = make_profile(0.3).unwrap();
        assert!(verify_testfn_bound(&prof, 0.5, 2.0, &[(0.0, 0.0)]).is_err());
        assert!(verify_testfn_bound(&prof, 10.0, 2.0, &[]).is_err());
    }

    proptest! {
        #[test]
        fn test_function_ordering(x in -40.0..40.0f64, t in 0.0..200.0f64, r in 1.0..500.0f64, p in 1.1..6.0f64) {
            let v = eval_test_function(r, p, x, t);
            prop_assert!(0.0 <= v.phi_star && v.phi_star <= v.phi && v.phi <= 1.0);
            if v.xi <= 0.5 {
                prop_assert_eq!(v.phi, 1.0);
                prop_assert_eq!(v.phi_star, 0.0);
            }
            if v.xi >= 1.0 {
                prop_assert_eq!(v.phi, 0.0);
            }
        }

        #[test]
        fn plateau_residual_is_exactly_zero(alpha in -0.4..2.0f64, x in -5.0..5.0f64, p in 1.1..5.0f64) {
            let prof = make_profile(alpha).unwrap();
            let r = 100.0;
            let t = (0.5 * r - x * x).max(0.0) * 0.9;
            prop_assert_eq!(bound_lhs(&prof, r, p, x, t), 0.0);
        }
    }
}
