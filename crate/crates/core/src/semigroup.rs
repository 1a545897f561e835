//! The weighted heat semigroup `e^{-tL}`: evolution in the harmonic variable,
//! contraction/positivity checks, decay-rate fits and the polynomial upper
//! bound for `e^{-tL} <x>^{-1-alpha}`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{Schedule, SimConfig};
use crate::error::{invalid, Error, Result};
use crate::fit::loglog_slope;
use crate::flux::FluxOperator;
use crate::grid::{weighted_norms, Field, Norms};
use crate::profile::{bracket, PotentialProfile};

/// Per-snapshot weighted norms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub times: Vec<f64>,
    pub l1_psi: Vec<f64>,
    pub linf_psi_inv: Vec<f64>,
    pub linf: Vec<f64>,
    pub l2: Vec<f64>,
}

impl NormSeries {
    pub fn push(&mut self, t: f64, n: Norms) {
        self.times.push(t);
        self.l1_psi.push(n.l1_psi);
        self.linf_psi_inv.push(n.linf_psi_inv);
        self.linf.push(n.linf);
        self.l2.push(n.l2);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn get(&self, kind: NormKind) -> &[f64] {
        match kind {
            NormKind::L1Psi => &self.l1_psi,
            NormKind::LinfPsiInv => &self.linf_psi_inv,
            NormKind::Linf => &self.linf,
            NormKind::L2 => &self.l2,
        }
    }
}

/// Snapshots of a solution together with their norms.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// First entry is the initial datum at `t = 0`.
    pub snapshots: Vec<Field>,
    pub norms: NormSeries,
    /// First snapshot time at which the boundary leak monitor fired.
    pub boundary_leak: Option<f64>,
}

impl Trajectory {
    pub(crate) fn new() -> Self {
        Self { snapshots: Vec::new(), norms: NormSeries::default(), boundary_leak: None }
    }

    pub(crate) fn record(&mut self, field: Field, prof: &PotentialProfile, leak_tol: f64) {
        let norms = weighted_norms(&field, prof);
        let n = field.values.len();
        let edge = field.values[1].abs().max(field.values[n - 2].abs());
        if self.boundary_leak.is_none() && norms.linf > 0.0 && edge > leak_tol * norms.linf {
            self.boundary_leak = Some(field.time);
        }
        self.norms.push(field.time, norms);
        self.snapshots.push(field);
    }

    pub fn times(&self) -> &[f64] {
        &self.norms.times
    }

    pub fn final_time(&self) -> f64 {
        self.norms.times.last().copied().unwrap_or(0.0)
    }
}

/// Default Crank-Nicolson step `min(h^2/2, 0.01)`.
pub fn default_linear_dt(h: f64) -> f64 {
    (0.5 * h * h).min(0.01)
}

/// Evolves `v(t) = e^{-tL} f0` through the flux form in `v_* = v / psi`.
///
/// The grid is taken from `f0`; `cfg` supplies the step (`fixed_dt` or the
/// default), snapshot schedule and leak tolerance.
pub fn evolve_linear(f0: &Field, t_end: f64, prof: &PotentialProfile, cfg: &SimConfig) -> Result<Trajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return invalid(format!("t_end must be positive, got {t_end}"));
    }
    if !f0.is_finite() {
        return invalid("initial field must be finite");
    }
    let grid = f0.grid.clone();
    let dt = cfg.fixed_dt.unwrap_or_else(|| default_linear_dt(grid.h()));
    let mut op = FluxOperator::new(&grid, prof);
    let mut star = f0.over_psi(prof);
    let n = star.len();
    star[0] = 0.0;
    star[n - 1] = 0.0;
    let psi: Vec<f64> = grid.nodes().iter().map(|&x| prof.psi(x)).collect();
    let to_field = |star: &[f64], t: f64| Field {
        grid: grid.clone(),
        values: star.iter().zip(&psi).map(|(s, p)| s * p).collect(),
        time: t,
    };

    let mut traj = Trajectory::new();
    traj.record(to_field(&star, 0.0), prof, cfg.leak_tol);
    let mut t = 0.0;
    for target in cfg.snapshots.times(t_end)? {
        let span = target - t;
        let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
        let sub = span / steps as f64;
        for _ in 0..steps {
            op.crank_nicolson_step(&mut star, sub)?;
        }
        t = target;
        traj.record(to_field(&star, t), prof, cfg.leak_tol);
    }
    Ok(traj)
}

/// Relative per-interval slack allowed by [`check_contraction`].
pub const CONTRACTION_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// Largest relative increase of `||psi v||_1` between snapshots.
    pub worst_l1_increase: f64,
    /// Largest relative increase of `||v/psi||_inf` between snapshots.
    pub worst_linf_increase: f64,
    pub worst_time: Option<f64>,
}

/// Checks that `||psi v(t)||_1` and `||v(t)/psi||_inf` never increase.
pub fn check_contraction(traj: &Trajectory, _prof: &PotentialProfile) -> Result<ContractionReport> {
    let s = &traj.norms;
    let mut report = ContractionReport { worst_l1_increase: 0.0, worst_linf_increase: 0.0, worst_time: None };
    let mut worst = 0.0;
    for k in 1..s.len() {
        let rel = |prev: f64, cur: f64| if prev > 0.0 { (cur - prev) / prev } else if cur > 0.0 { f64::INFINITY } else { 0.0 };
        let a = rel(s.l1_psi[k - 1], s.l1_psi[k]);
        let b = rel(s.linf_psi_inv[k - 1], s.linf_psi_inv[k]);
        report.worst_l1_increase = report.worst_l1_increase.max(a);
        report.worst_linf_increase = report.worst_linf_increase.max(b);
        if a.max(b) > worst {
            worst = a.max(b);
            report.worst_time = Some(s.times[k]);
        }
    }
    if worst > CONTRACTION_SLACK {
        return Err(Error::InvariantViolation(format!(
            "weighted norm increased by {worst:e} (relative) at t = {}",
            report.worst_time.unwrap_or(f64::NAN)
        )));
    }
    Ok(report)
}

/// Lebesgue index `q` in the weighted norm `||psi^(2/q - 1) v||_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LebesgueIndex {
    One,
    Two,
    Infinity,
}

impl LebesgueIndex {
    pub fn reciprocal(self) -> f64 {
        match self {
            LebesgueIndex::One => 1.0,
            LebesgueIndex::Two => 0.5,
            LebesgueIndex::Infinity => 0.0,
        }
    }

    pub fn norm_kind(self) -> NormKind {
        match self {
            LebesgueIndex::One => NormKind::L1Psi,
            LebesgueIndex::Two => NormKind::L2,
            LebesgueIndex::Infinity => NormKind::LinfPsiInv,
        }
    }
}

impl FromStr for LebesgueIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(LebesgueIndex::One),
            "2" => Ok(LebesgueIndex::Two),
            "inf" | "infinity" | "∞" => Ok(LebesgueIndex::Infinity),
            other => invalid(format!("supported indices are 1, 2, inf; got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    L1Psi,
    LinfPsiInv,
    Linf,
    L2,
}

/// Quantity whose log-log slope is fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecayMeasure {
    Norm(NormKind),
    /// `N_{q2}(v(t)) / N_{q1}(v(t))`, whose slope for localized data is the
    /// `q1 -> q2` smoothing rate.
    Pair { q1: LebesgueIndex, q2: LebesgueIndex },
}

/// Predicted slope `-(1 + 2 alpha)/2 (1/q1 - 1/q2)`; `None` for `alpha < 0`,
/// where no decay law is available and fits are extrapolation.
pub fn predicted_decay_slope(alpha: f64, q1: LebesgueIndex, q2: LebesgueIndex) -> Option<f64> {
    (alpha >= 0.0).then(|| -(1.0 + 2.0 * alpha) / 2.0 * (q1.reciprocal() - q2.reciprocal()))
}

/// Least-squares slope of `log(measure)` against `log(t)` over `window`.
pub fn fit_decay_exponent(traj: &Trajectory, measure: DecayMeasure, window: (f64, f64)) -> Result<f64> {
    let s = &traj.norms;
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return invalid(format!("window must satisfy 0 < lo < hi, got [{lo}, {hi}]"));
    }
    if hi > traj.final_time() * (1.0 + 1e-12) {
        return invalid(format!("window end {hi} exceeds trajectory end {}", traj.final_time()));
    }
    match measure {
        DecayMeasure::Norm(kind) => loglog_slope(&s.times, s.get(kind), lo, hi),
        DecayMeasure::Pair { q1, q2 } => {
            if q1 > q2 {
                return invalid("need q1 <= q2");
            }
            let num = s.get(q2.norm_kind());
            let den = s.get(q1.norm_kind());
            let ratio: Vec<f64> = num.iter().zip(den).map(|(a, b)| a / b).collect();
            loglog_slope(&s.times, &ratio, lo, hi)
        }
    }
}

/// Relative growth of the bound constant tolerated by the stability verdict.
pub const KERNEL_STABILITY_TOL: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub alpha: f64,
    pub delta: f64,
    pub times: Vec<f64>,
    /// `sup_x v(x,t) / profile(x,t)` at each snapshot.
    pub c_instant: Vec<f64>,
    /// Running maximum of `c_instant`: the minimal constant valid up to `t`.
    pub c_running: Vec<f64>,
    /// Closed form `2^((1+2 alpha)/2 - delta)` of the constant at `t = 0`.
    pub c_initial_exact: f64,
    /// `c_running(t_end) / c_running(first t >= 1)`.
    pub growth_ratio: f64,
    pub stable: bool,
}

/// `<x>^alpha (1 + <x>^2 + t)^(-(1 + 2 alpha)/2 + delta)`.
pub fn kernel_profile(alpha: f64, delta: f64, x: f64, t: f64) -> f64 {
    let b = bracket(x);
    b.powf(alpha) * (1.0 + b * b + t).powf(-(1.0 + 2.0 * alpha) / 2.0 + delta)
}

/// Checks `e^{-tL} <x>^{-1-alpha} <= C <x>^alpha (1 + <x>^2 + t)^(-(1+2alpha)/2 + delta)`
/// with a time-uniform `C`, for `-1/2 < alpha < 1/2` and
/// `0 < delta < (1 + 2 alpha)/2`.
pub fn kernel_upper_bound_check(
    prof: &PotentialProfile,
    delta: f64,
    t_list: &[f64],
    cfg: &SimConfig,
) -> Result<KernelBoundReport> {
    let alpha = prof.alpha();
    if !(alpha > -0.5 && alpha < 0.5) {
        return invalid(format!("kernel bound needs -1/2 < alpha < 1/2, got {alpha}"));
    }
    if !(delta > 0.0 && delta < (1.0 + 2.0 * alpha) / 2.0) {
        return invalid(format!("delta must lie in (0, {}), got {delta}", (1.0 + 2.0 * alpha) / 2.0));
    }
    kernel_bound_scan(prof, delta, t_list, cfg)
}

/// Same as [`kernel_upper_bound_check`] without range validation of `delta`;
/// used to show that exponents outside the admissible range lose the bound.
pub fn kernel_bound_scan(
    prof: &PotentialProfile,
    delta: f64,
    t_list: &[f64],
    cfg: &SimConfig,
) -> Result<KernelBoundReport> {
    let alpha = prof.alpha();
    let t_end = t_list.iter().copied().fold(0.0, f64::max);
    if !(t_end > 0.0) {
        return invalid("t_list needs a positive time");
    }
    let cfg = SimConfig {
        snapshots: Schedule::Explicit(t_list.to_vec()),
        t_end,
        ..cfg.clone()
    };
    let grid = cfg.grid()?;
    let f0 = Field::from_fn(grid.clone(), |x| bracket(x).powf(-1.0 - alpha));
    let traj = evolve_linear(&f0, t_end, prof, &cfg)?;
    let mut times = Vec::new();
    let mut c_instant = Vec::new();
    let mut c_running = Vec::new();
    let mut running: f64 = 0.0;
    for snap in &traj.snapshots {
        let t = snap.time;
        let n = snap.values.len();
        let c = grid.nodes()[1..n - 1]
            .iter()
            .zip(&snap.values[1..n - 1])
            .map(|(&x, &v)| v / kernel_profile(alpha, delta, x, t))
            .fold(0.0, f64::max);
        running = running.max(c);
        times.push(t);
        c_instant.push(c);
        c_running.push(running);
    }
    let base = times
        .iter()
        .position(|&t| t >= 1.0)
        .map(|k| c_running[k])
        .unwrap_or(c_running[0]);
    let growth_ratio = running / base;
    Ok(KernelBoundReport {
        alpha,
        delta,
        times,
        c_instant,
        c_running,
        c_initial_exact: 2f64.powf((1.0 + 2.0 * alpha) / 2.0 - delta),
        growth_ratio,
        stable: growth_ratio <= 1.0 + KERNEL_STABILITY_TOL,
    })
}
