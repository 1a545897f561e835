//! Nonlinear flow `u_t + L u = a u^p`, integrated in `u_* = u / psi` with an
//! IMEX scheme: backward-Euler diffusion, explicit source, step doubling.

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::error::{invalid, Error, Result};
use crate::fit::{linear_fit, loglog_slope};
use crate::flux::FluxOperator;
use crate::grid::{Field, Grid};
use crate::profile::{bracket, PotentialProfile};
use crate::semigroup::{kernel_profile, NormSeries, Trajectory};

/// Weight `a(x)` in front of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSpec {
    /// `a = <x>^-m`.
    FullWeight,
    /// Even smooth bump `c exp(1 - 1/(1 - (x/width)^2))` on `|x| < width`
    /// with `c = <width>^-m`; the width shrinks until `a psi^(p-1)` is
    /// nonincreasing on the grid for `x >= 0`.
    Localized { width: f64 },
    /// Linear flow.
    Off,
}

/// Largest number of 0.8 shrink steps tried for a localized source.
const MAX_SHRINKS: usize = 80;

/// `a(x) psi(x)^(p-1)` at every node plus the width actually used.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSource {
    pub coefficient: Vec<f64>,
    pub width: Option<f64>,
}

fn bump(x: f64, width: f64) -> f64 {
    let s = x / width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

impl SourceSpec {
    pub fn resolve(&self, grid: &Grid, prof: &PotentialProfile, p: f64, m: f64) -> Result<ResolvedSource> {
        let nodes = grid.nodes();
        let psi_pow = |x: f64| prof.psi(x).powf(p - 1.0);
        match *self {
            SourceSpec::Off => Ok(ResolvedSource { coefficient: vec![0.0; nodes.len()], width: None }),
            SourceSpec::FullWeight => Ok(ResolvedSource {
                coefficient: nodes.iter().map(|&x| bracket(x).powf(-m) * psi_pow(x)).collect(),
                width: None,
            }),
            SourceSpec::Localized { width } => {
                if !(width > 0.0 && width.is_finite()) {
                    return invalid(format!("source width must be positive, got {width}"));
                }
                let c = centre_index(grid);
                let mut l = width;
                for _ in 0..MAX_SHRINKS {
                    let height = bracket(l).powf(-m);
                    let coef: Vec<f64> = nodes.iter().map(|&x| height * bump(x, l) * psi_pow(x)).collect();
                    let monotone = coef[c..].windows(2).all(|w| w[1] <= w[0]);
                    if monotone && coef[c] > 0.0 {
                        return Ok(ResolvedSource { coefficient: coef, width: Some(l) });
                    }
                    l *= 0.8;
                }
                Err(Error::InvalidInput(format!(
                    "no admissible localized source width below {width} on this grid"
                )))
            }
        }
    }
}

fn centre_index(grid: &Grid) -> usize {
    grid.centre()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InconclusiveReason {
    Stiffness,
    Domain,
    SlowDecay,
    /// The run failed before it could be classified.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeKind {
    Blowup {
        t_est: f64,
    },
    /// `linf_slope` is `None` for the identically zero solution.
    GlobalDecay {
        linf_slope: Option<f64>,
    },
    Inconclusive {
        reason: InconclusiveReason,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
}

impl OutcomeKind {
    pub fn label(&self) -> &'static str {
        match self {
            OutcomeKind::Blowup { .. } => "blowup",
            OutcomeKind::GlobalDecay { .. } => "global_decay",
            OutcomeKind::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Max norms after every accepted step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepHistory {
    pub times: Vec<f64>,
    /// `||u||_inf`
    pub linf: Vec<f64>,
    /// `||u / psi||_inf`
    pub linf_star: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub kind: OutcomeKind,
    /// Norms at the snapshot times.
    pub series: NormSeries,
    pub history: StepHistory,
    pub boundary_leak: bool,
    pub t_final: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl RunOutcome {
    /// Log-log slope of `||u/psi||_inf` over `[lo, hi]` from the step history.
    pub fn star_slope(&self, lo: f64, hi: f64) -> Result<f64> {
        loglog_slope(&self.history.times, &self.history.linf_star, lo, hi)
    }

    pub fn linf_slope(&self, lo: f64, hi: f64) -> Result<f64> {
        loglog_slope(&self.history.times, &self.history.linf, lo, hi)
    }
}

struct Stepper {
    op: FluxOperator,
    coef: Vec<f64>,
    p: f64,
    work: Vec<f64>,
    half: Vec<f64>,
}

impl Stepper {
    /// One IMEX step: `(W + dt K) out = W (u + dt a psi^(p-1) u_+^p)`.
    fn step(&mut self, u: &[f64], dt: f64, out: &mut [f64]) -> Result<()> {
        for ((w, &v), &c) in self.work.iter_mut().zip(u).zip(&self.coef) {
            *w = if c > 0.0 && v > 0.0 { v + dt * c * v.powf(self.p) } else { v };
        }
        let g = std::mem::take(&mut self.work);
        let r = self.op.backward_euler(&g, dt, out);
        self.work = g;
        r
    }

    /// Returns the two-half-step solution in `fine` and the relative
    /// difference to the single full step.
    fn doubled(&mut self, u: &[f64], dt: f64, coarse: &mut [f64], fine: &mut [f64]) -> Result<f64> {
        self.step(u, dt, coarse)?;
        let mut half = std::mem::take(&mut self.half);
        self.step(u, 0.5 * dt, &mut half)?;
        self.step(&half, 0.5 * dt, fine)?;
        self.half = half;
        let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diff = coarse.iter().zip(fine.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        Ok(if scale > 0.0 { diff / scale } else { 0.0 })
    }
}

fn max_norms(star: &[f64], psi: &[f64]) -> (f64, f64) {
    star.iter().zip(psi).fold((0.0f64, 0.0f64), |(a, b), (&s, &q)| (a.max((s * q).abs()), b.max(s.abs())))
}

/// Integrates the nonlinear problem from `u0 >= 0` up to `cfg.t_end` or
/// blow-up and classifies the run.
pub fn evolve_nonlinear(
    u0: &Field,
    p: f64,
    m: f64,
    src: &SourceSpec,
    prof: &PotentialProfile,
    cfg: &SimConfig,
) -> Result<(RunOutcome, Trajectory)> {
    cfg.validate()?;
    if !(p > 1.0 && p.is_finite()) {
        return invalid(format!("p must exceed 1, got {p}"));
    }
    if !(m >= 0.0 && m.is_finite()) {
        return invalid(format!("m must be nonnegative, got {m}"));
    }
    if !u0.is_finite() || u0.values.iter().any(|&v| v < 0.0) {
        return invalid("initial data must be finite and nonnegative");
    }
    let u0_max = u0.max_abs();
    if !(cfg.blowup_threshold > 1e3 * u0_max) {
        return invalid(format!(
            "blow-up threshold {} must exceed 1e3 times the initial maximum {u0_max}",
            cfg.blowup_threshold
        ));
    }

    let grid = u0.grid.clone();
    let n = grid.n();
    let psi: Vec<f64> = grid.nodes().iter().map(|&x| prof.psi(x)).collect();
    let source = src.resolve(&grid, prof, p, m)?;
    let mut stepper = Stepper {
        op: FluxOperator::new(&grid, prof),
        coef: source.coefficient,
        p,
        work: vec![0.0; n],
        half: vec![0.0; n],
    };
    let mut star = u0.over_psi(prof);
    star[0] = 0.0;
    star[n - 1] = 0.0;
    let to_field = |star: &[f64], t: f64| Field {
        grid: grid.clone(),
        values: star.iter().zip(&psi).map(|(s, q)| s * q).collect(),
        time: t,
    };

    let mut traj = Trajectory::new();
    traj.record(to_field(&star, 0.0), prof, cfg.leak_tol);
    let mut history = StepHistory::default();
    let (l0, s0) = max_norms(&star, &psi);
    history.times.push(0.0);
    history.linf.push(l0);
    history.linf_star.push(s0);

    let targets = cfg.snapshots.times(cfg.t_end)?;
    let mut next = 0;
    let mut t = 0.0;
    let mut dt_next = cfg.fixed_dt.unwrap_or(cfg.dt_init);
    let mut coarse = vec![0.0; n];
    let mut fine = vec![0.0; n];
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut kind: Option<OutcomeKind> = None;

    while next < targets.len() {
        let target = targets[next];
        let linf = *history.linf.last().unwrap();
        let mut dt = dt_next.min(target - t);
        if cfg.fixed_dt.is_none() && linf > 0.0 {
            dt = dt.min(cfg.dt_cap_factor * linf.powf(1.0 - p));
        }
        let err = if cfg.fixed_dt.is_some() {
            stepper.step(&star, dt, &mut fine)?;
            0.0
        } else {
            stepper.doubled(&star, dt, &mut coarse, &mut fine)?
        };
        if !err.is_finite() || !fine.iter().all(|v| v.is_finite()) {
            return Err(Error::NumericalFailure(format!("non-finite state at t = {t}")));
        }
        let underflow = dt < cfg.dt_min;
        if err > cfg.rel_tol && !underflow {
            rejected += 1;
            dt_next = dt * (0.9 * (cfg.rel_tol / err).sqrt()).max(0.2);
            continue;
        }

        accepted += 1;
        let landed = target - (t + dt) <= 1e-12 * target.max(1.0);
        t = if landed { target } else { t + dt };
        std::mem::swap(&mut star, &mut fine);
        let (l, s) = max_norms(&star, &psi);
        history.times.push(t);
        history.linf.push(l);
        history.linf_star.push(s);
        if landed {
            traj.record(to_field(&star, t), prof, cfg.leak_tol);
            next += 1;
        }
        if l > cfg.blowup_threshold {
            let t_est = estimate_blowup_time(&history.times, &history.linf, p).unwrap_or(t);
            kind = Some(OutcomeKind::Blowup { t_est });
            break;
        }
        if underflow {
            let k = history.linf.len();
            kind = Some(if k >= 2 && history.linf[k - 1] > history.linf[k - 2] {
                let t_est = estimate_blowup_time(&history.times, &history.linf, p).unwrap_or(t);
                OutcomeKind::Blowup { t_est }
            } else {
                OutcomeKind::Inconclusive { reason: InconclusiveReason::Stiffness, detail: None }
            });
            break;
        }
        if cfg.fixed_dt.is_none() && !landed {
            let grow = if err > 0.0 { 0.9 * (cfg.rel_tol / err).sqrt() } else { 2.0 };
            dt_next = dt * grow.min(2.0);
        } else if cfg.fixed_dt.is_none() {
            let grow = if err > 0.0 { 0.9 * (cfg.rel_tol / err).sqrt() } else { 2.0 };
            dt_next = dt_next.max(dt * grow.min(2.0));
        }
    }
    if kind.is_none() && *traj.snapshots.last().map(|f| &f.time).unwrap_or(&0.0) < t {
        traj.record(to_field(&star, t), prof, cfg.leak_tol);
    }

    let boundary_leak = traj.boundary_leak.is_some();
    let kind = match kind {
        Some(k) => k,
        None => classify_decay(&history, cfg, boundary_leak),
    };
    let outcome = RunOutcome {
        kind,
        series: traj.norms.clone(),
        history,
        boundary_leak,
        t_final: t,
        accepted_steps: accepted,
        rejected_steps: rejected,
    };
    Ok((outcome, traj))
}

fn classify_decay(history: &StepHistory, cfg: &SimConfig, boundary_leak: bool) -> OutcomeKind {
    if history.linf.iter().all(|&v| v == 0.0) {
        return OutcomeKind::GlobalDecay { linf_slope: None };
    }
    if boundary_leak {
        return OutcomeKind::Inconclusive { reason: InconclusiveReason::Domain, detail: None };
    }
    let hi = *history.times.last().unwrap();
    match loglog_slope(&history.times, &history.linf, cfg.window_fraction * hi, hi) {
        Ok(s) if s < cfg.decay_slope_threshold => OutcomeKind::GlobalDecay { linf_slope: Some(s) },
        Ok(s) => OutcomeKind::Inconclusive {
            reason: InconclusiveReason::SlowDecay,
            detail: Some(format!("final-decade slope {s:.4}")),
        },
        Err(e) => OutcomeKind::Inconclusive { reason: InconclusiveReason::SlowDecay, detail: Some(e.to_string()) },
    }
}

/// Minimum number of samples in the fitted tail.
const MIN_TAIL: usize = 3;

/// Extrapolates the blow-up time from a max-norm history assuming
/// `||u||_inf ~ C (T - t)^(-1/(p-1))` on the last growth decade.
pub fn estimate_blowup_time(times: &[f64], maxnorm: &[f64], p: f64) -> Result<f64> {
    if times.len() != maxnorm.len() || times.is_empty() {
        return invalid("times and max norms must be nonempty and paired");
    }
    if !(p > 1.0) {
        return invalid("p must exceed 1");
    }
    let last = *maxnorm.last().unwrap();
    if !(last > 0.0 && last.is_finite()) {
        return Err(Error::NoEstimate("final max norm is not positive".into()));
    }
    let start = maxnorm.iter().rposition(|&y| y < last / 10.0).map_or(0, |k| k + 1);
    let (ts, ys) = (&times[start..], &maxnorm[start..]);
    if ts.len() < MIN_TAIL {
        return Err(Error::NoEstimate(format!("only {} samples in the final growth decade", ts.len())));
    }
    if ys.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NoEstimate("max norm is not increasing on the final decade".into()));
    }
    // y^(1-p) = C^(1-p) (T - t) is affine in t
    let zs: Vec<f64> = ys.iter().map(|&y| y.powf(1.0 - p)).collect();
    let (a, b) = linear_fit(ts, &zs)?;
    if !(a < 0.0) {
        return Err(Error::NoEstimate("fitted tail does not approach a singularity".into()));
    }
    Ok(-b / a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckMode {
    /// Reject data violating the hypotheses.
    Strict,
    /// Run the detector regardless.
    ReportOnly,
}

/// Relative tolerance for the evenness and monotonicity preconditions.
const SHAPE_TOL: f64 = 1e-12;

/// Largest positive forward difference of `u_*` on `x >= 0` over all
/// snapshots, normalized by `||u_*||_inf` at that snapshot.
pub fn check_star_monotonicity(traj: &Trajectory, prof: &PotentialProfile, mode: CheckMode) -> Result<f64> {
    let first = traj.snapshots.first().ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
    if mode == CheckMode::Strict {
        let star = first.over_psi(prof);
        let scale = star.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let n = star.len();
        if (0..n).any(|i| (star[i] - star[n - 1 - i]).abs() > SHAPE_TOL * scale) {
            return invalid("initial data is not even");
        }
        if positive_slope(&star, first.grid.centre()) > SHAPE_TOL {
            return invalid("initial u/psi is not nonincreasing on x >= 0");
        }
    }
    Ok(traj
        .snapshots
        .iter()
        .map(|f| positive_slope(&f.over_psi(prof), f.grid.centre()))
        .fold(0.0, f64::max))
}

fn positive_slope(star: &[f64], centre: usize) -> f64 {
    let scale = star.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    star[centre..].windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max) / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub holds: bool,
    /// Constant fitted at `t = 0` and held fixed.
    pub c_s2: f64,
    /// Largest `u / (eps C P)` seen over all snapshots.
    pub worst_ratio: f64,
    pub worst_time: f64,
}

/// Checks `u <= eps C <x>^alpha (1 + <x>^2 + t)^(-(1+2 alpha)/2 + delta)` at
/// every snapshot, with `C` fitted to `<x>^(-1-alpha)` at `t = 0`.
pub fn check_supersolution_domination(
    traj: &Trajectory,
    prof: &PotentialProfile,
    delta: f64,
    eps: f64,
) -> Result<DominationReport> {
    let alpha = prof.alpha();
    if !(alpha > -0.5 && alpha < 0.0) {
        return invalid(format!("domination check needs -1/2 < alpha < 0, got {alpha}"));
    }
    if !(delta > 0.0 && delta < (1.0 + 2.0 * alpha) / 2.0) || !(eps > 0.0) {
        return invalid("need 0 < delta < (1 + 2 alpha)/2 and eps > 0");
    }
    let first = traj.snapshots.first().ok_or_else(|| Error::InvalidInput("empty trajectory".into()))?;
    let nodes = first.grid.nodes();
    if nodes.iter().zip(&first.values).any(|(&x, &u)| u > 0.5 * eps * bracket(x).powf(-1.0 - alpha)) {
        return invalid("initial data exceeds (eps/2) <x>^(-1-alpha)");
    }
    let c_s2 = nodes
        .iter()
        .map(|&x| bracket(x).powf(-1.0 - alpha) / kernel_profile(alpha, delta, x, 0.0))
        .fold(0.0, f64::max);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_time = 0.0;
    for snap in &traj.snapshots {
        for (&x, &u) in snap.grid.nodes().iter().zip(&snap.values) {
            let r = u / (eps * c_s2 * kernel_profile(alpha, delta, x, snap.time));
            if r > worst_ratio {
                worst_ratio = r;
                worst_time = snap.time;
            }
        }
    }
    Ok(DominationReport { holds: worst_ratio <= 1.0, c_s2, worst_ratio, worst_time })
}
