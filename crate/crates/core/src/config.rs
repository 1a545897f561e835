use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::Grid;

/// When trajectories record snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// `t_k = t0 * ratio^k` up to the horizon, plus the horizon itself.
    Geometric { t0: f64, ratio: f64 },
    /// Explicit positive times; those beyond the horizon are dropped.
    Explicit(Vec<f64>),
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule::Geometric { t0: 0.01, ratio: 1.2 }
    }
}

impl Schedule {
    /// Strictly increasing snapshot times in `(0, t_end]`, always ending at `t_end`.
    pub fn times(&self, t_end: f64) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = match self {
            Schedule::Geometric { t0, ratio } => {
                if !(*t0 > 0.0 && *ratio > 1.0) {
                    return invalid("geometric schedule needs t0 > 0 and ratio > 1");
                }
                let mut v = Vec::new();
                let mut k = 0;
                loop {
                    let t = t0 * ratio.powi(k);
                    if t >= t_end * (1.0 - 1e-12) {
                        break;
                    }
                    v.push(t);
                    k += 1;
                }
                v
            }
            Schedule::Explicit(ts) => {
                let mut v: Vec<f64> = ts.iter().copied().filter(|&t| t > 0.0 && t < t_end).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
        };
        out.push(t_end);
        Ok(out)
    }
}

/// Discretization, time-stepping, blow-up and classification parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Node count (odd).
    pub n: usize,
    /// Domain half-width; `None` picks `max(200, 20 sqrt(t_end))`.
    pub xmax: Option<f64>,
    pub t_end: f64,
    pub dt_init: f64,
    pub dt_min: f64,
    /// Max-norm level declared as blow-up.
    pub blowup_threshold: f64,
    /// Step-doubling relative error target.
    pub rel_tol: f64,
    /// Cap `dt <= dt_cap_factor * ||u||_inf^(1 - p)`.
    pub dt_cap_factor: f64,
    /// Disables adaptivity (nonlinear runs) or overrides the linear step.
    pub fixed_dt: Option<f64>,
    pub snapshots: Schedule,
    /// Classification window is `[window_fraction * t_end, t_end]`.
    pub window_fraction: f64,
    /// Fitted max-norm slope below which a run counts as decaying.
    pub decay_slope_threshold: f64,
    /// Boundary leak tolerance relative to the max norm.
    pub leak_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 4001,
            xmax: None,
            t_end: 1e4,
            dt_init: 1e-3,
            dt_min: 1e-12,
            blowup_threshold: 1e8,
            rel_tol: 1e-5,
            dt_cap_factor: 0.2,
            fixed_dt: None,
            snapshots: Schedule::default(),
            window_fraction: 0.1,
            decay_slope_threshold: -0.05,
            leak_tol: 1e-8,
        }
    }
}

/// Domain half-width rule for a given horizon.
pub fn default_xmax(t_end: f64) -> f64 {
    200f64.max(20.0 * t_end.sqrt())
}

impl SimConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn resolved_xmax(&self) -> f64 {
        self.xmax.unwrap_or_else(|| default_xmax(self.t_end))
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::new(self.resolved_xmax(), self.n)?))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return invalid(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_init) {
            return invalid("need 0 < dt_min < dt_init");
        }
        if !(self.rel_tol > 0.0) || !(self.dt_cap_factor > 0.0) {
            return invalid("rel_tol and dt_cap_factor must be positive");
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0) {
                return invalid("fixed_dt must be positive");
            }
        }
        if !(self.window_fraction > 0.0 && self.window_fraction < 1.0) {
            return invalid("window_fraction must lie in (0, 1)");
        }
        if self.n < 3 || self.n.is_multiple_of(2) {
            return invalid("node count must be odd and at least 3");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_schedule_ends_at_horizon() {
        let t = Schedule::default().times(1.0).unwrap();
        assert_eq!(*t.last().unwrap(), 1.0);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!((t[0] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn explicit_schedule_filters_and_sorts() {
        let t = Schedule::Explicit(vec![5.0, 1.0, 1.0, 20.0, -1.0]).times(10.0).unwrap();
        assert_eq!(t, vec![1.0, 5.0, 10.0]);
    }

    #[test]
    fn default_domain_rule() {
        assert_eq!(default_xmax(1.0), 200.0);
        assert!((default_xmax(1e4) - 2000.0).abs() < 1e-9);
        let cfg = SimConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.grid().unwrap().n(), 4001);
    }

    #[test]
    fn validation_catches_bad_steps() {
        let cfg = SimConfig { dt_min: 1.0, dt_init: 0.1, ..SimConfig::default() };
        assert!(cfg.validate().is_err());
        assert!(SimConfig::default().with_n(10).validate().is_err());
    }
}
