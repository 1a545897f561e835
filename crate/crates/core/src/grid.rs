//! Truncated spatial mesh, sampled fields, weighted norms and the quadratic
//! form of `L = -d^2/dx^2 + V`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::profile::PotentialProfile;

/// Relative boundary magnitude above which a field is treated as truncated.
pub const BOUNDARY_DECAY_TOL: f64 = 1e-12;

/// Uniform symmetric mesh on `[-xmax, xmax]` with an odd node count, so that
/// `x = 0` is the centre node.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    xmax: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(xmax: f64, n: usize) -> Result<Self> {
        if !(xmax > 0.0 && xmax.is_finite()) {
            return invalid(format!("xmax must be positive and finite, got {xmax}"));
        }
        if n < 3 || n.is_multiple_of(2) {
            return invalid(format!("node count must be odd and at least 3, got {n}"));
        }
        let c = (n - 1) / 2;
        let h = xmax / c as f64;
        let nodes = (0..n).map(|i| (i as f64 - c as f64) * h).collect();
        Ok(Self { xmax, n, h, nodes })
    }

    /// Smallest odd-node grid on `[-xmax, xmax]` with spacing at most `h`.
    pub fn with_spacing(xmax: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return invalid("spacing must be positive");
        }
        let half = (xmax / h).ceil() as usize;
        Self::new(xmax, 2 * half.max(1) + 1)
    }

    pub fn xmax(&self) -> f64 {
        self.xmax
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    /// Index of the node at `x = 0`.
    pub fn centre(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Composite trapezoid rule of nodal samples.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let inner: f64 = values[1..self.n - 1].iter().sum();
        self.h * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }
}

/// A time-stamped sample of a function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub values: Vec<f64>,
    pub time: f64,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n() {
            return invalid(format!("field has {} values for a grid of {} nodes", values.len(), grid.n()));
        }
        Ok(Self { grid, values, time })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self { grid, values, time: 0.0 }
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n();
        Self { grid, values: vec![0.0; n], time: 0.0 }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Boundary magnitude relative to the field maximum (0 for a zero field).
    pub fn boundary_ratio(&self) -> f64 {
        let m = self.max_abs();
        if m == 0.0 {
            return 0.0;
        }
        let n = self.values.len();
        self.values[0].abs().max(self.values[n - 1].abs()) / m
    }

    /// `f / psi` at every node.
    pub fn over_psi(&self, prof: &PotentialProfile) -> Vec<f64> {
        self.grid.nodes().iter().zip(&self.values).map(|(&x, &v)| v / prof.psi(x)).collect()
    }

    /// Writes the field as CSV with columns `x,u,u_over_psi`.
    pub fn write_csv<W: std::io::Write>(&self, prof: &PotentialProfile, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            x: f64,
            u: f64,
            u_over_psi: f64,
        }
        let mut w = csv::Writer::from_writer(out);
        for (&x, &u) in self.grid.nodes().iter().zip(&self.values) {
            w.serialize(Row { x, u, u_over_psi: u / prof.psi(x) })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Weighted norms used by the contraction and decay laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    /// `||psi f||_1`
    pub l1_psi: f64,
    /// `||f / psi||_inf`
    pub linf_psi_inv: f64,
    pub linf: f64,
    pub l2: f64,
}

pub fn weighted_norms(f: &Field, prof: &PotentialProfile) -> Norms {
    let grid = &f.grid;
    let mut weighted = Vec::with_capacity(grid.n());
    let mut squares = Vec::with_capacity(grid.n());
    let mut linf_psi_inv: f64 = 0.0;
    let mut linf: f64 = 0.0;
    for (&x, &v) in grid.nodes().iter().zip(&f.values) {
        let psi = prof.psi(x);
        weighted.push(psi * v.abs());
        squares.push(v * v);
        linf_psi_inv = linf_psi_inv.max((v / psi).abs());
        linf = linf.max(v.abs());
    }
    Norms { l1_psi: grid.trapezoid(&weighted), linf_psi_inv, linf, l2: grid.trapezoid(&squares).sqrt() }
}

/// Fourth-order central first derivative; second order next to the ends and
/// one-sided at the ends.
pub fn derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    d[0] = (values[1] - values[0]) / h;
    d[n - 1] = (values[n - 1] - values[n - 2]) / h;
    for i in 1..n - 1 {
        d[i] = if i >= 2 && i + 2 < n {
            (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2]) / (12.0 * h)
        } else {
            (values[i + 1] - values[i - 1]) / (2.0 * h)
        };
    }
    d
}

/// Both discretizations of `<L f, f>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticForms {
    /// `int f'^2 + V f^2`
    pub direct: f64,
    /// `int psi^2 |(f/psi)'|^2`
    pub ground_state: f64,
}

impl QuadraticForms {
    /// Relative disagreement of the two formulations.
    pub fn relative_gap(&self) -> f64 {
        let scale = self.direct.abs().max(self.ground_state.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.direct - self.ground_state).abs() / scale
        }
    }
}

fn check_boundary_decay(f: &Field) -> Result<()> {
    let r = f.boundary_ratio();
    if r > BOUNDARY_DECAY_TOL {
        return Err(Error::DomainTruncation(format!(
            "field does not decay at the domain edge (|f(edge)|/max|f| = {r:e})"
        )));
    }
    Ok(())
}

pub fn quadratic_forms(f: &Field, prof: &PotentialProfile) -> Result<QuadraticForms> {
    check_boundary_decay(f)?;
    let grid = &f.grid;
    let h = grid.h();
    let df = derivative(&f.values, h);
    let direct_integrand: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&f.values)
        .zip(&df)
        .map(|((&x, &v), &d)| d * d + prof.potential(x) * v * v)
        .collect();
    let star = f.over_psi(prof);
    let dstar = derivative(&star, h);
    let gs_integrand: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(&dstar)
        .map(|(&x, &d)| {
            let psi = prof.psi(x);
            psi * psi * d * d
        })
        .collect();
    Ok(QuadraticForms { direct: grid.trapezoid(&direct_integrand), ground_state: grid.trapezoid(&gs_integrand) })
}

/// `||L^(1/2) f||_2^2`, evaluated in the ground-state representation so the
/// result is nonnegative by construction.
pub fn quadratic_form(f: &Field, prof: &PotentialProfile) -> Result<f64> {
    Ok(quadratic_forms(f, prof)?.ground_state)
}
