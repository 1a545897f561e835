//! Finite-volume discretization of `psi^-2 (psi^2 u')'` on a [`Grid`] with
//! homogeneous Dirichlet ends.
//!
//! Unknowns are nodal values of `u_* = u / psi`. Cell `i` carries mass weight
//! `w_i = psi(x_i)^2` and face `i + 1/2` carries conductance
//! `k_i = psi(x_{i+1/2})^2`, so the semi-discrete system is
//! `w_i u_i' = (k_i (u_{i+1} - u_i) - k_{i-1} (u_i - u_{i-1})) / h^2` and the
//! discrete weighted mass `sum_i w_i u_i h` changes only through the two
//! boundary faces.

use crate::error::Result;
use crate::grid::Grid;
use crate::profile::PotentialProfile;
use crate::tridiag;

#[derive(Debug, Clone)]
pub struct FluxOperator {
    h: f64,
    weights: Vec<f64>,
    faces: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    scratch: Vec<f64>,
}

impl FluxOperator {
    pub fn new(grid: &Grid, prof: &PotentialProfile) -> Self {
        let h = grid.h();
        let weights: Vec<f64> = grid.nodes().iter().map(|&x| prof.psi(x).powi(2)).collect();
        let faces: Vec<f64> =
            grid.nodes().windows(2).map(|w| prof.psi(0.5 * (w[0] + w[1])).powi(2)).collect();
        let m = grid.n() - 2;
        Self {
            h,
            weights,
            faces,
            lower: vec![0.0; m],
            diag: vec![0.0; m],
            upper: vec![0.0; m],
            scratch: vec![0.0; m],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `sum_i w_i u_i h`.
    pub fn weighted_mass(&self, u: &[f64]) -> f64 {
        self.h * self.weights.iter().zip(u).map(|(w, v)| w * v).sum::<f64>()
    }

    /// `(K u)_i` for interior `i`, where `K` is the stiffness part.
    fn apply_stiffness(&self, u: &[f64], i: usize) -> f64 {
        let (kl, kr) = (self.faces[i - 1], self.faces[i]);
        (kl * (u[i] - u[i - 1]) + kr * (u[i] - u[i + 1])) / (self.h * self.h)
    }

    /// Factors `W + theta dt K` into the band buffers.
    fn assemble(&mut self, theta_dt: f64) {
        let inv_h2 = 1.0 / (self.h * self.h);
        let m = self.diag.len();
        for j in 0..m {
            let i = j + 1;
            let (kl, kr) = (self.faces[i - 1], self.faces[i]);
            self.diag[j] = self.weights[i] + theta_dt * (kl + kr) * inv_h2;
            self.lower[j] = if j > 0 { -theta_dt * kl * inv_h2 } else { 0.0 };
            self.upper[j] = if j + 1 < m { -theta_dt * kr * inv_h2 } else { 0.0 };
        }
    }

    /// One Crank-Nicolson step of the source-free flow, in place.
    pub fn crank_nicolson_step(&mut self, u: &mut [f64], dt: f64) -> Result<()> {
        let n = u.len();
        let mut rhs: Vec<f64> =
            (1..n - 1).map(|i| self.weights[i] * u[i] - 0.5 * dt * self.apply_stiffness(u, i)).collect();
        self.assemble(0.5 * dt);
        tridiag::solve_in_place(&self.lower, &self.diag, &self.upper, &mut rhs, &mut self.scratch)?;
        u[0] = 0.0;
        u[n - 1] = 0.0;
        u[1..n - 1].copy_from_slice(&rhs);
        Ok(())
    }

    /// Backward-Euler step `(W + dt K) u_new = W g`, written into `out`.
    pub fn backward_euler(&mut self, g: &[f64], dt: f64, out: &mut [f64]) -> Result<()> {
        let n = g.len();
        let mut rhs: Vec<f64> = (1..n - 1).map(|i| self.weights[i] * g[i]).collect();
        self.assemble(dt);
        tridiag::solve_in_place(&self.lower, &self.diag, &self.upper, &mut rhs, &mut self.scratch)?;
        out[0] = 0.0;
        out[n - 1] = 0.0;
        out[1..n - 1].copy_from_slice(&rhs);
        Ok(())
    }
}
