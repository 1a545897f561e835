//! The canonical ground-state family `psi(x) = <x>^alpha` and its potential.
//!
//! With `psi = (1 + x^2)^(alpha/2)` the potential `V = psi''/psi` has the closed
//! form `V(x) = alpha (1 + (alpha - 1) x^2) / (1 + x^2)^2`, and `psi` solves
//! `-psi'' + V psi = 0` with `psi(0) = 1`, `psi'(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quad;

/// Absolute tolerance for the harmonic coordinate quadrature.
pub const HARMONIC_TOL: f64 = 1e-10;
/// Residual tolerance for [`PotentialProfile::inverse_harmonic`].
pub const INVERSE_TOL: f64 = 1e-9;

/// Japanese bracket `<x> = sqrt(1 + x^2)`.
#[inline]
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialProfile {
    alpha: f64,
}

/// Builds the canonical profile for `alpha`.
pub fn make_profile(alpha: f64) -> Result<PotentialProfile> {
    PotentialProfile::new(alpha)
}

impl PotentialProfile {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return invalid(format!("alpha must be finite, got {alpha}"));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Limit of `|x|^(-alpha) psi(x)`; 1 for this family.
    pub fn psi0(&self) -> f64 {
        1.0
    }

    /// Two-sided comparison constants `(psi_1, psi_2)` with
    /// `psi_1 <x>^alpha <= psi <= psi_2 <x>^alpha`.
    pub fn comparison_constants(&self) -> (f64, f64) {
        (1.0, 1.0)
    }

    #[inline]
    pub fn psi(&self, x: f64) -> f64 {
        if self.alpha == 0.0 {
            return 1.0;
        }
        (1.0 + x * x).powf(0.5 * self.alpha)
    }

    #[inline]
    pub fn psi_prime(&self, x: f64) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        self.alpha * x * (1.0 + x * x).powf(0.5 * self.alpha - 1.0)
    }

    #[inline]
    pub fn psi_second(&self, x: f64) -> f64 {
        if self.alpha == 0.0 {
            return 0.0;
        }
        let s = 1.0 + x * x;
        self.alpha * s.powf(0.5 * self.alpha - 2.0) * (1.0 + (self.alpha - 1.0) * x * x)
    }

    /// `V = psi''/psi`.
    #[inline]
    pub fn potential(&self, x: f64) -> f64 {
        let s = 1.0 + x * x;
        self.alpha * (1.0 + (self.alpha - 1.0) * x * x) / (s * s)
    }

    /// `x psi'(x) / psi(x) = alpha x^2 / (1 + x^2)`.
    #[inline]
    pub fn log_derivative_ratio(&self, x: f64) -> f64 {
        self.alpha * x * x / (1.0 + x * x)
    }

    /// `H(x) = int_0^x psi(y)^-2 dy`.
    pub fn harmonic_coordinate(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return invalid(format!("x must be finite, got {x}"));
        }
        if self.alpha == 0.0 {
            return Ok(x);
        }
        self.harmonic_increment(0.0, x)
    }

    fn harmonic_increment(&self, a: f64, b: f64) -> Result<f64> {
        let alpha = self.alpha;
        // split long ranges so every piece sees a mildly varying integrand
        let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let mut edges = vec![lo];
        let mut cur = lo;
        while cur < hi {
            let step = (2.0 * cur.abs()).max(1.0);
            cur = (cur + step).min(hi);
            edges.push(cur);
        }
        let mut total = 0.0;
        let per = HARMONIC_TOL / edges.len() as f64;
        for w in edges.windows(2) {
            total += quad::integrate(|y| (1.0 + y * y).powf(-alpha), w[0], w[1], per)?;
        }
        Ok(sign * total)
    }

    /// Solves `H(x) = y` by bracket expansion and safeguarded Newton.
    pub fn inverse_harmonic(&self, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return invalid(format!("y must be finite, got {y}"));
        }
        if self.alpha == 0.0 || y == 0.0 {
            return Ok(y);
        }
        // H is odd: solve for |y| and restore the sign
        let target = y.abs();
        let mut hi = target.max(1.0);
        let mut h_hi = self.harmonic_coordinate(hi)?;
        let mut lo = 0.0;
        let mut expansions = 0;
        while h_hi < target {
            lo = hi;
            hi *= 4.0;
            expansions += 1;
            if expansions > 40 || !hi.is_finite() {
                return Err(Error::NumericalFailure(format!(
                    "no bracket for H(x) = {y}: H is bounded by ~{h_hi} for alpha = {}",
                    self.alpha
                )));
            }
            h_hi = self.harmonic_coordinate(hi)?;
        }
        let mut x = 0.5 * (lo + hi);
        let mut hx = self.harmonic_coordinate(x)?;
        for _ in 0..200 {
            let r = hx - target;
            if r.abs() < INVERSE_TOL {
                return Ok(x.copysign(y));
            }
            if r > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let psi = self.psi(x);
            let newton = x - r * psi * psi;
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            // incremental update keeps each Newton step cheap
            hx += self.harmonic_increment(x, next)?;
            x = next;
        }
        Err(Error::NumericalFailure(format!("inverse harmonic coordinate did not converge for y = {y}")))
    }

    /// Samples `(x, psi, psi', V, H)` on `n` equispaced nodes over `[-xmax, xmax]`.
    pub fn table(&self, xmax: f64, n: usize) -> Result<Vec<ProfileRow>> {
        if !(xmax > 0.0 && xmax.is_finite()) || n < 2 {
            return invalid("profile table needs xmax > 0 and n >= 2");
        }
        let h = 2.0 * xmax / (n - 1) as f64;
        let mut rows = Vec::with_capacity(n);
        let mut x_prev = -xmax;
        let mut h_prev = self.harmonic_coordinate(-xmax)?;
        for i in 0..n {
            let x = -xmax + h * i as f64;
            let hx = if i == 0 { h_prev } else { h_prev + self.harmonic_increment(x_prev, x)? };
            rows.push(ProfileRow {
                x,
                psi: self.psi(x),
                psi_prime: self.psi_prime(x),
                potential: self.potential(x),
                harmonic: hx,
            });
            x_prev = x;
            h_prev = hx;
        }
        Ok(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub x: f64,
    pub psi: f64,
    pub psi_prime: f64,
    #[serde(rename = "V")]
    pub potential: f64,
    #[serde(rename = "H")]
    pub harmonic: f64,
}

/// Writes a profile table as CSV with columns `x,psi,psi_prime,V,H`.
pub fn write_profile_csv<W: std::io::Write>(rows: &[ProfileRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
