//! Least-squares helpers for log-log decay fits.

use crate::error::{invalid, Result};

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("linear fit needs at least two paired samples");
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return invalid("linear fit needs at least two distinct abscissae");
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Minimum number of samples accepted by [`loglog_slope`].
pub const MIN_FIT_SAMPLES: usize = 5;

/// Slope of `log(value)` against `log(t)` over samples with `t` in `[lo, hi]`.
pub fn loglog_slope(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Result<f64> {
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&t, &v) in times.iter().zip(values) {
        if t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12) {
            if !(t > 0.0 && v > 0.0) {
                return invalid(format!("log-log fit needs positive samples, got ({t}, {v})"));
            }
            lx.push(t.ln());
            ly.push(v.ln());
        }
    }
    if lx.len() < MIN_FIT_SAMPLES {
        return invalid(format!(
            "only {} samples in window [{lo}, {hi}], need {MIN_FIT_SAMPLES}",
            lx.len()
        ));
    }
    Ok(linear_fit(&lx, &ly)?.0)
}
