//! Critical Fujita exponent `p_*(alpha, m)` for the one-dimensional problem
//! with ground-state potential and weight `<x>^-m` in the nonlinearity.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Relative tolerance for detecting `p == p_*`.
pub const CRITICAL_LINE_TOL: f64 = 1e-12;

/// The threshold `alpha_*(1) = (-5 + sqrt(17)) / 4`, the root in `(-1/2, 0)` of
/// `1 + 2/(1 + a) = 2/(1 + 2a)`.
pub fn alpha_star() -> f64 {
    (-5.0 + 17f64.sqrt()) / 4.0
}

/// Which piece of the piecewise definition produced `p_*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// `alpha > 1/2`: `1 + [2 - m]_+ / (1 + alpha)`.
    SubcriticalAlpha,
    /// `alpha_* <= alpha <= 1/2`: `max{2/(1 + 2 alpha), 1 + (2 - m)/(1 + alpha)}`.
    MiddleBand,
    /// `-1/2 < alpha < alpha_*`: `2/(1 + 2 alpha)`.
    LowBand,
    /// `alpha <= -1/2`: every `p > 1` blows up.
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    /// `f64::INFINITY` on the [`Branch::Infinite`] branch.
    #[serde(with = "extended_real")]
    pub p_star: f64,
    pub branch: Branch,
}

/// Evaluates `p_*(alpha, m)` exactly.
pub fn critical_exponent(alpha: f64, m: f64) -> Result<ExponentResult> {
    if !alpha.is_finite() {
        return invalid(format!("alpha must be finite, got {alpha}"));
    }
    if !(m >= 0.0) || !m.is_finite() {
        return invalid(format!("m must be a finite nonnegative number, got {m}"));
    }
    let (p_star, branch) = if alpha > 0.5 {
        (1.0 + (2.0 - m).max(0.0) / (1.0 + alpha), Branch::SubcriticalAlpha)
    } else if alpha >= alpha_star() {
        let a = 2.0 / (1.0 + 2.0 * alpha);
        let b = 1.0 + (2.0 - m) / (1.0 + alpha);
        (a.max(b), Branch::MiddleBand)
    } else if alpha > -0.5 {
        (2.0 / (1.0 + 2.0 * alpha), Branch::LowBand)
    } else {
        (f64::INFINITY, Branch::Infinite)
    };
    Ok(ExponentResult { p_star, branch })
}

/// Side of the threshold a given `p` lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `1 < p < p_*`: no nontrivial global solution.
    BlowupRegime,
    /// `p > p_*`: small data exist globally.
    GlobalRegime,
    /// `p == p_*` (still no nontrivial global solution).
    CriticalLine,
}

pub fn regime_classify(alpha: f64, m: f64, p: f64) -> Result<Regime> {
    if !(p > 1.0) || !p.is_finite() {
        return invalid(format!("p must exceed 1, got {p}"));
    }
    let p_star = critical_exponent(alpha, m)?.p_star;
    if p_star.is_infinite() {
        return Ok(Regime::BlowupRegime);
    }
    if (p - p_star).abs() <= CRITICAL_LINE_TOL * p_star {
        Ok(Regime::CriticalLine)
    } else if p < p_star {
        Ok(Regime::BlowupRegime)
    } else {
        Ok(Regime::GlobalRegime)
    }
}

/// Serializes `f64::INFINITY` as the string `"inf"` and finite values as numbers.
pub mod extended_real {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(D::Error::custom(format!("expected a number or \"inf\", got {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bisect_alpha_star() -> f64 {
        let g = |a: f64| 1.0 + 2.0 / (1.0 + a) - 2.0 / (1.0 + 2.0 * a);
        // g > 0 just above -1/2 is false (2/(1+2a) blows up), so g(-0.49) < 0 < g(0.5)
        let (mut lo, mut hi) = (-0.49_f64, 0.5_f64);
        assert!(g(lo) < 0.0 && g(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn alpha_star_value_and_relation() {
        let a = alpha_star();
        assert_eq!(a, (-5.0 + 17f64.sqrt()) / 4.0);
        let residual = 1.0 + 2.0 / (1.0 + a) - 2.0 / (1.0 + 2.0 * a);
        assert!(residual.abs() < 1e-12);
        assert!((a - bisect_alpha_star()).abs() < 1e-12);
        assert!((a - -0.219224).abs() < 1e-6);
    }

    #[test]
    fn exponent_table() {
        let cases = [
            (0.0, 0.0, 3.0, Branch::MiddleBand),
            (1.0, 0.0, 2.0, Branch::SubcriticalAlpha),
            (-0.4, 0.0, 10.0, Branch::LowBand),
            (1.0, 3.0, 1.0, Branch::SubcriticalAlpha),
            (0.5, 0.0, 7.0 / 3.0, Branch::MiddleBand),
        ];
        for (a, m, p, b) in cases {
            let r = critical_exponent(a, m).unwrap();
            assert!((r.p_star - p).abs() < 1e-14, "({a},{m}) -> {}", r.p_star);
            assert_eq!(r.branch, b);
        }
        let r = critical_exponent(-0.6, 0.0).unwrap();
        assert!(r.p_star.is_infinite());
        assert_eq!(r.branch, Branch::Infinite);
        assert_eq!(critical_exponent(-0.5, 1.0).unwrap().branch, Branch::Infinite);
    }

    #[test]
    fn rejects_negative_m() {
        assert!(critical_exponent(0.0, -1.0).is_err());
        assert!(critical_exponent(0.0, f64::NAN).is_err());
    }

    #[test]
    fn branch_continuity_at_alpha_star() {
        let a = alpha_star();
        let lhs = 2.0 / (1.0 + 2.0 * a);
        let rhs = 1.0 + 2.0 / (1.0 + a);
        assert!((lhs - rhs).abs() < 1e-10);
        let below = critical_exponent(a - 1e-12, 0.0).unwrap().p_star;
        let above = critical_exponent(a, 0.0).unwrap().p_star;
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn regimes() {
        assert_eq!(regime_classify(0.0, 0.0, 2.0).unwrap(), Regime::BlowupRegime);
        assert_eq!(regime_classify(0.0, 0.0, 4.0).unwrap(), Regime::GlobalRegime);
        assert_eq!(regime_classify(0.0, 0.0, 3.0).unwrap(), Regime::CriticalLine);
        assert_eq!(regime_classify(-0.7, 0.0, 50.0).unwrap(), Regime::BlowupRegime);
        assert!(regime_classify(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn large_m_middle_band_reduces() {
        for a in [alpha_star(), -0.1, 0.0, 0.3, 0.5] {
            for m in [2.0, 3.0, 10.0] {
                let p = critical_exponent(a, m).unwrap().p_star;
                assert!((p - (2.0 / (1.0 + 2.0 * a)).max(1.0 + (2.0 - m) / (1.0 + a))).abs() < 1e-15);
                assert!(p >= 1.0);
            }
        }
    }

    #[test]
    fn infinity_serializes_as_string() {
        let r = critical_exponent(-0.6, 0.0).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"p_star":"inf","branch":"Infinite"}"#);
        let back: ExponentResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    proptest! {
        #[test]
        fn nonincreasing_in_m(alpha in -0.49f64..3.0, m1 in 0.0f64..5.0, dm in 0.0f64..5.0) {
            let a = critical_exponent(alpha, m1).unwrap().p_star;
            let b = critical_exponent(alpha, m1 + dm).unwrap().p_star;
            prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn value_range(alpha in -2.0f64..3.0, m in 0.0f64..6.0) {
            let r = critical_exponent(alpha, m).unwrap();
            prop_assert!(r.p_star > 1.0 || r.p_star.is_infinite()
                || (r.p_star == 1.0 && alpha >= 0.5 && m >= 2.0));
        }
    }
}
