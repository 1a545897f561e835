//! Raw ratios for the Nash, Hardy and weighted Nash inequalities of `L`, and
//! empirical best constants over deterministic test families.
//!
//! Every ratio is `LHS / RHS` with the constant set to one, so a finite
//! supremum over a family is an empirical lower bound for the best constant.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{derivative, quadratic_form, Field, Grid};
use crate::par::{self, Execution};
use crate::profile::{bracket, PotentialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityKind {
    /// `||f||_2^(2 + 4/(1+2a)) <= C ||psi f||_1^(4/(1+2a)) ||L^(1/2) f||_2^2`
    Nash,
    /// `||<x>^-1 f||_2 <= C ||L^(1/2) f||_2`
    HardyL2,
    /// `||<x>^(-1/2) f||_inf <= C ||L^(1/2) f||_2`
    HardyLinf,
    /// `||<x>^(a-1) f_*||_2 <= C ||<x>^a f_*'||_2`, with `f_* = f / psi`
    HardyProof,
    /// `||psi^(2/3) f||_2^6 <= C ||psi f||_1^4 ||L^(1/2) f||_2^2`
    WeightedNashL2,
    /// `||psi^(1/3) f||_inf^6 <= C ||psi f||_1^2 ||L^(1/2) f||_2^4`
    WeightedNashLinf,
}

impl InequalityKind {
    pub fn is_hardy(self) -> bool {
        matches!(self, InequalityKind::HardyL2 | InequalityKind::HardyLinf | InequalityKind::HardyProof)
    }
}

/// Quantities shared by the Nash-type ratios.
struct Pieces {
    l1_psi: f64,
    form: f64,
}

fn pieces(f: &Field, prof: &PotentialProfile) -> Result<Pieces> {
    let g = &f.grid;
    let weighted: Vec<f64> = g.nodes().iter().zip(&f.values).map(|(&x, &v)| prof.psi(x) * v.abs()).collect();
    Ok(Pieces { l1_psi: g.trapezoid(&weighted), form: quadratic_form(f, prof)? })
}

fn weighted_l2(f: &Field, w: impl Fn(f64) -> f64) -> f64 {
    let sq: Vec<f64> = f.grid.nodes().iter().zip(&f.values).map(|(&x, &v)| (w(x) * v).powi(2)).collect();
    f.grid.trapezoid(&sq).sqrt()
}

fn weighted_sup(f: &Field, w: impl Fn(f64) -> f64) -> f64 {
    f.grid.nodes().iter().zip(&f.values).map(|(&x, &v)| (w(x) * v).abs()).fold(0.0, f64::max)
}

fn nondegenerate(p: &Pieces) -> Result<()> {
    if !(p.l1_psi > 0.0 && p.form > 0.0) {
        return invalid("ratio undefined: zero norm or zero quadratic form");
    }
    Ok(())
}

fn require_nonnegative_alpha(prof: &PotentialProfile) -> Result<()> {
    if prof.alpha() < 0.0 {
        return invalid(format!("Nash-type ratios need alpha >= 0, got {}", prof.alpha()));
    }
    Ok(())
}

pub fn nash_ratio(f: &Field, prof: &PotentialProfile) -> Result<f64> {
    require_nonnegative_alpha(prof)?;
    let p = pieces(f, prof)?;
    nondegenerate(&p)?;
    let k = 4.0 / (1.0 + 2.0 * prof.alpha());
    let l2 = weighted_l2(f, |_| 1.0);
    Ok(l2.powf(2.0 + k) / (p.l1_psi.powf(k) * p.form))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyRatios {
    pub r1: f64,
    pub r2: f64,
    /// `||<x>^(a-1) f_*||_2 / ||<x>^a f_*'||_2`.
    pub proof_ratio: f64,
    /// `2 max{1, 1/(2a - 1)}`.
    pub proof_bound: f64,
}

impl HardyRatios {
    pub fn proof_inequality_holds(&self) -> bool {
        self.proof_ratio <= self.proof_bound
    }
}

pub fn hardy_proof_bound(alpha: f64) -> f64 {
    2.0 * 1f64.max(1.0 / (2.0 * alpha - 1.0))
}

/// Hardy ratios for `alpha > 1/2`; the inequalities fail for smaller `alpha`.
pub fn hardy_ratios(f: &Field, prof: &PotentialProfile) -> Result<HardyRatios> {
    if !(prof.alpha() > 0.5) {
        return invalid(format!("Hardy inequalities need alpha > 1/2, got {}", prof.alpha()));
    }
    hardy_ratios_unchecked(f, prof)
}

/// [`hardy_ratios`] without the `alpha > 1/2` guard, for diagnosing how the
/// ratios degenerate when the hypothesis fails.
pub fn hardy_ratios_unchecked(f: &Field, prof: &PotentialProfile) -> Result<HardyRatios> {
    let alpha = prof.alpha();
    let proof_bound = if alpha > 0.5 { hardy_proof_bound(alpha) } else { f64::INFINITY };
    let form = quadratic_form(f, prof)?;
    let lhs1 = weighted_l2(f, |x| 1.0 / bracket(x));
    let lhs2 = weighted_sup(f, |x| bracket(x).powf(-0.5));
    let star = f.over_psi(prof);
    let g = &f.grid;
    let star_field = Field { grid: g.clone(), values: star.clone(), time: f.time };
    let lhs_proof = weighted_l2(&star_field, |x| bracket(x).powf(alpha - 1.0));
    let dstar = derivative(&star, g.h());
    let sq: Vec<f64> = g.nodes().iter().zip(&dstar).map(|(&x, &d)| (bracket(x).powf(alpha) * d).powi(2)).collect();
    let rhs_proof = g.trapezoid(&sq).sqrt();
    if form == 0.0 {
        if lhs1 == 0.0 && lhs2 == 0.0 {
            return Ok(HardyRatios { r1: 0.0, r2: 0.0, proof_ratio: 0.0, proof_bound });
        }
        return invalid("quadratic form vanishes for nonzero data");
    }
    let root = form.sqrt();
    Ok(HardyRatios { r1: lhs1 / root, r2: lhs2 / root, proof_ratio: lhs_proof / rhs_proof, proof_bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedNashRatios {
    pub w1: f64,
    pub w2: f64,
}

pub fn weighted_nash_ratios(f: &Field, prof: &PotentialProfile) -> Result<WeightedNashRatios> {
    require_nonnegative_alpha(prof)?;
    let p = pieces(f, prof)?;
    nondegenerate(&p)?;
    let l2 = weighted_l2(f, |x| prof.psi(x).powf(2.0 / 3.0));
    let sup = weighted_sup(f, |x| prof.psi(x).powf(1.0 / 3.0));
    Ok(WeightedNashRatios {
        w1: l2.powi(6) / (p.l1_psi.powi(4) * p.form),
        w2: sup.powi(6) / (p.l1_psi.powi(2) * p.form.powi(2)),
    })
}

/// Raw ratio of one inequality.
pub fn ratio(kind: InequalityKind, f: &Field, prof: &PotentialProfile) -> Result<f64> {
    Ok(match kind {
        InequalityKind::Nash => nash_ratio(f, prof)?,
        InequalityKind::HardyL2 => hardy_ratios(f, prof)?.r1,
        InequalityKind::HardyLinf => hardy_ratios(f, prof)?.r2,
        InequalityKind::HardyProof => hardy_ratios(f, prof)?.proof_ratio,
        InequalityKind::WeightedNashL2 => weighted_nash_ratios(f, prof)?.w1,
        InequalityKind::WeightedNashLinf => weighted_nash_ratios(f, prof)?.w2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `exp(-((x - c)/w)^2)`
    Gaussians,
    /// `exp(1 - 1/(1 - ((x - c)/w)^2))` on `|x - c| < w`
    Bumps,
    /// `psi(x) exp(-((x - c)/w)^2)`
    PsiModulated,
}

/// Points per width on member grids.
const POINTS_PER_WIDTH: f64 = 40.0;
/// Gaussian tails are negligible beyond this many widths.
const TAIL_WIDTHS: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyMember {
    pub kind: FamilyKind,
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl FamilyMember {
    pub fn eval(&self, prof: &PotentialProfile, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        self.amplitude
            * match self.kind {
                FamilyKind::Gaussians => (-s * s).exp(),
                FamilyKind::PsiModulated => prof.psi(x) * (-s * s).exp(),
                FamilyKind::Bumps => {
                    if s.abs() < 1.0 {
                        (1.0 - 1.0 / (1.0 - s * s)).exp()
                    } else {
                        0.0
                    }
                }
            }
    }

    /// Grid resolving the member with its tails below the truncation tolerance.
    pub fn grid(&self) -> Result<Arc<Grid>> {
        let reach = match self.kind {
            FamilyKind::Bumps => self.width,
            _ => TAIL_WIDTHS * self.width,
        };
        Ok(Arc::new(Grid::with_spacing(self.center.abs() + reach + 1.0, self.width / POINTS_PER_WIDTH)?))
    }

    pub fn field(&self, prof: &PotentialProfile) -> Result<Field> {
        Ok(Field::from_fn(self.grid()?, |x| self.eval(prof, x)))
    }
}

/// Deterministic product family `kinds x centers x widths x amplitudes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub kinds: Vec<FamilyKind>,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl TestFamily {
    /// Widths `2^k, k = -3..=6`, centers `{0, 5, 25}`, unit amplitude.
    pub fn standard(kinds: &[FamilyKind]) -> Self {
        Self {
            kinds: kinds.to_vec(),
            centers: vec![0.0, 5.0, 25.0],
            widths: (-3..=6).map(|k| 2f64.powi(k)).collect(),
            amplitudes: vec![1.0],
        }
    }

    pub fn default_family() -> Self {
        Self::standard(&[FamilyKind::Gaussians, FamilyKind::Bumps, FamilyKind::PsiModulated])
    }

    pub fn members(&self) -> Vec<FamilyMember> {
        let mut out = Vec::new();
        for &kind in &self.kinds {
            for &center in &self.centers {
                for &width in &self.widths {
                    for &amplitude in &self.amplitudes {
                        out.push(FamilyMember { kind, center, width, amplitude });
                    }
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.kinds.len() * self.centers.len() * self.widths.len() * self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRatio {
    pub member: FamilyMember,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestConstant {
    pub kind: InequalityKind,
    pub alpha: f64,
    pub sup_ratio: f64,
    pub argmax: FamilyMember,
    pub ratios: Vec<MemberRatio>,
}

/// Supremum of the raw ratio over every family member.
pub fn estimate_best_constant(
    family: &TestFamily,
    kind: InequalityKind,
    prof: &PotentialProfile,
    exec: Execution,
) -> Result<BestConstant> {
    let members = family.members();
    if members.is_empty() {
        return invalid("test family is empty");
    }
    if members.iter().any(|m| !(m.width > 0.0 && m.amplitude != 0.0 && m.center.is_finite())) {
        return invalid("family members need positive widths and nonzero amplitudes");
    }
    let results = par::map(exec, &members, |m| m.field(prof).and_then(|f| ratio(kind, &f, prof)));
    let mut ratios = Vec::with_capacity(members.len());
    for (member, r) in members.into_iter().zip(results) {
        let ratio = r?;
        if !ratio.is_finite() {
            return Err(Error::NumericalFailure(format!("non-finite ratio for {member:?}")));
        }
        ratios.push(MemberRatio { member, ratio });
    }
    let best = ratios.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap();
    Ok(BestConstant { kind, alpha: prof.alpha(), sup_ratio: best.ratio, argmax: best.member, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::make_profile;
    use crate::quad::integrate;
    use std::f64::consts::PI;

    fn gaussian(width: f64) -> FamilyMember {
        FamilyMember { kind: FamilyKind::Gaussians, center: 0.0, width, amplitude: 1.0 }
    }

    #[test]
    fn nash_gaussian_closed_form() {
        // ||f||_2^2 = sqrt(pi/2), ||f||_1 = sqrt(pi), ||f'||_2^2 = sqrt(pi/2)
        let p = make_profile(0.0).unwrap();
        let oracle = (PI / 2.0).powf(1.5) / (PI * PI * (PI / 2.0).sqrt());
        let r = nash_ratio(&gaussian(1.0).field(&p).unwrap(), &p).unwrap();
        assert!((r - oracle).abs() < 1e-4 * oracle);
        assert!((oracle - 1.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn nash_dilation_invariance_at_alpha_zero() {
        let p = make_profile(0.0).unwrap();
        let base = nash_ratio(&gaussian(1.0).field(&p).unwrap(), &p).unwrap();
        for w in [0.5, 2.0, 8.0] {
            let r = nash_ratio(&gaussian(w).field(&p).unwrap(), &p).unwrap();
            assert!((r - base).abs() < 1e-6 * base, "w = {w}");
        }
    }

    #[test]
    fn weighted_nash_reduces_to_nash_at_alpha_zero() {
        let p = make_profile(0.0).unwrap();
        let f = FamilyMember { kind: FamilyKind::Bumps, center: 5.0, width: 3.0, amplitude: 1.0 }.field(&p).unwrap();
        let w = weighted_nash_ratios(&f, &p).unwrap();
        assert!((w.w1 - nash_ratio(&f, &p).unwrap()).abs() < 1e-12 * w.w1);
    }

    #[test]
    fn hardy_quadrature_oracle() {
        // alpha = 1, f = exp(-x^2): f_* = f/psi, (f_*)' = -x f (2 + 1/(1+x^2)) / psi
        let p = make_profile(1.0).unwrap();
        let f = gaussian(1.0).field(&p).unwrap();
        let h = hardy_ratios(&f, &p).unwrap();
        let fx = |x: f64| (-x * x).exp();
        let lhs = integrate(|x| fx(x).powi(2) / (1.0 + x * x), -12.0, 12.0, 1e-14).unwrap();
        let form = integrate(
            |x| {
                let d = -x * fx(x) * (2.0 + 1.0 / (1.0 + x * x)) / (1.0 + x * x).sqrt();
                (1.0 + x * x) * d * d
            },
            -12.0,
            12.0,
            1e-14,
        )
        .unwrap();
        let oracle = (lhs / form).sqrt();
        assert!((h.r1 - oracle).abs() < 1e-4 * oracle, "{} vs {oracle}", h.r1);
        assert!(h.proof_inequality_holds());
    }

    #[test]
    fn hardy_rejects_small_alpha_and_zero_data() {
        let p = make_profile(0.4).unwrap();
        let f = gaussian(1.0).field(&p).unwrap();
        assert!(hardy_ratios(&f, &p).is_err());
        assert!(hardy_ratios_unchecked(&f, &p).is_ok());
        let q = make_profile(1.0).unwrap();
        let zero = Field::zeros(gaussian(1.0).grid().unwrap());
        let h = hardy_ratios(&zero, &q).unwrap();
        assert_eq!((h.r1, h.r2, h.proof_ratio), (0.0, 0.0, 0.0));
        assert!(nash_ratio(&zero, &q).is_err());
    }

    #[test]
    fn amplitude_invariance() {
        let p = make_profile(1.0).unwrap();
        let m = FamilyMember { kind: FamilyKind::PsiModulated, center: 5.0, width: 2.0, amplitude: 1.0 };
        let f = m.field(&p).unwrap();
        for lam in [0.1, 10.0] {
            let g = FamilyMember { amplitude: lam, ..m }.field(&p).unwrap();
            for kind in [
                InequalityKind::Nash,
                InequalityKind::HardyL2,
                InequalityKind::HardyLinf,
                InequalityKind::HardyProof,
                InequalityKind::WeightedNashL2,
                InequalityKind::WeightedNashLinf,
            ] {
                let a = ratio(kind, &f, &p).unwrap();
                let b = ratio(kind, &g, &p).unwrap();
                assert!((a - b).abs() <= 1e-12 * a, "{kind:?}");
            }
        }
    }

    #[test]
    fn family_sup_monotone_and_singleton() {
        let p = make_profile(0.5).unwrap();
        let small = TestFamily {
            kinds: vec![FamilyKind::Bumps],
            centers: vec![0.0],
            widths: vec![4.0],
            amplitudes: vec![1.0],
        };
        let single = estimate_best_constant(&small, InequalityKind::Nash, &p, Execution::Sequential).unwrap();
        let direct = nash_ratio(&small.members()[0].field(&p).unwrap(), &p).unwrap();
        assert_eq!(single.sup_ratio, direct);
        let big = TestFamily { widths: vec![1.0, 4.0, 16.0], ..small.clone() };
        let more = estimate_best_constant(&big, InequalityKind::Nash, &p, Execution::Parallel).unwrap();
        assert!(more.sup_ratio >= single.sup_ratio);
        let empty = TestFamily { widths: vec![], ..small };
        assert!(estimate_best_constant(&empty, InequalityKind::Nash, &p, Execution::Sequential).is_err());
    }

    #[test]
    fn members_decay_at_grid_edge() {
        let p = make_profile(2.0).unwrap();
        for m in TestFamily::default_family().members() {
            assert!(m.field(&p).unwrap().boundary_ratio() <= 1e-12, "{m:?}");
        }
    }
}
