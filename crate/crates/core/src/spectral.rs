//! Characteristic roots: Lambert W for a single delay, Newton search with an
//! argument-principle dominance certificate for general quasipolynomials.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::approx::{classify_coeffs, ApproxKind, TaylorCoeffs};
use crate::error::SpectralError;
use crate::lambert::lambert_w;
use crate::types::{DelayDistribution, LinearModel, StabilityVerdict};

/// Accepted roots must satisfy `|h(r)| < RESIDUAL_TOL`.
pub const RESIDUAL_TOL: f64 = 1e-10;
const DEDUP_TOL: f64 = 1e-8;
const CERT_OFFSET: f64 = 1e-6;
const STABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexRoot {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
}

impl ComplexRoot {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Root of the single-delay equation labelled by its Lambert W branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRoot {
    pub re: f64,
    pub im: f64,
    pub residual: f64,
    pub branch: i32,
}

/// `e^{-r tau} (c0 + c1 r + c2 r^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayTerm {
    pub tau: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `h(r) = r - alpha0 - sum_j e^{-r tau_j} (c0_j + c1_j r + c2_j r^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quasipolynomial {
    pub alpha0: f64,
    pub terms: Vec<DelayTerm>,
}

impl Quasipolynomial {
    /// Characteristic function of `u' = alpha0 u + sum C p_j u(t - delta_j)`; repeated
    /// delays are merged.
    pub fn multi_delay(model: &LinearModel, dist: &DelayDistribution) -> Self {
        let mut terms: Vec<DelayTerm> = Vec::with_capacity(dist.len());
        for (tau, p) in dist.iter() {
            if p == 0.0 {
                continue;
            }
            match terms.iter_mut().find(|t| t.tau == tau) {
                Some(t) => t.c0 += model.c * p,
                None => terms.push(DelayTerm {
                    tau,
                    c0: model.c * p,
                    c1: 0.0,
                    c2: 0.0,
                }),
            }
        }
        Self {
            alpha0: model.alpha0,
            terms,
        }
    }

    /// Characteristic function of a single-delay approximation.
    pub fn approximation(model: &LinearModel, coeffs: &TaylorCoeffs, kind: ApproxKind) -> Self {
        let (c1, c2) = match kind {
            ApproxKind::ConstantDelay => (0.0, 0.0),
            ApproxKind::Neutral => (coeffs.a1, 0.0),
            ApproxKind::SecondDerivative { .. } => (coeffs.a1, coeffs.a2),
        };
        Self {
            alpha0: model.alpha0,
            terms: vec![DelayTerm {
                tau: coeffs.delta_star,
                c0: coeffs.a0,
                c1,
                c2,
            }],
        }
    }

    pub fn eval(&self, r: Complex64) -> Complex64 {
        let mut h = r - self.alpha0;
        for t in &self.terms {
            h -= (-r * t.tau).exp() * (t.c0 + r * (t.c1 + r * t.c2));
        }
        h
    }

    /// `(h(r), h'(r))`.
    pub fn eval_with_derivative(&self, r: Complex64) -> (Complex64, Complex64) {
        let mut h = r - self.alpha0;
        let mut dh = Complex64::new(1.0, 0.0);
        for t in &self.terms {
            let e = (-r * t.tau).exp();
            let poly = t.c0 + r * (t.c1 + r * t.c2);
            let dpoly = t.c1 + 2.0 * t.c2 * r;
            h -= e * poly;
            dh -= e * (dpoly - t.tau * poly);
        }
        (h, dh)
    }

    pub fn min_delay(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.tau)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_delay(&self) -> f64 {
        self.terms.iter().map(|t| t.tau).fold(0.0, f64::max)
    }

    /// Upper bound on `|r|` for every root with `re r >= x`, when one exists.
    pub fn modulus_bound(&self, x: f64) -> Option<f64> {
        if self.terms.iter().any(|t| t.c2 != 0.0) {
            return None;
        }
        let mut num = self.alpha0.abs();
        let mut lead = 0.0;
        for t in &self.terms {
            let e = (-x * t.tau).exp();
            num += t.c0.abs() * e;
            lead += t.c1.abs() * e;
        }
        (lead < 1.0 && num.is_finite()).then(|| num / (1.0 - lead))
    }
}

/// Seed rectangle for the Newton search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRegion {
    pub re_lo: f64,
    pub re_hi: f64,
    /// `None` selects `40 / min delay`, capped at 200.
    pub im_hi: Option<f64>,
    pub seeds: usize,
}

impl Default for SearchRegion {
    fn default() -> Self {
        Self {
            re_lo: -30.0,
            re_hi: 10.0,
            im_hi: None,
            seeds: 30,
        }
    }
}

/// Roots `W_k(delta* A0 e^{-alpha0 delta*}) / delta* + alpha0` of
/// `r = alpha0 + C e^{-r delta*}`, one per branch.
pub fn char_roots_constant(
    model: &LinearModel,
    delta_star: f64,
    branches: std::ops::RangeInclusive<i32>,
) -> Result<Vec<BranchRoot>, SpectralError> {
    if !(delta_star.is_finite() && delta_star > 0.0) {
        return Err(crate::error::ModelError::NonPositiveDelay(delta_star).into());
    }
    let qp = Quasipolynomial {
        alpha0: model.alpha0,
        terms: vec![DelayTerm {
            tau: delta_star,
            c0: model.c,
            c1: 0.0,
            c2: 0.0,
        }],
    };
    let arg = Complex64::new(
        delta_star * model.c * (-model.alpha0 * delta_star).exp(),
        0.0,
    );
    branches
        .map(|k| {
            let w = lambert_w(k, arg)?;
            let mut r = w / delta_star + model.alpha0;
            // a couple of Newton steps remove the 1/delta* amplification of W's rounding
            for _ in 0..3 {
                let (h, dh) = qp.eval_with_derivative(r);
                if h.norm() < 1e-15 * (1.0 + r.norm()) || dh.norm() == 0.0 {
                    break;
                }
                r -= h / dh;
            }
            let residual = qp.eval(r).norm();
            if residual >= RESIDUAL_TOL {
                return Err(SpectralError::ResidualTooLarge(residual));
            }
            Ok(BranchRoot {
                re: r.re,
                im: r.im,
                residual,
                branch: k,
            })
        })
        .collect()
}

fn newton(
    qp: &Quasipolynomial,
    mut r: Complex64,
    re_lo: f64,
    re_hi: f64,
    im_hi: f64,
) -> Option<Complex64> {
    for _ in 0..60 {
        let (h, dh) = qp.eval_with_derivative(r);
        if dh.norm() == 0.0 {
            return None;
        }
        let step = h / dh;
        r -= step;
        if !(r.re.is_finite() && r.im.is_finite())
            || r.re < re_lo - 20.0
            || r.re > re_hi + 20.0
            || r.im.abs() > 2.0 * im_hi + 20.0
        {
            return None;
        }
        if step.norm() < 1e-13 * (1.0 + r.norm()) {
            break;
        }
    }
    let res = qp.eval(r).norm();
    (res < RESIDUAL_TOL).then_some(r)
}

fn push_unique(roots: &mut Vec<Complex64>, r: Complex64) {
    let r = if r.im < 0.0 { r.conj() } else { r };
    if !roots.iter().any(|q| (q - r).norm() < DEDUP_TOL) {
        roots.push(r);
    }
}

fn seed_roots(
    qp: &Quasipolynomial,
    re: (f64, f64),
    im: (f64, f64),
    n: usize,
    roots: &mut Vec<Complex64>,
    limits: (f64, f64, f64),
) {
    for i in 0..n {
        let x = re.0 + (re.1 - re.0) * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let y = im.0 + (im.1 - im.0) * (j as f64 + 0.5) / n as f64;
            if let Some(r) = newton(qp, Complex64::new(x, y), limits.0, limits.1, limits.2) {
                push_unique(roots, r);
            }
        }
    }
}

/// Number of zeros of `h` inside the rectangle, by the argument principle.
pub fn count_zeros(qp: &Quasipolynomial, x0: f64, x1: f64, y0: f64, y1: f64) -> Option<i64> {
    let corners = [
        Complex64::new(x0, y0),
        Complex64::new(x1, y0),
        Complex64::new(x1, y1),
        Complex64::new(x0, y1),
    ];
    let max_step = 0.5 / qp.max_delay().max(1e-12);
    let mut total = 0.0;
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let len = (b - a).norm();
        let pieces = ((len / max_step).ceil() as usize).max(1);
        let mut pa = Sample::at(qp, a);
        for s in 1..=pieces {
            let pb = Sample::at(qp, a + (b - a) * (s as f64 / pieces as f64));
            total += arg_change(qp, pa, pb, 0)?;
            pa = pb;
        }
    }
    Some((total / (2.0 * PI)).round() as i64)
}

#[derive(Clone, Copy)]
struct Sample {
    z: Complex64,
    h: Complex64,
    // |h'/h|, the local rate of phase change
    rate: f64,
}

impl Sample {
    fn at(qp: &Quasipolynomial, z: Complex64) -> Self {
        let (h, dh) = qp.eval_with_derivative(z);
        Self {
            z,
            h,
            rate: (dh / h).norm(),
        }
    }
}

fn arg_change(qp: &Quasipolynomial, a: Sample, b: Sample, depth: u32) -> Option<f64> {
    if a.h.norm() == 0.0 || b.h.norm() == 0.0 {
        return None;
    }
    let d = (b.h / a.h).arg();
    // a small principal value alone can hide a full turn when the segment passes
    // close to a pair of zeros, so the phase rate has to be small too
    if d.abs() <= PI / 8.0 && (b.z - a.z).norm() * a.rate.max(b.rate) <= PI / 4.0 {
        return Some(d);
    }
    if depth > 60 {
        return None;
    }
    let m = Sample::at(qp, 0.5 * (a.z + b.z));
    Some(arg_change(qp, a, m, depth + 1)? + arg_change(qp, m, b, depth + 1)?)
}

/// Rightmost root of `h` with a certificate that no root lies further right.
pub fn rightmost_root_of(
    qp: &Quasipolynomial,
    region: &SearchRegion,
) -> Result<ComplexRoot, SpectralError> {
    let min_delay = qp.min_delay();
    let im_hi = region
        .im_hi
        .unwrap_or_else(|| (40.0 / min_delay).min(200.0));
    let limits = (region.re_lo, region.re_hi, im_hi);
    let mut roots = Vec::new();
    seed_roots(
        qp,
        (region.re_lo, region.re_hi),
        (0.0, im_hi),
        region.seeds,
        &mut roots,
        limits,
    );

    for attempt in 0..2 {
        let best = roots.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re));
        // with no root found the certificate has to cover everything right of re_lo
        let x0 = best.map_or(region.re_lo, |r| r.re + CERT_OFFSET);
        let bound = qp.modulus_bound(x0).ok_or_else(|| {
            SpectralError::SearchExhausted(format!("no modulus bound right of re = {x0}"))
        })?;
        if bound > 1e5 {
            return Err(SpectralError::SearchExhausted(format!(
                "modulus bound {bound} too large to certify"
            )));
        }
        let count = if bound <= x0 {
            Some(0)
        } else {
            count_zeros(qp, x0, bound, -bound, bound)
        };
        match (count, best) {
            (Some(0), Some(r)) => {
                return Ok(ComplexRoot {
                    re: r.re,
                    im: r.im,
                    residual: qp.eval(r).norm(),
                });
            }
            (Some(0), None) => {
                return Err(SpectralError::SearchExhausted("no root converged".into()));
            }
            _ if attempt == 0 => {
                // denser seeds inside the uncertified rectangle
                let n = (2 * region.seeds).max(60);
                seed_roots(
                    qp,
                    (x0, bound),
                    (0.0, bound),
                    n,
                    &mut roots,
                    (x0, bound, bound),
                );
            }
            _ => {}
        }
    }
    Err(SpectralError::SearchExhausted(
        "dominance certificate failed".into(),
    ))
}

/// Rightmost characteristic root of `u' = alpha0 u + sum C p_j u(t - delta_j)`.
pub fn rightmost_root(
    model: &LinearModel,
    dist: &DelayDistribution,
) -> Result<ComplexRoot, SpectralError> {
    rightmost_root_of(
        &Quasipolynomial::multi_delay(model, dist),
        &SearchRegion::default(),
    )
}

/// Verdict from the sign of a rightmost real part.
pub fn verdict_from_real_part(re: f64) -> StabilityVerdict {
    if re < -STABILITY_TOL {
        StabilityVerdict::stable(re)
    } else if re > STABILITY_TOL {
        StabilityVerdict::unstable(re)
    } else {
        StabilityVerdict::inconclusive(re)
    }
}

/// Stability of the multi-delay equation from its rightmost root.
pub fn classify_spectral(model: &LinearModel, dist: &DelayDistribution) -> StabilityVerdict {
    match rightmost_root(model, dist) {
        Ok(r) => verdict_from_real_part(r.re),
        Err(_) => StabilityVerdict::inconclusive(f64::NAN),
    }
}

/// Root-based verdict for an approximation. Only retarded equations and neutral ones
/// with `|A1| < 0.9` are searched; the rest fall back to the closed-form comparison.
pub fn classify_approx_spectral(
    model: &LinearModel,
    coeffs: &TaylorCoeffs,
    kind: ApproxKind,
) -> StabilityVerdict {
    let searchable = match kind {
        ApproxKind::ConstantDelay => true,
        ApproxKind::Neutral => coeffs.a1.abs() < 0.9,
        ApproxKind::SecondDerivative { .. } => false,
    };
    if searchable {
        let qp = Quasipolynomial::approximation(model, coeffs, kind);
        if let Ok(r) = rightmost_root_of(&qp, &SearchRegion::default()) {
            return verdict_from_real_part(r.re);
        }
    }
    classify_coeffs(model, coeffs, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{critical_delay_constant, taylor_coeffs};
    use crate::types::{DeltaStarRule, StabilityClass};
    use proptest::prelude::*;

    fn base() -> LinearModel {
        LinearModel::new(-1.0, -5.0).unwrap()
    }

    fn dcr() -> f64 {
        critical_delay_constant(&base()).unwrap().delay
    }

    #[test]
    fn lambert_roots_bracket_the_critical_delay() {
        let at = char_roots_constant(&base(), dcr(), 0..=0).unwrap();
        assert!(at[0].re.abs() < 1e-10);
        assert!((at[0].im.abs() - 24f64.sqrt()).abs() < 1e-8);
        assert!(
            char_roots_constant(&base(), 0.361739, 0..=0).unwrap()[0]
                .re
                .abs()
                < 1e-4
        );
        assert!(char_roots_constant(&base(), 0.1, 0..=0).unwrap()[0].re < 0.0);
        assert!(char_roots_constant(&base(), 0.9, 0..=0).unwrap()[0].re > 0.0);
    }

    #[test]
    fn branch_zero_is_rightmost() {
        for d in [0.05, 0.2, 0.5, 1.3] {
            let roots = char_roots_constant(&base(), d, -8..=8).unwrap();
            let r0 = roots.iter().find(|r| r.branch == 0).unwrap();
            assert!(roots.iter().all(|r| r.re <= r0.re + 1e-12));
            assert!(roots.iter().all(|r| r.residual < RESIDUAL_TOL));
        }
    }

    #[test]
    fn examples() {
        let d = DelayDistribution::two_point(0.3, 0.7, 0.5).unwrap();
        assert!(rightmost_root(&base(), &d).unwrap().re < 0.0);
        let d = DelayDistribution::two_point(dcr(), dcr(), 0.5).unwrap();
        assert!(rightmost_root(&base(), &d).unwrap().re.abs() < 1e-8);
        let d = DelayDistribution::two_point(1e-3, 1e-3, 0.5).unwrap();
        let r = rightmost_root(&base(), &d).unwrap();
        assert!((r.re - (-6.0)).abs() < 0.1, "{r:?}");
    }

    #[test]
    fn classification_examples() {
        let v = |a: f64, b: f64| {
            classify_spectral(&base(), &DelayDistribution::two_point(a, b, 0.5).unwrap()).class
        };
        assert_eq!(v(0.1, 0.1), StabilityClass::Stable);
        assert_eq!(v(0.9, 0.9), StabilityClass::Unstable);
        assert_eq!(v(dcr(), dcr()), StabilityClass::Inconclusive);
    }

    #[test]
    fn approximation_roots_agree_with_formulas() {
        let m = base();
        for (a, b, p) in [(0.3, 0.7, 0.5), (0.1, 0.5, 0.3), (0.2, 0.9, 0.7)] {
            let d = DelayDistribution::two_point(a, b, p).unwrap();
            for rule in [DeltaStarRule::Mean, DeltaStarRule::Midpoint] {
                let c = taylor_coeffs(&m, &d, rule).unwrap();
                for kind in [ApproxKind::ConstantDelay, ApproxKind::Neutral] {
                    let s = classify_approx_spectral(&m, &c, kind);
                    let f = classify_coeffs(&m, &c, kind);
                    assert_eq!(s.class, f.class, "{a} {b} {p} {rule} {kind}");
                }
            }
        }
    }

    #[test]
    fn argument_principle_counts_known_roots() {
        let qp = Quasipolynomial::multi_delay(&base(), &DelayDistribution::single(0.9).unwrap());
        let r = rightmost_root(&base(), &DelayDistribution::single(0.9).unwrap()).unwrap();
        assert_eq!(
            count_zeros(&qp, r.re - 0.1, r.re + 1.0, -r.im - 1.0, r.im + 1.0),
            Some(2)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn single_delay_matches_lambert(d in 0.02f64..2.0, a in -3.0f64..0.5, c in -8.0f64..-0.2) {
            let m = LinearModel::new(a, c).unwrap();
            let r = rightmost_root(&m, &DelayDistribution::single(d).unwrap()).unwrap();
            let w = char_roots_constant(&m, d, 0..=0).unwrap()[0];
            let w = Complex64::new(w.re, w.im.abs());
            prop_assert!((r.value() - w).norm() < 1e-9, "{r:?} vs {w}");
        }

        #[test]
        fn residuals_and_conjugates(d1 in 0.01f64..1.0, d2 in 0.01f64..1.0, p in 0.0f64..1.0) {
            let m = base();
            let dist = DelayDistribution::two_point(d1, d2, p).unwrap();
            let qp = Quasipolynomial::multi_delay(&m, &dist);
            let r = rightmost_root(&m, &dist).unwrap();
            prop_assert!(r.im >= 0.0);
            prop_assert!(qp.eval(r.value()).norm() < RESIDUAL_TOL);
            prop_assert!(qp.eval(r.value().conj()).norm() < RESIDUAL_TOL);
        }
    }
}
