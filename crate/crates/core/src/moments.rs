//! Central moments of the discrete delay and the two-delay extreme-point analysis.

use serde::Serialize;

use crate::types::DelayDistribution;

/// `sum_k p_k (E[delta] - delta_k)^n`.
pub fn central_moment(dist: &DelayDistribution, n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mean = dist.mean();
    dist.iter()
        .map(|(d, p)| p * (mean - d).powi(n as i32))
        .sum()
}

/// Closed form of the `n`-th central moment when `P(delta1) = p`, `P(delta2) = 1 - p`.
pub fn central_moment_two_point(delta1: f64, delta2: f64, p: f64, n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let q = 1.0 - p;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    p * q * (q.powi(n as i32 - 1) + sign * p.powi(n as i32 - 1)) * (delta2 - delta1).powi(n as i32)
}

/// Derivative of [`central_moment_two_point`] with respect to `p`.
pub fn moment_derivative_p(delta1: f64, delta2: f64, n: u32, p: f64) -> f64 {
    let nf = n as f64;
    let q = 1.0 - p;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let k = n as i32 - 1;
    (delta2 - delta1).powi(n as i32) * ((q - nf * p) * q.powi(k) - sign * (p - nf * q) * p.powi(k))
}

/// Coefficient `(-1)^n / n! m_n` of the leading truncation error term.
pub fn error_coefficient(dist: &DelayDistribution, n: u32) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let fact: f64 = (1..=n).map(f64::from).product();
    sign * central_moment(dist, n) / fact
}

/// Critical points of `p -> m_n(p)` on `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremePoints {
    /// Roots of `dm_n/dp` known in closed form; not necessarily all of them.
    pub exact: Option<Vec<f64>>,
    /// `1/(n+1)` and `n/(n+1)`, which approach the extrema of `|m_n|` as `n` grows.
    pub approx: [f64; 2],
}

pub fn extreme_points(n: u32) -> ExtremePoints {
    let nf = n as f64;
    let off = (1.0f64 / 12.0).sqrt();
    let exact = match n {
        2 => Some(vec![0.5]),
        3 => Some(vec![0.5 - off, 0.5 + off]),
        // m_4 = x - 3x^2 with x = p(1-p): critical at x = 1/6 and at p = 1/2
        4 => Some(vec![0.5 - off, 0.5, 0.5 + off]),
        n if n % 2 == 0 => Some(vec![0.5]),
        _ => None,
    };
    ExtremePoints {
        exact,
        approx: [1.0 / (nf + 1.0), nf / (nf + 1.0)],
    }
}

/// Sampled curve `p -> m_n(p)` for plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCurve {
    pub n: u32,
    pub samples: Vec<(f64, f64)>,
}

pub fn moment_curve(delta1: f64, delta2: f64, n: u32, points: usize) -> MomentCurve {
    let points = points.max(2);
    let samples = (0..points)
        .map(|i| {
            let p = i as f64 / (points - 1) as f64;
            (p, central_moment_two_point(delta1, delta2, p, n))
        })
        .collect();
    MomentCurve { n, samples }
}

/// Local maximizers of `|m_n(p)|` in `(0, 1)`: 1e-3 grid scan then golden-section
/// refinement to 1e-8.
pub fn abs_moment_maximizers(delta1: f64, delta2: f64, n: u32) -> Vec<f64> {
    let f = |p: f64| central_moment_two_point(delta1, delta2, p, n).abs();
    let steps = 1000;
    let grid: Vec<f64> = (0..=steps).map(|i| f(i as f64 / steps as f64)).collect();
    let mut out = Vec::new();
    for i in 1..steps {
        if grid[i] > 0.0 && grid[i] >= grid[i - 1] && grid[i] > grid[i + 1] {
            let lo = (i - 1) as f64 / steps as f64;
            let hi = (i + 1) as f64 / steps as f64;
            out.push(golden_max(f, lo, hi, 1e-8));
        }
    }
    out
}

/// Global maximizer of `|m_n(p)|`, ties broken toward smaller `p`.
pub fn argmax_abs_moment(delta1: f64, delta2: f64, n: u32) -> f64 {
    let f = |p: f64| central_moment_two_point(delta1, delta2, p, n).abs();
    abs_moment_maximizers(delta1, delta2, n)
        .into_iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, p| {
            if f(p) > best.1 * (1.0 + 1e-12) {
                (p, f(p))
            } else {
                best
            }
        })
        .0
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let d = DelayDistribution::two_point(1.4, 0.4, 0.5).unwrap();
        assert!((central_moment(&d, 2) - 0.25).abs() < 1e-12);
        assert!((error_coefficient(&d, 2) - 0.125).abs() < 1e-12);
        let s = DelayDistribution::two_point(0.3, 0.7, 0.5).unwrap();
        assert!(central_moment(&s, 3).abs() < 1e-15);
        assert!(error_coefficient(&s, 3).abs() < 1e-15);
        assert!(central_moment(&d, 1).abs() < 1e-15);
        assert_eq!(central_moment(&d, 0), 1.0);
    }

    #[test]
    fn derivative_roots() {
        assert!(moment_derivative_p(1.4, 0.4, 2, 0.5).abs() < 1e-15);
        let p = 0.5 - (1.0f64 / 12.0).sqrt();
        assert!(moment_derivative_p(1.4, 0.4, 3, p).abs() < 1e-14);
        let h = 1e-5;
        let fd = (central_moment_two_point(1.0, 0.0, 0.3 + h, 4)
            - central_moment_two_point(1.0, 0.0, 0.3 - h, 4))
            / (2.0 * h);
        assert!((moment_derivative_p(1.0, 0.0, 4, 0.3) - fd).abs() < 1e-6);
    }

    #[test]
    fn extreme_point_table() {
        let e = extreme_points(2);
        assert_eq!(e.exact, Some(vec![0.5]));
        assert!((e.approx[0] - 1.0 / 3.0).abs() < 1e-15 && (e.approx[1] - 2.0 / 3.0).abs() < 1e-15);
        let e = extreme_points(3);
        let ex = e.exact.unwrap();
        assert!((ex[0] - 0.211325).abs() < 1e-6 && (ex[1] - 0.788675).abs() < 1e-6);
        assert_eq!(e.approx, [0.25, 0.75]);
        assert_eq!(extreme_points(9).approx, [0.1, 0.9]);
        assert_eq!(extreme_points(9).exact, None);
        assert_eq!(extreme_points(6).exact, Some(vec![0.5]));
        // every listed exact point is a root of the derivative
        for n in 2..=8 {
            if let Some(ps) = extreme_points(n).exact {
                for p in ps {
                    assert!(
                        moment_derivative_p(0.0, 1.0, n, p).abs() < 1e-12,
                        "n={n} p={p}"
                    );
                }
            }
        }
    }

    #[test]
    fn numeric_argmax() {
        assert!((argmax_abs_moment(1.4, 0.4, 2) - 0.5).abs() < 1e-6);
        let m = abs_moment_maximizers(1.4, 0.4, 3);
        assert_eq!(m.len(), 2);
        assert!((m[0] - 0.211325).abs() < 1e-6 && (m[1] - 0.788675).abs() < 1e-6);
        let m = abs_moment_maximizers(1.4, 0.4, 9);
        assert!(m.iter().any(|p| (p - 0.1).abs() < 0.03));
        assert!(m.iter().any(|p| (p - 0.9).abs() < 0.03));
    }

    #[test]
    fn curve_endpoints() {
        for n in 2..8 {
            let c = moment_curve(0.2, 1.1, n, 101);
            assert_eq!(c.samples.first().unwrap().1, 0.0);
            assert!(c.samples.last().unwrap().1.abs() < 1e-15);
            if n % 2 == 0 {
                assert!(c.samples.iter().all(|s| s.1 >= 0.0));
            }
        }
    }

    proptest! {
        #[test]
        fn closed_form_matches_sum(d1 in 0.01f64..3.0, d2 in 0.01f64..3.0, p in 0.0f64..1.0, n in 0u32..=10) {
            let dist = DelayDistribution::two_point(d1, d2, p).unwrap();
            let brute = central_moment(&dist, n);
            let closed = central_moment_two_point(d1, d2, p, n);
            prop_assert!((brute - closed).abs() < 1e-10);
        }

        #[test]
        fn derivative_matches_fd(d1 in 0.01f64..2.0, d2 in 0.01f64..2.0, p in 0.01f64..0.99, n in 1u32..=10) {
            let h = 1e-5;
            let fd = (central_moment_two_point(d1, d2, p + h, n) - central_moment_two_point(d1, d2, p - h, n)) / (2.0 * h);
            prop_assert!((moment_derivative_p(d1, d2, n, p) - fd).abs() < 1e-6);
        }

        #[test]
        fn gap_scaling(d1 in 0.01f64..2.0, gap in -1.0f64..1.0, p in 0.0f64..1.0, n in 1u32..=10) {
            let a = central_moment_two_point(d1, d1 + gap, p, n);
            let b = central_moment_two_point(d1, d1 + 2.0 * gap, p, n);
            prop_assert!((b - 2f64.powi(n as i32) * a).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}
