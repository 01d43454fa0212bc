//! Complex Lambert W on arbitrary branches.

use std::f64::consts::{E, PI};

use num_complex::Complex64;

use crate::error::SpectralError;

const MAX_ITER: usize = 50;
const TOL: f64 = 1e-12;

/// Branch `k` of the inverse of `w -> w e^w`.
///
/// Halley iteration from a branch-appropriate starting point. The result satisfies
/// `|w e^w - z| < 1e-12 max(1, |z|)`. At the branch point `z = -1/e` the branches 0 and
/// -1 both return `-1`.
pub fn lambert_w(k: i32, z: Complex64) -> Result<Complex64, SpectralError> {
    if z == Complex64::new(0.0, 0.0) {
        return if k == 0 {
            Ok(z)
        } else {
            Err(SpectralError::BranchAtZero(k))
        };
    }
    let bp = z + 1.0 / E;
    if (k == 0 || k == -1) && bp.norm() < 1e-15 {
        return Ok(Complex64::new(-1.0, 0.0));
    }
    let scale = z.norm().max(1.0);
    let real_lower = k == -1 && z.im == 0.0 && z.re < 0.0 && z.re >= -1.0 / E;
    for guess in initial_guesses(k, z, real_lower) {
        if let Some(w) = halley(z, guess, scale) {
            if real_lower || on_branch(k, z, w) {
                return Ok(w);
            }
        }
    }
    Err(SpectralError::NoConvergence {
        branch: k,
        re: z.re,
        im: z.im,
    })
}

/// Real-argument convenience wrapper.
pub fn lambert_w_real(k: i32, x: f64) -> Result<Complex64, SpectralError> {
    lambert_w(k, Complex64::new(x, 0.0))
}

fn initial_guesses(k: i32, z: Complex64, real_lower: bool) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(4);
    let near_bp = (z + 1.0 / E).norm() < 0.3;
    let p = (2.0 * (E * z + 1.0)).sqrt();
    let series = |p: Complex64| -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    let l1 = z.ln() + Complex64::new(0.0, 2.0 * PI * k as f64);
    let asymptotic = l1 - l1.ln();
    if real_lower {
        if near_bp {
            out.push(series(-p));
        }
        let l = (-z.re).ln();
        out.push(Complex64::new(l - (-l).ln(), 0.0));
        return out;
    }
    match k {
        0 => {
            if near_bp {
                out.push(series(p));
            }
            if z.re > -1.0 && z.re < 1.5 && z.im.abs() < 1.0 && -2.5 * z.im.abs() - 0.2 < z.re {
                out.push(z * (3.0 + 6.0 * z + z * z) / (3.0 + 9.0 * z + 5.0 * z * z));
            }
            out.push(asymptotic);
            out.push((1.0 + z).ln());
        }
        -1 | 1 => {
            out.push(asymptotic);
            if near_bp {
                out.push(series(-p));
                out.push(series(p));
            }
        }
        _ => out.push(asymptotic),
    }
    out
}

fn halley(z: Complex64, mut w: Complex64, scale: f64) -> Option<Complex64> {
    for _ in 0..MAX_ITER {
        if !(w.re.is_finite() && w.im.is_finite()) {
            return None;
        }
        let ew = w.exp();
        let f = w * ew - z;
        if f.norm() < TOL * scale {
            return Some(w);
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom.norm() == 0.0 {
            return None;
        }
        w -= f / denom;
    }
    let f = w * w.exp() - z;
    (f.norm() < TOL * scale).then_some(w)
}

/// Unwinding check `w + ln w = ln z + 2 pi i k`.
fn on_branch(k: i32, z: Complex64, w: Complex64) -> bool {
    if (w + 1.0).norm() < 1e-6 {
        // both branches touch at the branch point
        return k == 0 || k == -1 || k == 1;
    }
    let d = w + w.ln() - z.ln();
    (d.im / (2.0 * PI)).round() as i32 == k && d.re.abs() < 1e-6 * (1.0 + w.norm())
}
