//! Symmetric two-delay system versus the three-delay system with the same mean.
//!
//! `f2`, `f3` are the delay sums in the real part of the characteristic equation at
//! `r = a + ib`; `g3 = f3(a, 0)` bounds `f3` from above when `C < 0`.

use serde::Serialize;

use crate::error::ModelError;
use crate::spectral::classify_spectral;
use crate::types::{DelayDistribution, LinearModel, StabilityVerdict};

/// Two delays `delta1 < delta3` with the middle delay at their midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetricPair {
    delta1: f64,
    delta3: f64,
    p: f64,
}

impl SymmetricPair {
    pub fn new(delta1: f64, delta3: f64, p: f64) -> Result<Self, ModelError> {
        if !(delta1.is_finite() && delta1 > 0.0) {
            return Err(ModelError::NonPositiveDelay(delta1));
        }
        if !(delta3.is_finite() && delta3 > delta1) {
            return Err(ModelError::InvalidInterval {
                a: delta1,
                b: delta3,
            });
        }
        if !(0.0..=0.5).contains(&p) {
            return Err(ModelError::InvalidProbability(p));
        }
        Ok(Self { delta1, delta3, p })
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn delta3(&self) -> f64 {
        self.delta3
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.delta1 + self.delta3)
    }

    /// `delta1`, `delta3` with probability 1/2 each.
    pub fn two_delay(&self) -> DelayDistribution {
        DelayDistribution::new(vec![self.delta1, self.delta3], vec![0.5, 0.5]).expect("valid pair")
    }

    /// `delta1` w.p. `p`, midpoint w.p. `1 - 2p`, `delta3` w.p. `p`.
    pub fn three_delay(&self) -> DelayDistribution {
        DelayDistribution::new(
            vec![self.delta1, self.midpoint(), self.delta3],
            vec![self.p, 1.0 - 2.0 * self.p, self.p],
        )
        .expect("valid pair")
    }
}

/// `(e^{-a delta1} + e^{-a delta3}) / 2`.
pub fn f2(a: f64, pair: &SymmetricPair) -> f64 {
    0.5 * ((-a * pair.delta1).exp() + (-a * pair.delta3).exp())
}

/// `p e^{-a delta1} + p e^{-a delta3} + (1 - 2p) e^{-a m} cos(b m)`, `m` the midpoint.
pub fn f3(a: f64, b: f64, pair: &SymmetricPair) -> f64 {
    let m = pair.midpoint();
    pair.p * ((-a * pair.delta1).exp() + (-a * pair.delta3).exp())
        + (1.0 - 2.0 * pair.p) * (-a * m).exp() * (b * m).cos()
}

/// `f3(a, 0)`.
pub fn g3(a: f64, pair: &SymmetricPair) -> f64 {
    f3(a, 0.0, pair)
}

/// `f2(a) - g3(a)`, evaluated as `(1 - 2p) e^{-a m} 2 sinh^2(a h / 2)` with `h` the
/// half-gap so the sign is exact.
pub fn jensen_gap(a: f64, pair: &SymmetricPair) -> f64 {
    let half = 0.5 * (pair.delta3 - pair.delta1);
    let s = (0.5 * a * half).sinh();
    (1.0 - 2.0 * pair.p) * (-a * pair.midpoint()).exp() * 2.0 * s * s
}

/// Spectral verdicts of the two-delay and three-delay systems.
pub fn compare_stability(
    pair: &SymmetricPair,
    model: &LinearModel,
) -> (StabilityVerdict, StabilityVerdict) {
    (
        classify_spectral(model, &pair.two_delay()),
        classify_spectral(model, &pair.three_delay()),
    )
}
