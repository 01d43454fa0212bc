//! Shared domain types: delay distributions, the scalar linear model, expansion-point
//! rules, verdicts and the queueing model.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

const PROB_SUM_TOL: f64 = 1e-9;

/// Discrete random delay: `delays[k]` occurs with probability `probs[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayDistribution {
    delays: Vec<f64>,
    probs: Vec<f64>,
}

impl DelayDistribution {
    /// Validates and, if the sum is within 1e-9 of one, renormalizes.
    pub fn new(delays: Vec<f64>, probs: Vec<f64>) -> Result<Self, ModelError> {
        if delays.is_empty() || probs.is_empty() {
            return Err(ModelError::Empty);
        }
        if delays.len() != probs.len() {
            return Err(ModelError::LengthMismatch {
                delays: delays.len(),
                probs: probs.len(),
            });
        }
        if let Some(&d) = delays.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(ModelError::NonPositiveDelay(d));
        }
        if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ModelError::InvalidProbability(p));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(ModelError::ProbSumMismatch(sum));
        }
        let probs = if sum == 1.0 {
            probs
        } else {
            probs.into_iter().map(|p| p / sum).collect()
        };
        Ok(Self { delays, probs })
    }

    /// A single deterministic delay.
    pub fn single(delay: f64) -> Result<Self, ModelError> {
        Self::new(vec![delay], vec![1.0])
    }

    /// Two delays with `P(delta1) = p`.
    pub fn two_point(delta1: f64, delta2: f64, p: f64) -> Result<Self, ModelError> {
        Self::new(vec![delta1, delta2], vec![p, 1.0 - p])
    }

    /// Equal-weight discretization of the uniform law on `[a, b]` at the right endpoints
    /// `a + (b - a) k / m`, `k = 1..m`.
    pub fn discretize_uniform(a: f64, b: f64, m: usize) -> Result<Self, ModelError> {
        if !(a > 0.0 && b > a && b.is_finite()) {
            return Err(ModelError::InvalidInterval { a, b });
        }
        if m == 0 {
            return Err(ModelError::EmptyDiscretization);
        }
        let delays = (1..=m).map(|k| a + (b - a) * k as f64 / m as f64).collect();
        Self::new(delays, vec![1.0 / m as f64; m])
    }

    pub fn delays(&self) -> &[f64] {
        &self.delays
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// `(delay, probability)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.delays.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(d, p)| d * p).sum()
    }

    pub fn min_delay(&self) -> f64 {
        self.delays.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_delay(&self) -> f64 {
        self.delays.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest delay at which the CDF reaches 1/2.
    pub fn median(&self) -> f64 {
        let mut pairs: Vec<(f64, f64)> = self.iter().collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cum = 0.0;
        for &(d, p) in &pairs {
            cum += p;
            // tolerance so that e.g. three weights of 1/3 reach 1/2 at the middle delay
            if cum >= 0.5 - 1e-12 {
                return d;
            }
        }
        pairs[pairs.len() - 1].0
    }

    /// Expansion point selected by `rule`.
    pub fn delta_star(&self, rule: DeltaStarRule) -> Result<f64, ModelError> {
        match rule {
            DeltaStarRule::FirstDelay | DeltaStarRule::SecondDelay if self.len() < 2 => {
                Err(ModelError::RuleArityMismatch {
                    rule: rule.name(),
                    m: self.len(),
                })
            }
            DeltaStarRule::FirstDelay => Ok(self.delays[0]),
            DeltaStarRule::SecondDelay => Ok(self.delays[1]),
            DeltaStarRule::Midpoint => Ok(0.5 * (self.min_delay() + self.max_delay())),
            DeltaStarRule::Mean => Ok(self.mean()),
            DeltaStarRule::Median => Ok(self.median()),
            DeltaStarRule::Fixed(x) => {
                if x.is_finite() && x > 0.0 {
                    Ok(x)
                } else {
                    Err(ModelError::InvalidFixedDelay(x))
                }
            }
        }
    }
}

/// Free-function form of [`DelayDistribution::new`].
pub fn validate_distribution(
    delays: &[f64],
    probs: &[f64],
) -> Result<DelayDistribution, ModelError> {
    DelayDistribution::new(delays.to_vec(), probs.to_vec())
}

/// Free-function form of [`DelayDistribution::delta_star`].
pub fn delta_star(dist: &DelayDistribution, rule: DeltaStarRule) -> Result<f64, ModelError> {
    dist.delta_star(rule)
}

/// Free-function form of [`DelayDistribution::discretize_uniform`].
pub fn discretize_uniform(a: f64, b: f64, m: usize) -> Result<DelayDistribution, ModelError> {
    DelayDistribution::discretize_uniform(a, b, m)
}

/// `u'(t) = alpha0 u(t) + sum_j C p_j u(t - delta_j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub alpha0: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

impl LinearModel {
    pub fn new(alpha0: f64, c: f64) -> Result<Self, ModelError> {
        if !alpha0.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "alpha0",
                value: alpha0,
                reason: "must be finite",
            });
        }
        if !c.is_finite() || c == 0.0 {
            return Err(ModelError::InvalidParameter {
                name: "C",
                value: c,
                reason: "must be finite and nonzero",
            });
        }
        Ok(Self { alpha0, c })
    }

    /// Per-delay coefficients `C p_j`.
    pub fn alphas(&self, dist: &DelayDistribution) -> Vec<f64> {
        dist.probs().iter().map(|p| self.c * p).collect()
    }
}

/// Choice of the Taylor expansion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaStarRule {
    FirstDelay,
    SecondDelay,
    Midpoint,
    Mean,
    Median,
    Fixed(f64),
}

impl DeltaStarRule {
    pub fn name(&self) -> &'static str {
        match self {
            DeltaStarRule::FirstDelay => "first",
            DeltaStarRule::SecondDelay => "second",
            DeltaStarRule::Midpoint => "midpoint",
            DeltaStarRule::Mean => "mean",
            DeltaStarRule::Median => "median",
            DeltaStarRule::Fixed(_) => "fixed",
        }
    }
}

impl fmt::Display for DeltaStarRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeltaStarRule::Fixed(x) => write!(f, "fixed={x}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for DeltaStarRule {
    type Err = String;

    /// Accepts `first`, `second`, `midpoint`, `mean`, `median` and `fixed=<x>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "first" | "first_delay" | "delta1" => Ok(Self::FirstDelay),
            "second" | "second_delay" | "delta2" => Ok(Self::SecondDelay),
            "midpoint" => Ok(Self::Midpoint),
            "mean" => Ok(Self::Mean),
            "median" => Ok(Self::Median),
            _ => {
                let value = s
                    .strip_prefix("fixed=")
                    .or_else(|| s.strip_prefix("fixed:"))
                    .ok_or_else(|| format!("unknown delta* rule '{s}'"))?;
                value
                    .parse::<f64>()
                    .map(Self::Fixed)
                    .map_err(|e| format!("bad fixed value '{value}': {e}"))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RuleRepr {
    Name(String),
    Fixed { fixed: f64 },
}

impl Serialize for DeltaStarRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            DeltaStarRule::Fixed(fixed) => RuleRepr::Fixed { fixed },
            other => RuleRepr::Name(other.name().to_string()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DeltaStarRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RuleRepr::deserialize(d)? {
            RuleRepr::Fixed { fixed } => Ok(DeltaStarRule::Fixed(fixed)),
            RuleRepr::Name(name) => name.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityClass {
    Stable,
    Unstable,
    Inconclusive,
}

impl StabilityClass {
    /// CSV code: 0 stable, 1 unstable, 2 inconclusive.
    pub fn code(self) -> u8 {
        match self {
            StabilityClass::Stable => 0,
            StabilityClass::Unstable => 1,
            StabilityClass::Inconclusive => 2,
        }
    }
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StabilityClass::Stable => "Stable",
            StabilityClass::Unstable => "Unstable",
            StabilityClass::Inconclusive => "Inconclusive",
        })
    }
}

/// Class plus a method-specific number: growth ratio (integrator), rightmost real part
/// (spectral) or `delta* - delta_cr` (closed forms).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub class: StabilityClass,
    pub diagnostic: f64,
}

impl StabilityVerdict {
    pub fn stable(diagnostic: f64) -> Self {
        Self {
            class: StabilityClass::Stable,
            diagnostic,
        }
    }

    pub fn unstable(diagnostic: f64) -> Self {
        Self {
            class: StabilityClass::Unstable,
            diagnostic,
        }
    }

    pub fn inconclusive(diagnostic: f64) -> Self {
        Self {
            class: StabilityClass::Inconclusive,
            diagnostic,
        }
    }

    /// Two verdicts agree only if both are conclusive and equal.
    pub fn matches(&self, other: &StabilityVerdict) -> bool {
        self.class != StabilityClass::Inconclusive && self.class == other.class
    }
}

/// N symmetric queues joined by multinomial-logit choice on delayed queue lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueModel {
    pub n: usize,
    pub lambda: f64,
    pub mu: f64,
    pub theta: f64,
    pub dist: DelayDistribution,
    /// Constant history value of each queue on `[-max delay, 0]`.
    pub history: Vec<f64>,
}

impl QueueModel {
    /// `theta = 0` is accepted (choice becomes uniform) although then no linearization exists.
    pub fn new(
        n: usize,
        lambda: f64,
        mu: f64,
        theta: f64,
        dist: DelayDistribution,
        history: Vec<f64>,
    ) -> Result<Self, ModelError> {
        if n < 2 {
            return Err(ModelError::TooFewQueues(n));
        }
        positive("lambda", lambda)?;
        positive("mu", mu)?;
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must be finite and nonnegative",
            });
        }
        if history.len() != n {
            return Err(ModelError::HistoryLength {
                got: history.len(),
                expected: n,
            });
        }
        if let Some(&h) = history.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
            return Err(ModelError::InvalidParameter {
                name: "history",
                value: h,
                reason: "queue lengths must be finite and nonnegative",
            });
        }
        Ok(Self {
            n,
            lambda,
            mu,
            theta,
            dist,
            history,
        })
    }

    /// Same model started at the equilibrium.
    pub fn at_equilibrium(
        n: usize,
        lambda: f64,
        mu: f64,
        theta: f64,
        dist: DelayDistribution,
    ) -> Result<Self, ModelError> {
        let eq = lambda / (n as f64 * mu);
        Self::new(n, lambda, mu, theta, dist, vec![eq; n])
    }

    /// Common queue length `lambda / (N mu)` at the symmetric equilibrium.
    pub fn equilibrium(&self) -> f64 {
        self.lambda / (self.n as f64 * self.mu)
    }

    /// `alpha0 = -mu`, `C = -lambda theta / N`.
    pub fn linearized_model(&self) -> Result<LinearModel, ModelError> {
        LinearModel::new(-self.mu, -self.lambda * self.theta / self.n as f64)
    }
}

/// Free-function form of [`QueueModel::linearized_model`].
pub fn linearized_model(q: &QueueModel) -> Result<LinearModel, ModelError> {
    q.linearized_model()
}

fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}
