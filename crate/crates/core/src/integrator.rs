//! Fixed-step RK4 method of steps with cubic Hermite dense output.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::approx::{ApproxKind, TaylorCoeffs};
use crate::error::{IntegrateError, ModelError};
use crate::types::{DelayDistribution, LinearModel, QueueModel};

/// Constant value of each state component on `[-max delay, 0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistorySpec {
    values: Vec<f64>,
}

impl HistorySpec {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::Empty);
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParameter {
                name: "history",
                value: v,
                reason: "must be finite",
            });
        }
        Ok(Self { values })
    }

    pub fn constant(value: f64) -> Result<Self, ModelError> {
        Self::new(vec![value])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Default step `min(min delay / 20, 0.01)`, never below 1e-4.
pub fn default_step(min_delay: f64) -> f64 {
    (min_delay / 20.0).clamp(1e-4, 0.01)
}

/// Node values and derivatives on a uniform grid (the last step may be shorter).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    history: Vec<f64>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn node_value(&self, n: usize, i: usize) -> f64 {
        self.values[n * self.dim + i]
    }

    pub fn node_deriv(&self, n: usize, i: usize) -> f64 {
        self.derivs[n * self.dim + i]
    }

    /// Node values of component `i`.
    pub fn component(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|n| self.node_value(n, i)).collect()
    }

    fn interval(&self, t: f64) -> (usize, f64, f64) {
        let last = self.times.len() - 1;
        let k = ((t - self.t0) / self.h).floor();
        let k = if k < 0.0 {
            0
        } else {
            (k as usize).min(last.saturating_sub(1))
        };
        let w = self.times[k + 1] - self.times[k];
        (k, w, (t - self.times[k]) / w)
    }

    /// Dense value `u_i(t)`; the history for `t <= t0`.
    pub fn value(&self, t: f64, i: usize) -> f64 {
        if t <= self.t0 || self.times.len() < 2 {
            return if t <= self.t0 {
                self.history[i]
            } else {
                self.node_value(0, i)
            };
        }
        let (k, w, s) = self.interval(t);
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.node_value(k, i)
            + (s3 - 2.0 * s2 + s) * w * self.node_deriv(k, i)
            + (3.0 * s2 - 2.0 * s3) * self.node_value(k + 1, i)
            + (s3 - s2) * w * self.node_deriv(k + 1, i)
    }

    /// Finite-difference slope of the derivative samples at node `n`.
    fn deriv_slope(&self, n: usize, i: usize) -> f64 {
        let last = self.times.len() - 1;
        let (a, b) = if n == 0 {
            (0, 1)
        } else if n == last {
            (last - 1, last)
        } else {
            (n - 1, n + 1)
        };
        (self.node_deriv(b, i) - self.node_deriv(a, i)) / (self.times[b] - self.times[a])
    }

    /// Dense derivative from the Hermite interpolant of the derivative samples; 0 in the
    /// history.
    pub fn derivative(&self, t: f64, i: usize) -> f64 {
        if t <= self.t0 || self.times.len() < 2 {
            return 0.0;
        }
        let (k, w, s) = self.interval(t);
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.node_deriv(k, i)
            + (s3 - 2.0 * s2 + s) * w * self.deriv_slope(k, i)
            + (3.0 * s2 - 2.0 * s3) * self.node_deriv(k + 1, i)
            + (s3 - s2) * w * self.deriv_slope(k + 1, i)
    }

    /// Derivative of the interpolant used by [`Trajectory::derivative`].
    pub fn second_derivative(&self, t: f64, i: usize) -> f64 {
        if t <= self.t0 || self.times.len() < 2 {
            return 0.0;
        }
        let (k, w, s) = self.interval(t);
        let s2 = s * s;
        ((6.0 * s2 - 6.0 * s) * (self.node_deriv(k, i) - self.node_deriv(k + 1, i))) / w
            + (3.0 * s2 - 4.0 * s + 1.0) * self.deriv_slope(k, i)
            + (3.0 * s2 - 2.0 * s) * self.deriv_slope(k + 1, i)
    }

    /// `max |u_i|` over nodes with `a <= t <= b`.
    pub fn max_abs_between(&self, a: f64, b: f64, i: usize) -> f64 {
        self.times
            .iter()
            .enumerate()
            .filter(|(_, &t)| t >= a && t <= b)
            .map(|(n, _)| self.node_value(n, i).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,u` (one component) or `t,q_1,..,q_N`, every `stride`-th node.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        if self.dim == 1 {
            header.push("u".into());
        } else {
            header.extend((1..=self.dim).map(|i| format!("q_{i}")));
        }
        w.write_record(&header)?;
        let stride = stride.max(1);
        let last = self.len() - 1;
        for n in (0..self.len()).filter(|n| n % stride == 0 || *n == last) {
            let mut row = vec![self.times[n].to_string()];
            row.extend((0..self.dim).map(|i| self.node_value(n, i).to_string()));
            w.write_record(&row)?;
        }
        w.flush()
    }
}

/// Method of steps for `y' = rhs(t, y, past)` where `past` reads the stored solution.
fn run<F>(
    history: &[f64],
    t_end: f64,
    h: f64,
    min_delay: f64,
    mut rhs: F,
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(f64, &[f64], &Trajectory, &mut [f64]),
{
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(IntegrateError::InvalidHorizon(t_end));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(IntegrateError::InvalidStep(h));
    }
    if h > min_delay / 4.0 {
        return Err(IntegrateError::StepTooLarge { h, min_delay });
    }
    let dim = history.len();
    let full = (t_end / h + 1e-9).floor() as usize;
    let tail = t_end - full as f64 * h;
    let nodes = full + 1 + usize::from(tail > 1e-12 * h);
    let mut traj = Trajectory {
        t0: 0.0,
        t_end,
        h,
        dim,
        times: Vec::with_capacity(nodes),
        values: Vec::with_capacity(nodes * dim),
        derivs: Vec::with_capacity(nodes * dim),
        history: history.to_vec(),
    };
    traj.times.push(0.0);
    traj.values.extend_from_slice(history);

    let mut y = history.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
        vec![0.0; dim],
    );
    let mut tmp = vec![0.0; dim];
    for n in 0..nodes - 1 {
        let t = traj.times[n];
        let step = if n < full { h } else { t_end - t };
        rhs(t, &y, &traj, &mut k1);
        traj.derivs.extend_from_slice(&k1);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * step * k1[i];
        }
        rhs(t + 0.5 * step, &tmp, &traj, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + 0.5 * step * k2[i];
        }
        rhs(t + 0.5 * step, &tmp, &traj, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + step * k3[i];
        }
        let t_next = if n < full { (n + 1) as f64 * h } else { t_end };
        rhs(t_next, &tmp, &traj, &mut k4);
        for i in 0..dim {
            y[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::NonFiniteState(t_next));
        }
        traj.times.push(t_next);
        traj.values.extend_from_slice(&y);
    }
    let t = *traj.times.last().expect("at least one node");
    rhs(t, &y, &traj, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(IntegrateError::NonFiniteState(t));
    }
    traj.derivs.extend_from_slice(&k1);
    Ok(traj)
}

fn scalar_history(history: &HistorySpec) -> Result<f64, IntegrateError> {
    match history.values() {
        [v] => Ok(*v),
        other => Err(ModelError::HistoryLength {
            got: other.len(),
            expected: 1,
        }
        .into()),
    }
}

/// `u'(t) = alpha0 u(t) + sum_j C p_j u(t - delta_j)`.
pub fn integrate_multi_delay(
    model: &LinearModel,
    dist: &DelayDistribution,
    history: &HistorySpec,
    t_end: f64,
    h: f64,
) -> Result<Trajectory, IntegrateError> {
    let u0 = scalar_history(history)?;
    let terms: Vec<(f64, f64)> = dist.iter().map(|(d, p)| (d, model.c * p)).collect();
    let alpha0 = model.alpha0;
    run(&[u0], t_end, h, dist.min_delay(), |t, y, past, out| {
        let mut s = alpha0 * y[0];
        for &(d, a) in &terms {
            s += a * past.value(t - d, 0);
        }
        out[0] = s;
    })
}

/// `u' = alpha0 u + A0 u(t - d) + A1 u'(t - d) + A2 u''(t - d)` with the terms of `kind`.
pub fn integrate_approx(
    model: &LinearModel,
    coeffs: &TaylorCoeffs,
    kind: ApproxKind,
    history: &HistorySpec,
    t_end: f64,
    h: f64,
) -> Result<Trajectory, IntegrateError> {
    let u0 = scalar_history(history)?;
    let d = coeffs.delta_star;
    if !(d.is_finite() && d > 0.0) {
        return Err(ModelError::NonPositiveDelay(d).into());
    }
    let (a0, a1, a2) = match kind {
        ApproxKind::ConstantDelay => (model.c, 0.0, 0.0),
        ApproxKind::Neutral => (coeffs.a0, coeffs.a1, 0.0),
        ApproxKind::SecondDerivative { .. } => (coeffs.a0, coeffs.a1, coeffs.a2),
    };
    let alpha0 = model.alpha0;
    run(&[u0], t_end, h, d, |t, y, past, out| {
        let mut s = alpha0 * y[0];
        s += a0 * past.value(t - d, 0);
        if a1 != 0.0 {
            s += a1 * past.derivative(t - d, 0);
        }
        if a2 != 0.0 {
            s += a2 * past.second_derivative(t - d, 0);
        }
        out[0] = s;
    })
}

/// Multinomial-logit choice probabilities `exp(-theta s_i) / sum_j exp(-theta s_j)`.
///
/// The normalizing sum is taken over sorted weights so that permuting the scores permutes
/// the output exactly.
pub fn mnl_probabilities(scores: &[f64], theta: f64, out: &mut [f64]) {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (-theta * (s - lo)).exp();
    }
    let mut sorted = out.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// `q_i' = lambda P_i - mu q_i`, `P` the logit choice on `sum_k p_k q_i(t - delta_k)`.
pub fn integrate_fluid_mnl(
    q: &QueueModel,
    t_end: f64,
    h: f64,
) -> Result<Trajectory, IntegrateError> {
    let n = q.n;
    let terms: Vec<(f64, f64)> = q.dist.iter().collect();
    let mut scores = vec![0.0; n];
    let mut probs = vec![0.0; n];
    run(
        &q.history,
        t_end,
        h,
        q.dist.min_delay(),
        |t, y, past, out| {
            for (i, s) in scores.iter_mut().enumerate() {
                *s = terms.iter().map(|&(d, p)| p * past.value(t - d, i)).sum();
            }
            mnl_probabilities(&scores, q.theta, &mut probs);
            for i in 0..n {
                out[i] = q.lambda * probs[i] - q.mu * y[i];
            }
        },
    )
}
