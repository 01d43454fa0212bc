//! Exact event-driven simulation of the scaled queueing system and its distance to the
//! fluid limit.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::IntegrateError;
use crate::integrator::{default_step, integrate_fluid_mnl, mnl_probabilities};
use crate::types::QueueModel;

const STREAM_ARRIVALS: u64 = 1;
const STREAM_CHOICE: u64 = 2;
const STREAM_DEPARTURES: u64 = 3;

/// Fluid comparison grid spacing.
pub const FLUID_GRID: f64 = 0.01;

/// Right-continuous step path of one queue, stored as integer counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueuePath {
    /// Time of each change; the first entry is 0 with the initial count.
    pub times: Vec<f64>,
    pub counts: Vec<u64>,
}

impl QueuePath {
    /// Count at time `t` (the initial count for `t < 0`).
    pub fn count_at(&self, t: f64) -> u64 {
        let idx = self.times.partition_point(|&s| s <= t);
        self.counts[idx.saturating_sub(1)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QueueEvent {
    pub time: f64,
    pub queue: usize,
    /// +1 arrival, -1 departure.
    pub change: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventLog {
    pub seed: u64,
    pub eta: u64,
    pub t_end: f64,
    pub events: Vec<QueueEvent>,
    pub paths: Vec<QueuePath>,
    pub arrivals: usize,
    pub departures: usize,
    /// Largest `|sum P_i - 1|` seen at an arrival.
    pub max_prob_sum_error: f64,
    /// Every delayed lookup read an event strictly earlier than the arrival it served.
    pub causal: bool,
}

impl EventLog {
    /// Scaled queue length `Q_i(t)`.
    pub fn value_at(&self, i: usize, t: f64) -> f64 {
        self.paths[i].count_at(t) as f64 / self.eta as f64
    }

    /// CSV `t,q_1,..,q_N` on a uniform grid.
    pub fn write_path_csv<W: Write>(&self, out: W, spacing: f64) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.paths.len()).map(|i| format!("q_{i}")));
        w.write_record(&header)?;
        for t in grid(self.t_end, spacing) {
            let mut row = vec![t.to_string()];
            row.extend((0..self.paths.len()).map(|i| self.value_at(i, t).to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn grid(t_end: f64, spacing: f64) -> Vec<f64> {
    let n = (t_end / spacing + 1e-9).floor() as usize;
    let mut ts: Vec<f64> = (0..=n).map(|k| k as f64 * spacing).collect();
    if t_end - ts[n] > 1e-12 {
        ts.push(t_end);
    }
    ts
}

/// Monotone reader of one queue path at a lag behind the current time.
struct LagCursor {
    queue: usize,
    lag: f64,
    weight: f64,
    idx: usize,
}

/// Integer starting counts `round(phi_i eta)`.
pub fn initial_counts(q: &QueueModel, eta: u64) -> Vec<u64> {
    q.history
        .iter()
        .map(|&phi| (phi * eta as f64).round() as u64)
        .collect()
}

/// Simulates the scaled system on `[0, t_end]`.
///
/// Arrivals form one Poisson stream of rate `lambda eta`; an arrival at `t` joins queue `i`
/// with the logit probability evaluated on `sum_k p_k Q_i(t - delta_k)`. Departures
/// happen at total rate `mu eta sum_i Q_i` and leave a queue chosen in proportion to its
/// length; the departure clock is redrawn after every event.
pub fn simulate_scaled_queue(q: &QueueModel, eta: u64, t_end: f64, seed: u64) -> EventLog {
    let eta = eta.max(1);
    let n = q.n;
    let mut counts = initial_counts(q, eta);
    let mut paths: Vec<QueuePath> = counts
        .iter()
        .map(|&c| QueuePath {
            times: vec![0.0],
            counts: vec![c],
        })
        .collect();

    let stream = |s: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(s);
        rng
    };
    let mut arrival_rng = stream(STREAM_ARRIVALS);
    let mut choice_rng = stream(STREAM_CHOICE);
    let mut departure_rng = stream(STREAM_DEPARTURES);
    let arrival_clock = Exp::new(q.lambda * eta as f64).expect("positive arrival rate");

    let mut cursors: Vec<LagCursor> = (0..n)
        .flat_map(|i| {
            q.dist.iter().map(move |(lag, weight)| LagCursor {
                queue: i,
                lag,
                weight,
                idx: 0,
            })
        })
        .collect();

    let mut events = Vec::new();
    let (mut arrivals, mut departures) = (0, 0);
    let mut max_prob_sum_error: f64 = 0.0;
    let mut causal = true;
    let mut scores = vec![0.0; n];
    let mut probs = vec![0.0; n];

    let mut t = 0.0;
    let mut next_arrival = arrival_clock.sample(&mut arrival_rng);
    loop {
        let total: u64 = counts.iter().sum();
        let next_departure = if total > 0 {
            t + Exp::new(q.mu * total as f64)
                .expect("positive rate")
                .sample(&mut departure_rng)
        } else {
            f64::INFINITY
        };
        let next = next_arrival.min(next_departure);
        if next > t_end {
            break;
        }
        t = next;
        let (queue, change) = if next_arrival <= next_departure {
            scores.iter_mut().for_each(|s| *s = 0.0);
            for c in cursors.iter_mut() {
                let path = &paths[c.queue];
                let s = t - c.lag;
                while c.idx + 1 < path.times.len() && path.times[c.idx + 1] <= s {
                    c.idx += 1;
                }
                if c.idx > 0 && path.times[c.idx] >= t {
                    causal = false;
                }
                scores[c.queue] += c.weight * path.counts[c.idx] as f64 / eta as f64;
            }
            mnl_probabilities(&scores, q.theta, &mut probs);
            max_prob_sum_error = max_prob_sum_error.max((probs.iter().sum::<f64>() - 1.0).abs());
            let u: f64 = choice_rng.random();
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            next_arrival = t + arrival_clock.sample(&mut arrival_rng);
            arrivals += 1;
            (pick, 1i8)
        } else {
            let mut target = departure_rng.random_range(0..total);
            let mut pick = 0;
            for (i, &c) in counts.iter().enumerate() {
                if target < c {
                    pick = i;
                    break;
                }
                target -= c;
            }
            departures += 1;
            (pick, -1i8)
        };
        if change > 0 {
            counts[queue] += 1;
        } else {
            counts[queue] -= 1;
        }
        paths[queue].times.push(t);
        paths[queue].counts.push(counts[queue]);
        events.push(QueueEvent {
            time: t,
            queue,
            change,
        });
    }
    EventLog {
        seed,
        eta,
        t_end,
        events,
        paths,
        arrivals,
        departures,
        max_prob_sum_error,
        causal,
    }
}

/// `sup_t max_i |Q_i(t) - q_i(t)|` over a 0.01-spaced grid of `[0, t_end]`.
pub fn fluid_error(q: &QueueModel, eta: u64, t_end: f64, seed: u64) -> Result<f64, IntegrateError> {
    let start: Vec<f64> = initial_counts(q, eta.max(1))
        .iter()
        .map(|&c| c as f64 / eta.max(1) as f64)
        .collect();
    if t_end == 0.0 {
        return Ok(start
            .iter()
            .zip(&q.history)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max));
    }
    let log = simulate_scaled_queue(q, eta, t_end, seed);
    let fluid = integrate_fluid_mnl(q, t_end, default_step(q.dist.min_delay()))?;
    Ok(grid(t_end, FLUID_GRID)
        .into_iter()
        .map(|t| {
            (0..q.n)
                .map(|i| (log.value_at(i, t) - fluid.value(t, i)).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

/// [`fluid_error`] for each seed, in parallel.
pub fn fluid_errors(
    q: &QueueModel,
    eta: u64,
    t_end: f64,
    seeds: &[u64],
) -> Result<Vec<f64>, IntegrateError> {
    seeds
        .par_iter()
        .map(|&s| fluid_error(q, eta, t_end, s))
        .collect()
}

/// Median of a non-empty sample.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::DelayDistribution;

    fn model(theta: f64, history: Vec<f64>) -> QueueModel {
        let d = DelayDistribution::two_point(0.3, 0.7, 0.5).unwrap();
        QueueModel::new(2, 2.0, 1.0, theta, d, history).unwrap()
    }

    #[test]
    fn deterministic_per_seed() {
        let q = model(5.0, vec![0.6, 1.4]);
        let a = simulate_scaled_queue(&q, 50, 5.0, 7);
        let b = simulate_scaled_queue(&q, 50, 5.0, 7);
        assert_eq!(a, b);
        let c = simulate_scaled_queue(&q, 50, 5.0, 8);
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn event_bookkeeping() {
        let q = model(5.0, vec![0.6, 1.4]);
        let log = simulate_scaled_queue(&q, 40, 5.0, 3);
        assert_eq!(log.events.len(), log.arrivals + log.departures);
        assert!(log.causal);
        assert!(log.max_prob_sum_error < 1e-12);
        for path in &log.paths {
            assert!(path.times.windows(2).all(|w| w[0] <= w[1]));
            for w in path.counts.windows(2) {
                assert_eq!((w[1] as i64 - w[0] as i64).abs(), 1);
            }
        }
        assert_eq!(log.value_at(0, -1.0), 0.6);
        assert_eq!(log.value_at(1, 0.0), 1.4);
    }

    #[test]
    fn quiet_system_only_sees_arrivals() {
        let d = DelayDistribution::single(0.5).unwrap();
        let q = QueueModel::new(2, 1e-3, 1.0, 1.0, d, vec![0.0, 0.0]).unwrap();
        let log = simulate_scaled_queue(&q, 1, 50.0, 11);
        // nothing to serve until someone arrives
        if let Some(first) = log.events.first() {
            assert_eq!(first.change, 1);
        }
        assert_eq!(log.events.len(), log.arrivals + log.departures);
        assert!(log.departures <= log.arrivals);
    }

    #[test]
    fn tiny_delays_and_sharp_choice() {
        let d = DelayDistribution::two_point(1e-6, 1e-6, 0.5).unwrap();
        let q = QueueModel::new(3, 3.0, 1.0, 50.0, d, vec![1.0, 0.5, 1.5]).unwrap();
        let log = simulate_scaled_queue(&q, 100, 2.0, 5);
        assert!(log.arrivals > 0);
        assert!(log.max_prob_sum_error < 1e-12);
        assert!(log.causal);
    }

    #[test]
    fn uniform_choice_equilibrium_mean() {
        let q = model(0.0, vec![1.0, 1.0]);
        let (eta, t_end) = (200, 20.0);
        let log = simulate_scaled_queue(&q, eta, t_end, 2024);
        for i in 0..2 {
            let samples: Vec<f64> = grid(t_end, 0.05)
                .into_iter()
                .filter(|&t| t >= t_end / 2.0)
                .map(|t| log.value_at(i, t))
                .collect();
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            // stationary M/M/inf count is Poisson(eta); autocorrelation time 1/mu
            let se = (1.0 / eta as f64).sqrt() / (t_end / 2.0 / 2.0).sqrt();
            assert!(
                (mean - q.equilibrium()).abs() < 3.0 * se,
                "queue {i}: {mean} vs 1 (se {se})"
            );
        }
    }

    #[test]
    fn zero_horizon() {
        let q = model(5.0, vec![1.0, 2.0]);
        assert_eq!(fluid_error(&q, 1, 0.0, 0).unwrap(), 0.0);
    }

    #[test]
    fn more_customers_track_the_fluid_better() {
        let q = model(5.0, vec![0.6, 1.4]);
        let seeds: Vec<u64> = (0..6).collect();
        let small = median(&fluid_errors(&q, 50, 10.0, &seeds).unwrap());
        let large = median(&fluid_errors(&q, 800, 10.0, &seeds).unwrap());
        assert!(large < small, "{large} vs {small}");
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
