//! Stability maps over delay space and accuracy scoring of the approximations.

use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{classify_by_approx, ApproxKind, CosineForm, OmegaRoot};
use crate::error::{IntegrateError, ModelError, SweepError};
use crate::integrator::{default_step, integrate_multi_delay, HistorySpec};
use crate::spectral::classify_spectral;
use crate::types::{
    DelayDistribution, DeltaStarRule, LinearModel, StabilityClass, StabilityVerdict,
};

/// Uniform lattice (endpoints included) over a 2- or 3-dimensional box of delays.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    lo: Vec<f64>,
    hi: Vec<f64>,
    resolution: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, resolution: Vec<usize>) -> Result<Self, SweepError> {
        let dims = lo.len();
        if !(dims == 2 || dims == 3) || hi.len() != dims || resolution.len() != dims {
            return Err(SweepError::InvalidGrid(format!(
                "need 2 or 3 dimensions with matching bounds, got lo {} hi {} resolution {}",
                lo.len(),
                hi.len(),
                resolution.len()
            )));
        }
        for d in 0..dims {
            if !(lo[d].is_finite() && lo[d] > 0.0) {
                return Err(SweepError::InvalidGrid(format!(
                    "lower bound {} must be > 0",
                    lo[d]
                )));
            }
            if !(hi[d].is_finite() && hi[d] > lo[d]) {
                return Err(SweepError::InvalidGrid(format!(
                    "upper bound {} must exceed lower bound {}",
                    hi[d], lo[d]
                )));
            }
            if resolution[d] < 2 {
                return Err(SweepError::InvalidGrid(format!(
                    "resolution {} must be at least 2",
                    resolution[d]
                )));
            }
        }
        Ok(Self { lo, hi, resolution })
    }

    /// `n x n` lattice on `[lo, hi]^2`.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self, SweepError> {
        Self::new(vec![lo; 2], vec![hi; 2], vec![n; 2])
    }

    /// `n x n x n` lattice on `[lo, hi]^3`.
    pub fn cube(lo: f64, hi: f64, n: usize) -> Result<Self, SweepError> {
        Self::new(vec![lo; 3], vec![hi; 3], vec![n; 3])
    }

    /// 100 x 100 on `[0.01, 1]^2`.
    pub fn unit_square() -> Self {
        Self::square(0.01, 1.0, 100).expect("valid default grid")
    }

    /// 20^3 on `[0.05, 1]^3`.
    pub fn unit_cube() -> Self {
        Self::cube(0.05, 1.0, 20).expect("valid default grid")
    }

    pub fn dims(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `i`-th lattice value along dimension `d`.
    pub fn axis_value(&self, d: usize, i: usize) -> f64 {
        let n = self.resolution[d];
        if i + 1 == n {
            self.hi[d]
        } else {
            self.lo[d] + (self.hi[d] - self.lo[d]) * i as f64 / (n - 1) as f64
        }
    }

    /// Point at flat `index`, the first coordinate varying fastest.
    pub fn point(&self, index: usize) -> Vec<f64> {
        let mut rest = index;
        (0..self.dims())
            .map(|d| {
                let i = rest % self.resolution[d];
                rest /= self.resolution[d];
                self.axis_value(d, i)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum GroundTruthMethod {
    Integrator,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Classifier {
    GroundTruth(GroundTruthMethod),
    Approx {
        kind: ApproxKind,
        rule: DeltaStarRule,
    },
}

impl Classifier {
    pub fn label(&self) -> String {
        match self {
            Classifier::GroundTruth(GroundTruthMethod::Integrator) => {
                "ground-truth-integrator".into()
            }
            Classifier::GroundTruth(GroundTruthMethod::Spectral) => "ground-truth-spectral".into(),
            Classifier::Approx { kind, rule } => format!("{kind}/{rule}"),
        }
    }
}

/// Verdicts over a grid, in [`GridSpec::point`] order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityMap {
    pub grid: GridSpec,
    pub probs: Vec<f64>,
    pub model: LinearModel,
    pub classifier: Classifier,
    pub verdicts: Vec<StabilityVerdict>,
}

impl StabilityMap {
    pub fn count(&self, class: StabilityClass) -> usize {
        self.verdicts.iter().filter(|v| v.class == class).count()
    }
}

/// Decay/growth verdict from a direct simulation with history 1.
///
/// Compares `max |u|` over the last quarter of `[0, T]` with the third quarter,
/// `T = max(50, 30 max delay)`.
pub fn integrator_verdict(model: &LinearModel, dist: &DelayDistribution) -> StabilityVerdict {
    let t_end = (30.0 * dist.max_delay()).max(50.0);
    let h = default_step(dist.min_delay());
    let history = HistorySpec::constant(1.0).expect("finite history");
    match integrate_multi_delay(model, dist, &history, t_end, h) {
        Ok(traj) => {
            let third = traj.max_abs_between(0.5 * t_end, 0.75 * t_end, 0);
            let fourth = traj.max_abs_between(0.75 * t_end, t_end, 0);
            if third == 0.0 {
                return StabilityVerdict::stable(0.0);
            }
            let ratio = fourth / third;
            if ratio < 0.95 {
                StabilityVerdict::stable(ratio)
            } else if ratio > 1.05 {
                StabilityVerdict::unstable(ratio)
            } else {
                StabilityVerdict::inconclusive(ratio)
            }
        }
        Err(IntegrateError::NonFiniteState(_)) => StabilityVerdict::unstable(f64::INFINITY),
        Err(_) => StabilityVerdict::inconclusive(f64::NAN),
    }
}

/// Verdict of the multi-delay equation at one point of delay space.
pub fn ground_truth_classify(
    model: &LinearModel,
    delays: &[f64],
    probs: &[f64],
    method: GroundTruthMethod,
) -> Result<StabilityVerdict, ModelError> {
    let dist = DelayDistribution::new(delays.to_vec(), probs.to_vec())?;
    Ok(match method {
        GroundTruthMethod::Integrator => integrator_verdict(model, &dist),
        GroundTruthMethod::Spectral => classify_spectral(model, &dist),
    })
}

fn classify_point(
    model: &LinearModel,
    dist: &DelayDistribution,
    classifier: Classifier,
) -> StabilityVerdict {
    match classifier {
        Classifier::GroundTruth(GroundTruthMethod::Integrator) => integrator_verdict(model, dist),
        Classifier::GroundTruth(GroundTruthMethod::Spectral) => classify_spectral(model, dist),
        Classifier::Approx { kind, rule } => classify_by_approx(model, dist, rule, kind)
            .unwrap_or_else(|_| StabilityVerdict::inconclusive(f64::NAN)),
    }
}

/// Classifies every grid point in parallel. Per-point failures become Inconclusive.
pub fn run_sweep(
    model: &LinearModel,
    probs: &[f64],
    grid: &GridSpec,
    classifier: Classifier,
) -> Result<StabilityMap, SweepError> {
    if probs.len() != grid.dims() {
        return Err(SweepError::DimensionMismatch {
            probs: probs.len(),
            dims: grid.dims(),
        });
    }
    // validates the probabilities once, with representative delays
    let probs = DelayDistribution::new(grid.lo.clone(), probs.to_vec())?
        .probs()
        .to_vec();
    let verdicts = (0..grid.len())
        .into_par_iter()
        .map(
            |i| match DelayDistribution::new(grid.point(i), probs.clone()) {
                Ok(dist) => classify_point(model, &dist, classifier),
                Err(_) => StabilityVerdict::inconclusive(f64::NAN),
            },
        )
        .collect();
    Ok(StabilityMap {
        grid: grid.clone(),
        probs,
        model: *model,
        classifier,
        verdicts,
    })
}

/// Percentage of points with the same conclusive class.
pub fn accuracy(a: &StabilityMap, b: &StabilityMap) -> Result<f64, SweepError> {
    if a.grid != b.grid || a.verdicts.len() != b.verdicts.len() {
        return Err(SweepError::GridMismatch);
    }
    let same = a
        .verdicts
        .iter()
        .zip(&b.verdicts)
        .filter(|(x, y)| x.matches(y))
        .count();
    Ok(100.0 * same as f64 / a.verdicts.len() as f64)
}

/// One cell of an accuracy table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyCell {
    pub probs: Vec<f64>,
    pub kind: ApproxKind,
    pub rule: DeltaStarRule,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyTable {
    pub columns: Vec<(ApproxKind, DeltaStarRule)>,
    pub cells: Vec<AccuracyCell>,
    /// Mean accuracy of each column over all probability vectors.
    pub averages: Vec<f64>,
}

impl AccuracyTable {
    pub fn cell(&self, probs: &[f64], kind: ApproxKind, rule: DeltaStarRule) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.kind == kind && c.rule == rule && c.probs == probs)
            .map(|c| c.accuracy)
    }

    /// One row per probability vector, one column per (kind, rule).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let dims = self.cells.first().map_or(2, |c| c.probs.len());
        let mut header: Vec<String> = (1..dims).map(|i| format!("p{i}")).collect();
        if dims == 2 {
            header = vec!["p".into()];
        }
        header.extend(self.columns.iter().map(|(k, r)| format!("{k}/{r}")));
        w.write_record(&header)?;
        let mut seen: Vec<&Vec<f64>> = Vec::new();
        for c in &self.cells {
            if !seen.contains(&&c.probs) {
                seen.push(&c.probs);
            }
        }
        for probs in seen {
            let mut row: Vec<String> = probs[..probs.len() - 1]
                .iter()
                .map(|p| p.to_string())
                .collect();
            for (k, r) in &self.columns {
                row.push(
                    self.cell(probs, *k, *r)
                        .map_or(String::new(), |a| format!("{a:.2}")),
                );
            }
            w.write_record(&row)?;
        }
        let mut avg: Vec<String> = vec!["average".into()];
        avg.extend(std::iter::repeat_n(String::new(), dims.saturating_sub(2)));
        avg.extend(self.averages.iter().map(|a| format!("{a:.2}")));
        w.write_record(&avg)?;
        w.flush()?;
        Ok(())
    }
}

/// Accuracy of each (kind, rule) column against the spectral ground truth for every
/// probability vector.
pub fn accuracy_table(
    model: &LinearModel,
    prob_sets: &[Vec<f64>],
    columns: &[(ApproxKind, DeltaStarRule)],
    grid: &GridSpec,
) -> Result<AccuracyTable, SweepError> {
    let mut cells = Vec::new();
    for probs in prob_sets {
        let truth = run_sweep(
            model,
            probs,
            grid,
            Classifier::GroundTruth(GroundTruthMethod::Spectral),
        )?;
        for &(kind, rule) in columns {
            let approx = run_sweep(model, probs, grid, Classifier::Approx { kind, rule })?;
            cells.push(AccuracyCell {
                probs: probs.clone(),
                kind,
                rule,
                accuracy: accuracy(&approx, &truth)?,
            });
        }
    }
    let averages = columns
        .iter()
        .map(|&(k, r)| {
            let v: Vec<f64> = cells
                .iter()
                .filter(|c| c.kind == k && c.rule == r)
                .map(|c| c.accuracy)
                .collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        })
        .collect();
    Ok(AccuracyTable {
        columns: columns.to_vec(),
        cells,
        averages,
    })
}

fn coordinate_header(dims: usize) -> Vec<String> {
    (1..=dims).map(|i| format!("delta{i}")).collect()
}

/// `delta1,delta2[,delta3],class,diagnostic`.
pub fn write_map_csv<W: Write>(map: &StabilityMap, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = coordinate_header(map.grid.dims());
    header.extend(["class".into(), "diagnostic".into()]);
    w.write_record(&header)?;
    for (i, v) in map.verdicts.iter().enumerate() {
        let mut row: Vec<String> = map.grid.point(i).iter().map(|x| x.to_string()).collect();
        row.push(v.class.code().to_string());
        row.push(v.diagnostic.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Map CSV of `approx` with the reference class and a `match` flag appended.
pub fn write_comparison_csv<W: Write>(
    approx: &StabilityMap,
    reference: &StabilityMap,
    out: W,
) -> Result<(), SweepError> {
    if approx.grid != reference.grid {
        return Err(SweepError::GridMismatch);
    }
    let io = |e: csv::Error| SweepError::InvalidGrid(format!("write failed: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let mut header = coordinate_header(approx.grid.dims());
    header.extend(["class", "diagnostic", "reference_class", "match"].map(String::from));
    w.write_record(&header).map_err(io)?;
    for (i, (a, r)) in approx.verdicts.iter().zip(&reference.verdicts).enumerate() {
        let mut row: Vec<String> = approx.grid.point(i).iter().map(|x| x.to_string()).collect();
        row.push(a.class.code().to_string());
        row.push(a.diagnostic.to_string());
        row.push(r.class.code().to_string());
        row.push(u8::from(a.matches(r)).to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush()
        .map_err(|e| SweepError::InvalidGrid(format!("write failed: {e}")))?;
    Ok(())
}

const GREEN: &str = "#2ca02c";
const RED: &str = "#d62728";
const YELLOW: &str = "#f2c500";
const BLUE: &str = "#1f77b4";
const GRAY: &str = "#999999";

fn point_color(v: &StabilityVerdict, reference: Option<&StabilityVerdict>) -> &'static str {
    use StabilityClass::*;
    match (v.class, reference.map(|r| r.class)) {
        (Stable, None) | (Stable, Some(Stable)) => GREEN,
        (Unstable, None) | (Unstable, Some(Unstable)) => RED,
        (Unstable, Some(Stable)) => YELLOW,
        (Stable, Some(Unstable)) => BLUE,
        _ => GRAY,
    }
}

/// Scatterplot of a 2-D map. With a reference: green both stable, red both unstable,
/// yellow only the map unstable, blue only the reference unstable, gray inconclusive.
pub fn render_svg(
    map: &StabilityMap,
    reference: Option<&StabilityMap>,
) -> Result<String, SweepError> {
    if map.grid.dims() != 2 {
        return Err(SweepError::InvalidGrid(
            "SVG output needs a 2-D grid".into(),
        ));
    }
    if let Some(r) = reference {
        if r.grid != map.grid {
            return Err(SweepError::GridMismatch);
        }
    }
    let (size, margin) = (500.0, 40.0);
    let g = &map.grid;
    let (nx, ny) = (g.resolution[0], g.resolution[1]);
    let (cw, ch) = (size / nx as f64, size / ny as f64);
    let mut s = String::new();
    let total = size + 2.0 * margin;
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    for (i, v) in map.verdicts.iter().enumerate() {
        let (ix, iy) = (i % nx, i / nx);
        let x = margin + ix as f64 * cw;
        let y = margin + size - (iy + 1) as f64 * ch;
        let color = point_color(v, reference.map(|r| &r.verdicts[i]));
        writeln!(
            s,
            r#"<rect x="{x:.3}" y="{y:.3}" width="{cw:.3}" height="{ch:.3}" fill="{color}"/>"#
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<rect x="{margin}" y="{margin}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    )
    .unwrap();
    let label_y = margin + size + 25.0;
    writeln!(
        s,
        r#"<text x="{}" y="{label_y}" font-size="14" text-anchor="middle">delta1 [{}, {}]</text>"#,
        margin + size / 2.0,
        g.lo[0],
        g.hi[0]
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="15" y="{}" font-size="14" text-anchor="middle" transform="rotate(-90 15 {})">delta2 [{}, {}]</text>"#,
        margin + size / 2.0,
        margin + size / 2.0,
        g.lo[1],
        g.hi[1]
    )
    .unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

/// Outcome of comparing the integrator and spectral verdicts at random points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub sampled: usize,
    /// Points within `band / 2` of a verdict change, skipped.
    pub excluded: usize,
    pub agreed: usize,
    pub percent: f64,
}

/// Integrator vs spectral agreement at `n` uniform random 2-D points of `[lo, hi]^2`.
///
/// A point is excluded when the spectral verdict differs anywhere on a circle of radius
/// `band / 2` around it (16 probes), i.e. it lies in the band around the boundary.
pub fn oracle_agreement(
    model: &LinearModel,
    probs: &[f64],
    lo: f64,
    hi: f64,
    n: usize,
    band: f64,
    seed: u64,
) -> Result<AgreementReport, SweepError> {
    let probs = DelayDistribution::new(vec![lo, lo], probs.to_vec())?
        .probs()
        .to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.random_range(lo..=hi), rng.random_range(lo..=hi)))
        .collect();
    let spectral = |a: f64, b: f64| {
        DelayDistribution::new(vec![a, b], probs.clone())
            .map(|d| classify_spectral(model, &d))
            .unwrap_or_else(|_| StabilityVerdict::inconclusive(f64::NAN))
    };
    let outcomes: Vec<Option<bool>> = points
        .par_iter()
        .map(|&(a, b)| {
            let centre = spectral(a, b);
            let radius = 0.5 * band;
            let near_boundary = centre.class == StabilityClass::Inconclusive
                || (0..16).any(|k| {
                    let phi = k as f64 * std::f64::consts::PI / 8.0;
                    let (x, y) = (a + radius * phi.cos(), b + radius * phi.sin());
                    if x <= 0.0 || y <= 0.0 {
                        return false;
                    }
                    spectral(x, y).class != centre.class
                });
            if near_boundary {
                return None;
            }
            let dist = DelayDistribution::new(vec![a, b], probs.clone()).ok()?;
            Some(integrator_verdict(model, &dist).class == centre.class)
        })
        .collect();
    let excluded = outcomes.iter().filter(|o| o.is_none()).count();
    let agreed = outcomes.iter().filter(|o| **o == Some(true)).count();
    let considered = n - excluded;
    Ok(AgreementReport {
        sampled: n,
        excluded,
        agreed,
        percent: if considered == 0 {
            100.0
        } else {
            100.0 * agreed as f64 / considered as f64
        },
    })
}

/// `p` values of the two-delay accuracy tables.
pub const TABLE_P_GRID: [f64; 11] = [0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99];

/// Probability vectors, (kind, rule) columns and grid.
pub type TableLayout = (Vec<Vec<f64>>, Vec<(ApproxKind, DeltaStarRule)>, GridSpec);

/// Probability vectors, columns and grid behind one of the published accuracy tables
/// (1 constant, 2 neutral, 3 second derivative, 4 mean comparison, 5 and 6 three delays).
/// `second` chooses the cosine form used for second-derivative columns.
pub fn table_layout(which: u8, second: CosineForm) -> Result<TableLayout, SweepError> {
    use DeltaStarRule::*;
    let second_kind = ApproxKind::SecondDerivative {
        root: OmegaRoot::Negative,
        form: second,
    };
    let four_rules = |kind| {
        [FirstDelay, SecondDelay, Midpoint, Mean]
            .map(|r| (kind, r))
            .to_vec()
    };
    let two: Vec<Vec<f64>> = TABLE_P_GRID.iter().map(|&p| vec![p, 1.0 - p]).collect();
    let three: Vec<Vec<f64>> = (1..=8)
        .flat_map(|i| (1..=9 - i).map(move |j| (i, j)))
        .map(|(i, j)| {
            let (p1, p2) = (i as f64 / 10.0, j as f64 / 10.0);
            vec![p1, p2, (10 - i - j) as f64 / 10.0]
        })
        .collect();
    Ok(match which {
        1 => (
            two,
            four_rules(ApproxKind::ConstantDelay),
            GridSpec::unit_square(),
        ),
        2 => (
            two,
            four_rules(ApproxKind::Neutral),
            GridSpec::unit_square(),
        ),
        3 => (two, four_rules(second_kind), GridSpec::unit_square()),
        4 => (
            two,
            vec![(ApproxKind::Neutral, Mean), (second_kind, Mean)],
            GridSpec::unit_square(),
        ),
        5 => (
            three,
            vec![(ApproxKind::Neutral, Mean)],
            GridSpec::unit_cube(),
        ),
        6 => (three, vec![(second_kind, Mean)], GridSpec::unit_cube()),
        _ => {
            return Err(SweepError::InvalidGrid(format!(
                "no table {which}, expected 1 to 6"
            )))
        }
    })
}
