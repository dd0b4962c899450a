//! Two-dimensional skewed toy problem: a compact positive cluster inside a
//! ring of negatives plus background clutter. Compares a few rounds of
//! AdaBoost against greedy sparse LDA over the same axis-aligned stumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::boosting::{alpha, init_weights, reweight_adaboost};
use crate::cascade::tune_node_threshold;
use crate::error::{Error, Result};
use crate::scatter::{forward_select, lda_weights, ResponseMatrix, ScatterConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyDatasetSpec {
    pub n_pos: usize,
    pub n_neg: usize,
    pub seed: u64,
    /// Standard deviation of the positive cluster around the origin.
    pub pos_sigma: f64,
    pub ring_radius: f64,
    pub ring_width: f64,
    /// Angular span of the ring in radians, centred on the +x axis.
    pub ring_arc: f64,
    /// Fraction of negatives drawn uniformly from the bounding square.
    pub clutter_fraction: f64,
    /// Half side of the clutter square.
    pub extent: f64,
    /// Candidate thresholds per axis.
    pub grid: usize,
}

impl Default for ToyDatasetSpec {
    fn default() -> Self {
        Self {
            n_pos: 100,
            n_neg: 2000,
            seed: 0,
            pos_sigma: 0.5,
            ring_radius: 2.5,
            ring_width: 0.6,
            ring_arc: std::f64::consts::TAU,
            clutter_fraction: 0.3,
            extent: 5.0,
            grid: 64,
        }
    }
}

impl ToyDatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_pos == 0 {
            return Err(Error::invalid("n_pos must be positive"));
        }
        if self.n_neg < self.n_pos {
            return Err(Error::invalid("n_neg must be at least n_pos"));
        }
        if !(0.0..=1.0).contains(&self.clutter_fraction) {
            return Err(Error::invalid("clutter_fraction must lie in [0, 1]"));
        }
        if !(self.pos_sigma > 0.0 && self.ring_width >= 0.0 && self.extent > 0.0 && self.ring_arc >= 0.0) {
            return Err(Error::invalid("geometry parameters must be positive"));
        }
        if self.grid < 2 {
            return Err(Error::invalid("grid needs at least 2 thresholds"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyData {
    pub points: Vec<[f64; 2]>,
    /// Positives first.
    pub labels: Vec<i8>,
}

pub fn generate_toy(spec: &ToyDatasetSpec) -> Result<ToyData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pos = Normal::new(0.0, spec.pos_sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let ring = Normal::new(spec.ring_radius, spec.ring_width.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut points = Vec::with_capacity(spec.n_pos + spec.n_neg);
    for _ in 0..spec.n_pos {
        points.push([pos.sample(&mut rng), pos.sample(&mut rng)]);
    }
    for _ in 0..spec.n_neg {
        if rng.random_bool(spec.clutter_fraction) {
            points.push([
                rng.random_range(-spec.extent..spec.extent),
                rng.random_range(-spec.extent..spec.extent),
            ]);
        } else {
            let r: f64 = ring.sample(&mut rng);
            let t: f64 = spec.ring_arc * (rng.random::<f64>() - 0.5);
            points.push([r * t.cos(), r * t.sin()]);
        }
    }
    let mut labels = vec![1i8; spec.n_pos];
    labels.resize(spec.n_pos + spec.n_neg, -1);
    Ok(ToyData { points, labels })
}

/// Axis-aligned stump `polarity * sign(p[axis] - threshold)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyStump {
    pub axis: usize,
    pub threshold: f64,
    pub polarity: i8,
    /// Selection order, starting at 1.
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyMethodReport {
    pub stumps: Vec<ToyStump>,
    pub coefficients: Vec<f64>,
    /// Negatives accepted at the threshold keeping >= 99% of positives.
    pub false_positives: usize,
    pub detection_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub seed: u64,
    pub adaboost: ToyMethodReport,
    pub gslda: ToyMethodReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyTrials {
    pub trials: Vec<ToyReport>,
    /// Trials with GSLDA false positives <= AdaBoost's.
    pub gslda_wins: usize,
    pub win_fraction: f64,
}

/// Shared candidates: `grid` evenly spaced thresholds per axis spanning
/// the data range, each with positive polarity. Negated responses are
/// tried by the boosting learner; LDA is sign-invariant.
fn candidates(data: &ToyData, grid: usize) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for axis in 0..2 {
        let (lo, hi) = data
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[axis]), h.max(p[axis])));
        for g in 1..=grid {
            out.push((axis, lo + (hi - lo) * g as f64 / (grid + 1) as f64));
        }
    }
    out
}

fn response(p: &[f64; 2], axis: usize, threshold: f64) -> i8 {
    if p[axis] >= threshold {
        1
    } else {
        -1
    }
}

fn evaluate(
    data: &ToyData,
    cols: &[Vec<i8>],
    stumps: Vec<ToyStump>,
    coefficients: Vec<f64>,
) -> ToyMethodReport {
    let n = data.labels.len();
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            stumps
                .iter()
                .zip(&coefficients)
                .zip(cols)
                .map(|((s, w), c)| w * f64::from(s.polarity * c[i]))
                .sum()
        })
        .collect();
    let pos: Vec<f64> = (0..n).filter(|&i| data.labels[i] > 0).map(|i| scores[i]).collect();
    let theta = tune_node_threshold(&pos, 0.99);
    let accepted = |i: usize| scores[i] + theta >= 0.0;
    let tp = (0..n).filter(|&i| data.labels[i] > 0 && accepted(i)).count();
    ToyMethodReport {
        stumps,
        coefficients,
        false_positives: (0..n).filter(|&i| data.labels[i] < 0 && accepted(i)).count(),
        detection_rate: tp as f64 / pos.len() as f64,
    }
}

/// Trains both `rounds`-stump classifiers on one generated data set.
pub fn run_toy(spec: &ToyDatasetSpec, rounds: usize) -> Result<ToyReport> {
    if rounds == 0 {
        return Err(Error::invalid("rounds must be positive"));
    }
    let data = generate_toy(spec)?;
    let cands = candidates(&data, spec.grid);
    let columns: Vec<Vec<i8>> = cands
        .iter()
        .map(|&(axis, t)| data.points.iter().map(|p| response(p, axis, t)).collect())
        .collect();

    // AdaBoost over the candidates and their negations.
    let mut w = init_weights(&data.labels)?;
    let mut ada_stumps = Vec::new();
    let mut ada_cols = Vec::new();
    let mut ada_coefs = Vec::new();
    for round in 1..=rounds {
        let mut best: Option<(usize, i8, f64)> = None;
        for (c, col) in columns.iter().enumerate() {
            let err_pos: f64 = col
                .iter()
                .zip(&data.labels)
                .zip(w.as_slice())
                .filter(|((h, y), _)| h != y)
                .map(|(_, u)| u)
                .sum();
            for (pol, err) in [(1i8, err_pos), (-1, 1.0 - err_pos)] {
                if best.is_none_or(|(_, _, e)| err < e) {
                    best = Some((c, pol, err));
                }
            }
        }
        let (c, pol, err) = best.expect("candidate grid is never empty");
        let a = alpha(err, 1e-8);
        let resp: Vec<i8> = columns[c].iter().map(|&h| pol * h).collect();
        w = reweight_adaboost(&w, &resp, &data.labels, a)?;
        ada_stumps.push(ToyStump { axis: cands[c].0, threshold: cands[c].1, polarity: pol, order: round });
        ada_cols.push(columns[c].clone());
        ada_coefs.push(a);
    }
    let adaboost = evaluate(&data, &ada_cols, ada_stumps, ada_coefs);

    // Greedy sparse LDA over the same candidates.
    let rm = ResponseMatrix::from_columns(&columns, data.labels.clone())?;
    let cfg = ScatterConfig {
        max_features: rounds,
        ..ScatterConfig::default()
    };
    let state = forward_select(&rm, &cfg, None)?;
    let weights = lda_weights(&state)?;
    let gs_stumps: Vec<ToyStump> = state
        .selected
        .iter()
        .enumerate()
        .map(|(k, &c)| ToyStump { axis: cands[c].0, threshold: cands[c].1, polarity: 1, order: k + 1 })
        .collect();
    let gs_cols: Vec<Vec<i8>> = state.selected.iter().map(|&c| columns[c].clone()).collect();
    let gslda = evaluate(&data, &gs_cols, gs_stumps, weights);

    Ok(ToyReport { seed: spec.seed, adaboost, gslda })
}

/// Repeats [`run_toy`] for seeds `spec.seed .. spec.seed + trials`.
pub fn run_toy_trials(spec: &ToyDatasetSpec, rounds: usize, trials: usize) -> Result<ToyTrials> {
    let reports = (0..trials as u64)
        .map(|t| run_toy(&ToyDatasetSpec { seed: spec.seed + t, ..*spec }, rounds))
        .collect::<Result<Vec<_>>>()?;
    let wins = reports
        .iter()
        .filter(|r| r.gslda.false_positives <= r.adaboost.false_positives)
        .count();
    Ok(ToyTrials {
        win_fraction: if trials == 0 { 0.0 } else { wins as f64 / trials as f64 },
        gslda_wins: wins,
        trials: reports,
    })
}
