//! Decision stumps over scalar feature responses and the cached response
//! table they feed into selection.

use serde::{Deserialize, Serialize};

use crate::boosting::SampleWeights;
use crate::error::{Error, Result};
use crate::par;
use crate::scatter::ResponseMatrix;

/// Single-feature threshold classifier: `polarity * sign(v - threshold)`
/// with `sign(0) = +1`. Thresholds may be the `±inf` sentinels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub feature_id: usize,
    #[serde(with = "crate::io::float")]
    pub threshold: f64,
    pub polarity: i8,
}

impl DecisionStump {
    #[inline]
    pub fn response(&self, value: f64) -> i8 {
        if value >= self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

/// Feature values for a sample set, feature-major, with each feature's
/// samples pre-sorted so stumps can be retrained under new weights in
/// linear time.
#[derive(Clone, Debug)]
pub struct FeatureValues {
    n_samples: usize,
    n_features: usize,
    values: Vec<f64>,
    order: Vec<u32>,
}

impl FeatureValues {
    pub fn new(n_samples: usize, values: Vec<f64>) -> Result<Self> {
        if n_samples == 0 || values.len() % n_samples != 0 {
            return Err(Error::DimensionMismatch {
                expected: n_samples,
                actual: values.len(),
            });
        }
        let n_features = values.len() / n_samples;
        let orders = par::map_range(n_features, |j| {
            let row = &values[j * n_samples..(j + 1) * n_samples];
            let mut idx: Vec<u32> = (0..n_samples as u32).collect();
            idx.sort_by(|&a, &b| row[a as usize].total_cmp(&row[b as usize]).then(a.cmp(&b)));
            idx
        });
        Ok(Self {
            n_samples,
            n_features,
            values,
            order: orders.concat(),
        })
    }

    /// One row of values per feature.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("feature rows differ in length"));
        }
        Self::new(n, rows.concat())
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, feature: usize) -> &[f64] {
        &self.values[feature * self.n_samples..(feature + 1) * self.n_samples]
    }

    fn sorted(&self, feature: usize) -> &[u32] {
        &self.order[feature * self.n_samples..(feature + 1) * self.n_samples]
    }

    pub fn get(&self, sample: usize, feature: usize) -> f64 {
        self.values[feature * self.n_samples + sample]
    }
}

/// One trained stump per candidate feature with its responses and
/// weighted errors under the build-time weights.
#[derive(Clone, Debug)]
pub struct StumpTable {
    pub stumps: Vec<DecisionStump>,
    pub responses: ResponseMatrix,
    pub errors: Vec<f64>,
}

impl StumpTable {
    pub fn len(&self) -> usize {
        self.stumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stumps.is_empty()
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid > lo && mid <= hi {
        mid
    } else {
        hi
    }
}

/// Optimal `(threshold, polarity)` by one sweep over presorted values.
/// Ties go to the smaller threshold, then polarity `+1`.
fn sweep(values: &[f64], order: &[u32], labels: &[i8], u: &[f64]) -> (f64, i8, f64) {
    let mut total_pos = 0.0;
    let mut total_neg = 0.0;
    for (&y, &w) in labels.iter().zip(u) {
        if y > 0 {
            total_pos += w;
        } else {
            total_neg += w;
        }
    }
    let mut best = (f64::NEG_INFINITY, 1i8, total_neg);
    if total_pos < best.2 {
        best = (f64::NEG_INFINITY, -1, total_pos);
    }
    let mut below_pos = 0.0;
    let mut below_neg = 0.0;
    let n = order.len();
    for k in 0..n {
        let i = order[k] as usize;
        if labels[i] > 0 {
            below_pos += u[i];
        } else {
            below_neg += u[i];
        }
        let threshold = if k + 1 < n {
            let next = values[order[k + 1] as usize];
            if next == values[i] {
                continue;
            }
            midpoint(values[i], next)
        } else {
            f64::INFINITY
        };
        let err_plus = below_pos + (total_neg - below_neg);
        let err_minus = below_neg + (total_pos - below_pos);
        if err_plus < best.2 {
            best = (threshold, 1, err_plus);
        }
        if err_minus < best.2 {
            best = (threshold, -1, err_minus);
        }
    }
    best
}

fn check_inputs(n: usize, labels: &[i8], weights: &SampleWeights) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("stump training needs at least two samples"));
    }
    if labels.len() != n || weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: labels.len().min(weights.len()),
        });
    }
    Ok(())
}

/// Trains the minimum weighted-error stump on one feature.
pub fn train_stump(
    values: &[f64],
    labels: &[i8],
    weights: &SampleWeights,
) -> Result<(DecisionStump, f64)> {
    check_inputs(values.len(), labels, weights)?;
    let mut order: Vec<u32> = (0..values.len() as u32).collect();
    order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]).then(a.cmp(&b)));
    let (threshold, polarity, err) = sweep(values, &order, labels, weights.as_slice());
    Ok((
        DecisionStump {
            feature_id: 0,
            threshold,
            polarity,
        },
        err,
    ))
}

/// Trains every candidate independently under `weights`.
pub fn build_table(
    features: &FeatureValues,
    labels: &[i8],
    weights: &SampleWeights,
) -> Result<StumpTable> {
    let n = features.n_samples();
    check_inputs(n, labels, weights)?;
    let u = weights.as_slice();
    let rows = par::map_range(features.n_features(), |j| {
        let values = features.row(j);
        let (threshold, polarity, err) = sweep(values, features.sorted(j), labels, u);
        let stump = DecisionStump {
            feature_id: j,
            threshold,
            polarity,
        };
        let resp: Vec<i8> = values.iter().map(|&v| stump.response(v)).collect();
        (stump, resp, err)
    });
    let mut stumps = Vec::with_capacity(rows.len());
    let mut errors = Vec::with_capacity(rows.len());
    let mut data = Vec::with_capacity(rows.len() * n);
    for (s, r, e) in rows {
        stumps.push(s);
        errors.push(e);
        data.extend_from_slice(&r);
    }
    Ok(StumpTable {
        stumps,
        responses: ResponseMatrix::from_feature_major(data, labels.to_vec())?,
        errors,
    })
}

/// `Σ u_i [h_i != y_i]`.
pub fn weighted_error(responses: &[i8], labels: &[i8], weights: &SampleWeights) -> f64 {
    responses
        .iter()
        .zip(labels)
        .zip(weights.as_slice())
        .filter(|((h, y), _)| h != y)
        .map(|(_, &u)| u)
        .sum()
}
